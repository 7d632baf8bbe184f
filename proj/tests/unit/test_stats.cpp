// Copyright 2026 The Lacuna Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "lacuna/error.hpp"
#include "lacuna/stats.hpp"

using namespace lacuna;
using V = std::vector<double>;

// Reference values below were computed once with SciPy 1.15 and are pinned.

namespace {

// Every split of the pooled sample into groups of the original sizes.
template <typename Fn>
void for_each_split(const V& pooled, std::size_t m, Fn&& fn) {
  std::vector<bool> pick(pooled.size(), false);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(m), true);
  do {
    V a, b;
    for (std::size_t i = 0; i < pooled.size(); ++i) (pick[i] ? a : b).push_back(pooled[i]);
    fn(a, b);
  } while (std::prev_permutation(pick.begin(), pick.end()));
}

double u_stat(const V& a, const V& b) {
  double u = 0;
  for (double x : a)
    for (double y : b) u += x > y ? 1.0 : x == y ? 0.5 : 0.0;
  return u;
}

double mean_of(const V& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

TEST_CASE("descriptive helpers") {
  V x = {1, 3, 4, 10};
  CHECK(mean(x) == 4.5);
  CHECK(median(x) == 3.5);
  CHECK(sample_variance(x) == doctest::Approx(15.0));
  CHECK(quantile(x, 0.1) == doctest::Approx(1.6));
  CHECK(quantile(x, 0.9) == doctest::Approx(8.2));
  CHECK(midranks(V{10, 20, 20, 5}) == V{2, 3.5, 3.5, 1});
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) == derive_seed(1, 0));
  CHECK(sidedness_from_string(to_string(Sidedness::kLess)) == Sidedness::kLess);
  CHECK(to_string(Sidedness::kGreater) == "one_sided_greater");
}

TEST_CASE("Welch t") {
  V a = {2.1, 3.4, 1.9, 5.6, 4.4, 3.3}, b = {1.2, 2.2, 0.9, 1.8, 2.5};
  auto r = welch_t(a, b, Sidedness::kGreater);
  CHECK(r.statistic == doctest::Approx(2.684726182702015).epsilon(1e-10));
  CHECK(r.p_value == doctest::Approx(0.014835606830835376).epsilon(1e-8));
  CHECK(*r.df == doctest::Approx(7.421744584450867).epsilon(1e-10));
  CHECK(welch_t(a, b, Sidedness::kTwoSided).p_value == doctest::Approx(0.02967121366167075).epsilon(1e-8));
  CHECK(welch_t(b, a, Sidedness::kLess).p_value == doctest::Approx(0.014835606830835376).epsilon(1e-8));
  V c = {1, 1, 1}, d = {2, 2};
  CHECK_THROWS_AS(welch_t(c, d, Sidedness::kTwoSided), DegenerateSample);
}

TEST_CASE("Mann-Whitney exact small cases") {
  auto r = mann_whitney_u(V{3, 4}, V{1, 2}, Sidedness::kGreater);
  CHECK(r.exact);
  CHECK(r.statistic == 4.0);
  CHECK(r.p_value == 1.0 / 6.0);
  CHECK(mann_whitney_u(V{3, 4}, V{1, 2}, Sidedness::kLess).p_value == 1.0);
  CHECK(mann_whitney_u(V{3, 4}, V{1, 2}, Sidedness::kTwoSided).p_value == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("Mann-Whitney exact agrees with enumeration") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t m = 1 + rng() % 6, n = 1 + rng() % 6;
    V pooled(m + n);
    std::iota(pooled.begin(), pooled.end(), 1.0);
    std::shuffle(pooled.begin(), pooled.end(), rng);
    V a(pooled.begin(), pooled.begin() + static_cast<long>(m)), b(pooled.begin() + static_cast<long>(m), pooled.end());
    const double u = u_stat(a, b);
    double ge = 0, le = 0, total = 0;
    for_each_split(pooled, m, [&](const V& x, const V& y) {
      const double v = u_stat(x, y);
      ge += v >= u - 1e-9;
      le += v <= u + 1e-9;
      ++total;
    });
    auto g = mann_whitney_u(a, b, Sidedness::kGreater);
    auto l = mann_whitney_u(a, b, Sidedness::kLess);
    CHECK(g.exact);
    CHECK(g.statistic == u);
    CHECK(g.p_value == doctest::Approx(ge / total).epsilon(1e-12));
    CHECK(l.p_value == doctest::Approx(le / total).epsilon(1e-12));
  }
}

TEST_CASE("Mann-Whitney normal approximation with ties") {
  V x = {1, 2, 2, 3, 3, 3, 4, 5, 5, 6}, y = {2, 3, 4, 4, 5, 5, 6, 7, 7, 8, 9};
  auto r = mann_whitney_u(x, y, Sidedness::kLess);
  CHECK_FALSE(r.exact);
  CHECK(r.statistic == 25.0);
  CHECK(r.p_value == doctest::Approx(0.017958684541565455).epsilon(1e-9));
  CHECK(mann_whitney_u(x, y, Sidedness::kTwoSided).p_value ==
        doctest::Approx(0.03591736908313091).epsilon(1e-9));
  // Forcing the approximation on tie-free data.
  auto approx = mann_whitney_u(V{3, 4, 5}, V{1, 2}, Sidedness::kGreater, 0);
  CHECK_FALSE(approx.exact);
}

TEST_CASE("KS right tail") {
  V a = {3, 4, 5, 6}, b = {1, 2, 3.5, 4.5};
  auto r = ks_test_right(a, b);
  // F_b - F_a peaks at 0.5 (after 1 and 2 in b, nothing in a).
  CHECK(r.statistic == doctest::Approx(0.5));
  CHECK(r.p_value == doctest::Approx(std::exp(-2.0 * 16 * 0.25 / 8)));
  CHECK(ks_test_right(b, a).statistic == doctest::Approx(0.0));
  CHECK(ks_test_right(b, a).p_value == doctest::Approx(1.0));
}

TEST_CASE("permutation test") {
  auto r = permutation_mean_test(V{2}, V{1}, 1000, 1, Sidedness::kGreater);
  CHECK(r.exact);
  CHECK(r.p_value == 0.5);

  V a = {5.1, 6.2, 4.8, 7.0}, b = {3.9, 4.4, 5.0, 4.1, 3.8};
  const double obs = mean_of(a) - mean_of(b);
  V pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  double ge = 0, total = 0, two = 0;
  for_each_split(pooled, a.size(), [&](const V& x, const V& y) {
    const double d = mean_of(x) - mean_of(y);
    ge += d >= obs - 1e-12;
    two += std::abs(d) >= std::abs(obs) - 1e-12;
    ++total;
  });
  auto g = permutation_mean_test(a, b, 1000, 7, Sidedness::kGreater);
  CHECK(g.exact);
  CHECK(g.p_value == doctest::Approx(ge / total).epsilon(1e-12));
  CHECK(permutation_mean_test(a, b, 1000, 7, Sidedness::kTwoSided).p_value ==
        doctest::Approx(two / total).epsilon(1e-12));

  auto mc1 = permutation_mean_test(a, b, 5000, 7, Sidedness::kGreater, 10);
  auto mc2 = permutation_mean_test(a, b, 5000, 7, Sidedness::kGreater, 10);
  CHECK_FALSE(mc1.exact);
  CHECK(mc1.p_value == mc2.p_value);
  CHECK(mc1.p_value == doctest::Approx(ge / total).epsilon(0.3));
  CHECK(mc1.p_value >= 1.0 / 5001.0);
}

TEST_CASE("Holm") {
  auto adj = holm_adjust(V{0.01, 0.04, 0.03});
  CHECK(std::abs(adj[0] - 0.03) < 1e-12);
  CHECK(std::abs(adj[1] - 0.06) < 1e-12);
  CHECK(std::abs(adj[2] - 0.06) < 1e-12);
  CHECK(holm_adjust(V{0.5, 0.9}) == V{1.0, 1.0});
  CHECK(holm_adjust(V{}).empty());
  CHECK_THROWS_AS(holm_adjust(V{0.1, 1.5}), InvalidArgument);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 1000; ++i) {
    V p(1 + rng() % 10);
    for (auto& x : p) x = u(rng);
    auto h = holm_adjust(p);
    for (std::size_t k = 0; k < p.size(); ++k) {
      CHECK(h[k] >= p[k]);
      CHECK(h[k] <= 1.0);
    }
  }
}

TEST_CASE("paired tests") {
  V d1 = {5.1, 4.8, 6.0, 5.5, 5.9, 4.2, 6.3, 5.0}, d2 = {4.9, 4.9, 5.1, 5.0, 5.2, 4.4, 5.8, 5.0};
  auto t = paired_t(d1, d2, Sidedness::kTwoSided);
  CHECK(t.statistic == doctest::Approx(2.2208908701343733).epsilon(1e-10));
  CHECK(t.p_value == doctest::Approx(0.06179596030021998).epsilon(1e-8));

  auto w = wilcoxon_signed_rank(V{1, 2, 3}, V{0, 0, 0}, Sidedness::kGreater);
  CHECK(w.exact);
  CHECK(w.p_value == 0.125);

  V e1, e2;
  for (int i = 3; i <= 25; ++i) e1.push_back(i);
  e2 = {2, 5, 4, 5, 9, 6, 6, 12, 9, 11, 14, 11, 15, 18, 16, 16, 20, 23, 18, 22, 22, 20, 24};
  auto wa = wilcoxon_signed_rank(e1, e2, Sidedness::kGreater);
  CHECK_FALSE(wa.exact);
  CHECK(wa.p_value == doctest::Approx(0.08147347585702036).epsilon(1e-8));
  CHECK_THROWS_AS(wilcoxon_signed_rank(V{1, 2}, V{1, 2}, Sidedness::kTwoSided), DegenerateSample);

  // Wilcoxon exact agrees with sign enumeration on tie-free magnitudes.
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng() % 10;
    V a(n), b(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) a[i] = static_cast<double>(i + 1) * (rng() % 2 ? 1 : -1);
    double w_plus = 0;
    for (double x : a) w_plus += x > 0 ? std::abs(x) : 0;
    double ge = 0;
    for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) s += (mask >> i & 1) ? static_cast<double>(i + 1) : 0;
      ge += s >= w_plus;
    }
    CHECK(wilcoxon_signed_rank(a, b, Sidedness::kGreater).p_value ==
          doctest::Approx(ge / static_cast<double>(1ULL << n)).epsilon(1e-12));
  }
}

TEST_CASE("sign test") {
  V a(14, 0.0), b(14, 1.0);
  a[0] = a[1] = 2.0;
  auto s = sign_test(a, b, Sidedness::kTwoSided);
  CHECK(s.p_value == doctest::Approx(0.012939453125).epsilon(1e-12));
  CHECK(sign_test(a, b, Sidedness::kLess).p_value == doctest::Approx(0.0064697265625).epsilon(1e-12));
  CHECK_THROWS_AS(sign_test(V{1}, V{1}, Sidedness::kTwoSided), DegenerateSample);
}

TEST_CASE("effect sizes") {
  V a = {2.1, 3.4, 1.9, 5.6, 4.4, 3.3}, b = {1.2, 2.2, 0.9, 1.8, 2.5};
  const double sp = std::sqrt((5 * sample_variance(a) + 4 * sample_variance(b)) / 9);
  const double g = (mean_of(a) - mean_of(b)) / sp * (1 - 3.0 / (4 * 11 - 9));
  CHECK(hedges_g(a, b).value == doctest::Approx(g).epsilon(1e-12));
  auto c = cliffs_delta(V{3, 4}, V{1, 2, 3});
  CHECK(c.value == doctest::Approx(5.0 / 6.0).epsilon(1e-12));  // 5 wins, 1 tie, 0 losses
  CHECK(*c.auc == doctest::Approx(auc_from_cliffs_delta(c.value)));
  CHECK(std::abs(auc_from_cliffs_delta(0.149) - 0.5745) < 1e-12);
}

TEST_CASE("Spearman and Kendall W") {
  auto r = spearman_rho(V{1, 2, 2, 3, 4, 4, 5}, V{2, 1, 3, 3, 5, 4, 6});
  CHECK(r.rho == doctest::Approx(0.9082951062292476).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(0.004653274025986364).epsilon(1e-8));
  CHECK(spearman_rho(V{1, 2, 3}, V{3, 2, 1}).rho == doctest::Approx(-1.0));
  CHECK_THROWS_AS(spearman_rho(V{1, 1, 1}, V{1, 2, 3}), DegenerateSample);

  CHECK(kendall_w({{1, 2, 3, 4}, {1, 3, 2, 4}, {2, 1, 3, 4}}) == doctest::Approx(0.7777777777777778));
  CHECK(kendall_w({{1, 2, 3}, {1, 2, 3}}) == doctest::Approx(1.0));
  CHECK(kendall_w({{1, 2, 3, 4}, {4, 3, 2, 1}}) == doctest::Approx(0.0));
}

TEST_CASE("bootstrap intervals") {
  V x = {2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 2.8, 3.9, 4.1, 3.0};
  Statistic m = [](std::span<const double> s) { return mean(s); };
  auto p = bootstrap_ci(x, m, 0.95, CiMethod::kPercentile, 2000, 1);
  auto p2 = bootstrap_ci(x, m, 0.95, CiMethod::kPercentile, 2000, 1);
  CHECK(p.lower == p2.lower);
  CHECK(p.lower < mean(x));
  CHECK(p.upper > mean(x));
  auto bca = bootstrap_ci(x, m, 0.95, CiMethod::kBCa, 2000, 1);
  CHECK(bca.method == CiMethod::kBCa);
  CHECK(bca.lower < bca.upper);
  auto flat = bootstrap_ci(V{1, 1, 1, 1}, m, 0.95, CiMethod::kBCa, 200, 1);
  CHECK(flat.warning);
  CHECK(flat.method == CiMethod::kPercentile);
  CHECK_THROWS_AS(bootstrap_ci(x, m, 0.95, CiMethod::kPercentile, 10, 1), InvalidArgument);

  // Coverage of the mean of a normal sample.
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd(10.0, 2.0);
  int covered = 0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    V s(30);
    for (auto& v : s) v = nd(rng);
    auto ci = bootstrap_ci(s, m, 0.9, CiMethod::kBCa, 1000, static_cast<std::uint64_t>(rep));
    covered += ci.lower <= 10.0 && 10.0 <= ci.upper;
  }
  CHECK(covered >= 160);
  CHECK(covered <= 196);

  TwoSampleStatistic diff = [](std::span<const double> a, std::span<const double> b) {
    return mean(a) - mean(b);
  };
  auto two = bootstrap_ci(x, V{1, 2, 1.5, 2.5, 1.2}, diff, 0.95, CiMethod::kPercentile, 1000, 3);
  CHECK(two.lower > 0);
}

TEST_CASE("paired suite and comparison") {
  V a(14, 0.0), b(14, 1.0);
  a[0] = a[1] = 2.0;
  PairedOptions po;
  po.bootstrap_iterations = 500;
  auto s = paired_suite(a, b, po);
  CHECK(s.n == 14);
  CHECK(s.zero_differences == 0);
  CHECK(s.positive_fraction == doctest::Approx(2.0 / 14.0));
  CHECK(s.sign.p_value == doctest::Approx(0.012939453125));

  V seen = {0.35, 0.31, 0.29, 0.40, 0.33, 0.30, 0.28, 0.36};
  V unseen = {0.27, 0.26, 0.30, 0.25, 0.29, 0.24, 0.28};
  ComparisonOptions co;
  co.bootstrap_iterations = 500;
  co.permutation_iterations = 500;
  co.seed = 11;
  auto c1 = compare_samples("agg", seen, unseen, co);
  auto c2 = compare_samples("agg", seen, unseen, co);
  REQUIRE(c1.tests.size() == 4);
  CHECK(c1.holm_p_values.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(c1.tests[i].p_value == c2.tests[i].p_value);
    CHECK(c1.holm_p_values[i] >= c1.tests[i].p_value);
  }
  CHECK(c1.mean_difference_ci.lower == c2.mean_difference_ci.lower);
  CHECK(c1.mean_difference > 0);
  CHECK(to_json(c1)["tests"].size() == 4);
}
