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

#include "lacuna/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "rng.hpp"

namespace lacuna {

namespace bm = boost::math;

std::string_view to_string(Sidedness s) {
  switch (s) {
    case Sidedness::kGreater: return "one_sided_greater";
    case Sidedness::kLess: return "one_sided_less";
    case Sidedness::kTwoSided: return "two_sided";
  }
  return "two_sided";
}

Sidedness sidedness_from_string(std::string_view s) {
  if (s == "one_sided_greater" || s == "greater") return Sidedness::kGreater;
  if (s == "one_sided_less" || s == "less") return Sidedness::kLess;
  if (s == "two_sided") return Sidedness::kTwoSided;
  throw InvalidArgument("unknown sidedness: " + std::string(s));
}

std::string_view to_string(EffectSize::Kind kind) {
  return kind == EffectSize::Kind::kHedgesG ? "hedges_g" : "cliffs_delta";
}

std::string_view to_string(CiMethod m) { return m == CiMethod::kBCa ? "BCa" : "percentile"; }

CiMethod ci_method_from_string(std::string_view s) {
  if (s == "BCa" || s == "bca") return CiMethod::kBCa;
  if (s == "percentile") return CiMethod::kPercentile;
  throw InvalidArgument("unknown interval method: " + std::string(s));
}

namespace {

double clamp_p(double p) {
  if (std::isnan(p)) return 1.0;
  return std::clamp(p, 0.0, 1.0);
}

void require_nonempty(std::span<const double> x, const char* what) {
  if (x.empty()) throw InvalidArgument(std::string(what) + ": empty sample");
}

void require_finite(std::span<const double> x, const char* what) {
  for (double v : x)
    if (!std::isfinite(v)) throw InvalidArgument(std::string(what) + ": non-finite value");
}

// Combine the upper and lower tail probabilities into the requested p.
double sided_p(double upper, double lower, Sidedness s) {
  switch (s) {
    case Sidedness::kGreater: return clamp_p(upper);
    case Sidedness::kLess: return clamp_p(lower);
    case Sidedness::kTwoSided: return clamp_p(2.0 * std::min(upper, lower));
  }
  return 1.0;
}

double normal_sf(double z) { return bm::cdf(bm::complement(bm::normal(), z)); }
double normal_cdf(double z) { return bm::cdf(bm::normal(), z); }

// C(n, k), saturating at cap + 1.
std::uint64_t binomial_count(std::uint64_t n, std::uint64_t k, std::uint64_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  long double c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    c = c * static_cast<long double>(n - k + i) / static_cast<long double>(i);
    if (c > static_cast<long double>(cap)) return cap + 1;
  }
  return static_cast<std::uint64_t>(std::llround(c));
}

bool has_ties(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return std::adjacent_find(v.begin(), v.end()) != v.end();
}

// Sum over tie groups of (t^3 - t).
double tie_term(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double total = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    double t = static_cast<double>(j - i);
    total += t * t * t - t;
    i = j;
  }
  return total;
}

// Null distribution of the Mann-Whitney U for sizes (m, n) without ties:
// coefficients of the Gaussian binomial [m+n choose m]_q.
std::vector<std::int64_t> mwu_null_counts(std::size_t m, std::size_t n) {
  if (m > n) std::swap(m, n);
  const std::size_t len = m * n + 1;
  std::vector<std::int64_t> poly(len, 0);
  poly[0] = 1;
  std::size_t degree = 0;
  for (std::size_t i = 1; i <= m; ++i) {
    const std::size_t mul = n + i;
    // multiply by (1 - q^mul)
    for (std::size_t d = std::min(len - 1, degree + mul); d >= mul; --d) {
      poly[d] -= poly[d - mul];
      if (d == mul) break;
    }
    degree += n;
    // divide by (1 - q^i)
    for (std::size_t d = i; d <= degree; ++d) poly[d] += poly[d - i];
    for (std::size_t d = degree + 1; d < len; ++d) poly[d] = 0;
  }
  return poly;
}

// Null distribution of the signed-rank sum W+ for ranks 1..n.
std::vector<std::uint64_t> signed_rank_null_counts(std::size_t n) {
  std::vector<std::uint64_t> c(n * (n + 1) / 2 + 1, 0);
  c[0] = 1;
  std::size_t top = 0;
  for (std::size_t r = 1; r <= n; ++r) {
    top += r;
    for (std::size_t s = top; s >= r; --s) c[s] += c[s - r];
  }
  return c;
}

double tolerance_for(double x) { return 1e-12 * std::max(1.0, std::abs(x)); }

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return detail::derive_seed(seed, stream);
}

double mean(std::span<const double> x) {
  require_nonempty(x, "mean");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) throw InvalidArgument("variance needs at least 2 values");
  const double m = mean(x);
  double ss = 0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double quantile(std::span<const double> x, double q) {
  require_nonempty(x, "quantile");
  if (!(q >= 0 && q <= 1)) throw InvalidArgument("quantile level outside [0,1]");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double h = (static_cast<double>(s.size()) - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

double median(std::span<const double> x) { return quantile(x, 0.5); }

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && values[idx[j]] == values[idx[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = r;
    i = j;
  }
  return ranks;
}

// ---------------------------------------------------------------------------

TestResult welch_t(std::span<const double> a, std::span<const double> b, Sidedness sidedness) {
  if (a.size() < 2 || b.size() < 2) throw InvalidArgument("welch_t needs at least 2 values per sample");
  require_finite(a, "welch_t");
  require_finite(b, "welch_t");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double va = sample_variance(a) / na, vb = sample_variance(b) / nb;
  const double se2 = va + vb;
  if (se2 <= 0) throw DegenerateSample("welch_t: both samples have zero variance");
  const double t = (mean(a) - mean(b)) / std::sqrt(se2);
  const double df = se2 * se2 / (va * va / (na - 1) + vb * vb / (nb - 1));
  bm::students_t dist(df);
  const double upper = bm::cdf(bm::complement(dist, t));
  const double lower = bm::cdf(dist, t);
  TestResult r{"welch_t", t, 0, sidedness, a.size(), b.size(), false, df};
  r.p_value = sidedness == Sidedness::kTwoSided
                  ? clamp_p(2.0 * bm::cdf(bm::complement(dist, std::abs(t))))
                  : sided_p(upper, lower, sidedness);
  return r;
}

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                          Sidedness sidedness, std::uint64_t exact_cutoff) {
  require_nonempty(a, "mann_whitney_u");
  require_nonempty(b, "mann_whitney_u");
  require_finite(a, "mann_whitney_u");
  require_finite(b, "mann_whitney_u");
  const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = midranks(pooled);
  double r1 = 0;
  for (std::size_t i = 0; i < n1; ++i) r1 += ranks[i];
  const double u = r1 - static_cast<double>(n1) * static_cast<double>(n1 + 1) / 2.0;

  TestResult r{"mann_whitney_u", u, 1.0, sidedness, n1, n2, false, std::nullopt};
  const bool ties = has_ties(pooled);
  if (!ties && binomial_count(n, n1, exact_cutoff) <= exact_cutoff) {
    const auto counts = mwu_null_counts(n1, n2);
    const auto uo = static_cast<std::size_t>(std::llround(u));
    double total = 0, ge = 0, le = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      const double c = static_cast<double>(counts[k]);
      total += c;
      if (k >= uo) ge += c;
      if (k <= uo) le += c;
    }
    r.exact = true;
    r.p_value = sided_p(ge / total, le / total, sidedness);
    return r;
  }
  const double mu = static_cast<double>(n1) * static_cast<double>(n2) / 2.0;
  const double dn = static_cast<double>(n);
  const double var = static_cast<double>(n1) * static_cast<double>(n2) / 12.0 *
                     ((dn + 1.0) - tie_term(pooled) / (dn * (dn - 1.0)));
  if (var <= 0) return r;  // every value tied
  const double sd = std::sqrt(var);
  const double upper = normal_sf((u - mu - 0.5) / sd);
  const double lower = normal_cdf((u - mu + 0.5) / sd);
  r.p_value = sidedness == Sidedness::kTwoSided
                  ? clamp_p(2.0 * normal_sf(std::max(0.0, std::abs(u - mu) - 0.5) / sd))
                  : sided_p(upper, lower, sidedness);
  return r;
}

TestResult ks_test_right(std::span<const double> a, std::span<const double> b) {
  require_nonempty(a, "ks_test_right");
  require_nonempty(b, "ks_test_right");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double m = static_cast<double>(sa.size()), n = static_cast<double>(sb.size());
  double d = 0;
  std::size_t i = 0, j = 0;
  while (i < sa.size() || j < sb.size()) {
    double x;
    if (j >= sb.size()) x = sa[i];
    else if (i >= sa.size()) x = sb[j];
    else x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] <= x) ++i;
    while (j < sb.size() && sb[j] <= x) ++j;
    d = std::max(d, static_cast<double>(j) / n - static_cast<double>(i) / m);
  }
  const double p = clamp_p(std::exp(-2.0 * m * n * d * d / (m + n)));
  return {"ks_right", d, p, Sidedness::kGreater, sa.size(), sb.size(), false, std::nullopt};
}

TestResult permutation_mean_test(std::span<const double> a, std::span<const double> b,
                                 std::size_t iterations, std::uint64_t seed,
                                 Sidedness sidedness, std::uint64_t exact_cutoff) {
  require_nonempty(a, "permutation_mean_test");
  require_nonempty(b, "permutation_mean_test");
  if (iterations < 1) throw InvalidArgument("permutation_mean_test: iterations must be >= 1");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n1 = a.size(), n = pooled.size();
  const double total = std::accumulate(pooled.begin(), pooled.end(), 0.0);
  const double d1 = static_cast<double>(n1), d2 = static_cast<double>(n - n1);
  auto diff_for = [&](double sum_a) { return sum_a / d1 - (total - sum_a) / d2; };
  const double observed = diff_for(std::accumulate(a.begin(), a.end(), 0.0));
  const double tol = tolerance_for(observed);
  std::size_t ge = 0, le = 0, abs_ge = 0;
  auto tally = [&](double d) {
    if (d >= observed - tol) ++ge;
    if (d <= observed + tol) ++le;
    if (std::abs(d) >= std::abs(observed) - tol) ++abs_ge;
  };

  TestResult r{"permutation_mean", observed, 1.0, sidedness, n1, n - n1, false, std::nullopt};
  const std::uint64_t count = binomial_count(n, n1, exact_cutoff);
  if (count <= exact_cutoff) {
    std::vector<std::size_t> idx(n1);
    std::iota(idx.begin(), idx.end(), 0);
    std::size_t seen = 0;
    while (true) {
      double s = 0;
      for (auto k : idx) s += pooled[k];
      tally(diff_for(s));
      ++seen;
      std::size_t k = n1;
      while (k > 0 && idx[k - 1] == n - n1 + k - 1) --k;
      if (k == 0) break;
      ++idx[k - 1];
      for (std::size_t t = k; t < n1; ++t) idx[t] = idx[t - 1] + 1;
    }
    const double c = static_cast<double>(seen);
    r.exact = true;
    r.p_value = sidedness == Sidedness::kGreater ? ge / c
                : sidedness == Sidedness::kLess  ? le / c
                                                 : abs_ge / c;
    r.p_value = clamp_p(r.p_value);
    return r;
  }
  std::mt19937_64 rng(seed);
  std::vector<double> work = pooled;
  for (std::size_t it = 0; it < iterations; ++it) {
    double s = 0;
    for (std::size_t i = 0; i < n1; ++i) {
      std::size_t j = i + detail::uniform_index(rng, n - i);
      std::swap(work[i], work[j]);
      s += work[i];
    }
    tally(diff_for(s));
  }
  const double denom = static_cast<double>(iterations) + 1.0;
  const std::size_t hits = sidedness == Sidedness::kGreater ? ge
                           : sidedness == Sidedness::kLess  ? le
                                                            : abs_ge;
  r.p_value = clamp_p((1.0 + static_cast<double>(hits)) / denom);
  return r;
}

std::vector<double> holm_adjust(std::span<const double> p_values) {
  for (double p : p_values)
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("holm_adjust: p-value outside [0,1]");
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return p_values[i] < p_values[j]; });
  std::vector<double> out(m);
  double running = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const double adj = std::min(1.0, static_cast<double>(m - j) * p_values[order[j]]);
    running = std::max(running, adj);
    out[order[j]] = running;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

IntervalEstimate percentile_interval(std::vector<double>& boot, double level) {
  const double alpha = 1.0 - level;
  IntervalEstimate ci;
  ci.level = level;
  ci.method = CiMethod::kPercentile;
  ci.lower = quantile(boot, alpha / 2.0);
  ci.upper = quantile(boot, 1.0 - alpha / 2.0);
  return ci;
}

IntervalEstimate bca_interval(std::vector<double>& boot, double theta_hat,
                              const std::vector<double>& jackknife, double level) {
  auto fallback = [&](std::string why) {
    IntervalEstimate ci = percentile_interval(boot, level);
    ci.warning = "BCa unavailable (" + why + "); percentile interval reported";
    return ci;
  };
  const auto [mn, mx] = std::minmax_element(boot.begin(), boot.end());
  if (*mn == *mx) return fallback("constant bootstrap distribution");
  double less = 0, equal = 0;
  for (double v : boot) {
    if (v < theta_hat) less += 1;
    else if (v == theta_hat) equal += 1;
  }
  const double prop = (less + 0.5 * equal) / static_cast<double>(boot.size());
  if (prop <= 0.0 || prop >= 1.0) return fallback("estimate outside bootstrap distribution");
  const double z0 = bm::quantile(bm::normal(), prop);

  const double jmean = std::accumulate(jackknife.begin(), jackknife.end(), 0.0) /
                       static_cast<double>(jackknife.size());
  double num = 0, den = 0;
  for (double v : jackknife) {
    const double d = jmean - v;
    num += d * d * d;
    den += d * d;
  }
  const double accel = den > 0 ? num / (6.0 * std::pow(den, 1.5)) : 0.0;

  const double alpha = 1.0 - level;
  auto adjusted = [&](double q) {
    const double z = bm::quantile(bm::normal(), q);
    return normal_cdf(z0 + (z0 + z) / (1.0 - accel * (z0 + z)));
  };
  const double a1 = adjusted(alpha / 2.0), a2 = adjusted(1.0 - alpha / 2.0);
  if (!std::isfinite(a1) || !std::isfinite(a2) || !(a1 >= 0 && a2 <= 1))
    return fallback("non-finite adjustment");
  IntervalEstimate ci;
  ci.level = level;
  ci.method = CiMethod::kBCa;
  ci.lower = quantile(boot, a1);
  ci.upper = quantile(boot, a2);
  if (ci.lower > ci.upper) std::swap(ci.lower, ci.upper);
  return ci;
}

void check_bootstrap_args(double level, std::size_t iterations) {
  if (!(level > 0 && level < 1)) throw InvalidArgument("bootstrap level must be in (0,1)");
  if (iterations < 100) throw InvalidArgument("bootstrap needs at least 100 iterations");
}

}  // namespace

IntervalEstimate bootstrap_ci(std::span<const double> sample, const Statistic& statistic,
                              double level, CiMethod method, std::size_t iterations,
                              std::uint64_t seed) {
  require_nonempty(sample, "bootstrap_ci");
  check_bootstrap_args(level, iterations);
  const std::size_t n = sample.size();
  std::mt19937_64 rng(seed);
  std::vector<double> boot(iterations), draw(n);
  for (std::size_t it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) draw[i] = sample[detail::uniform_index(rng, n)];
    boot[it] = statistic(draw);
  }
  if (method == CiMethod::kPercentile || n < 2) {
    auto ci = percentile_interval(boot, level);
    if (method == CiMethod::kBCa) ci.warning = "BCa unavailable (n < 2); percentile interval reported";
    return ci;
  }
  std::vector<double> jack(n), loo;
  loo.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    loo.clear();
    for (std::size_t k = 0; k < n; ++k)
      if (k != i) loo.push_back(sample[k]);
    jack[i] = statistic(loo);
  }
  return bca_interval(boot, statistic(sample), jack, level);
}

IntervalEstimate bootstrap_ci(std::span<const double> a, std::span<const double> b,
                              const TwoSampleStatistic& statistic, double level,
                              CiMethod method, std::size_t iterations, std::uint64_t seed) {
  require_nonempty(a, "bootstrap_ci");
  require_nonempty(b, "bootstrap_ci");
  check_bootstrap_args(level, iterations);
  std::mt19937_64 rng(seed);
  std::vector<double> boot(iterations), da(a.size()), db(b.size());
  for (std::size_t it = 0; it < iterations; ++it) {
    for (auto& v : da) v = a[detail::uniform_index(rng, a.size())];
    for (auto& v : db) v = b[detail::uniform_index(rng, b.size())];
    boot[it] = statistic(da, db);
  }
  if (method == CiMethod::kPercentile || a.size() < 2 || b.size() < 2) {
    auto ci = percentile_interval(boot, level);
    if (method == CiMethod::kBCa) ci.warning = "BCa unavailable (n < 2); percentile interval reported";
    return ci;
  }
  std::vector<double> jack, la, lb;
  jack.reserve(a.size() + b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    la.assign(a.begin(), a.end());
    la.erase(la.begin() + static_cast<std::ptrdiff_t>(i));
    jack.push_back(statistic(la, b));
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    lb.assign(b.begin(), b.end());
    lb.erase(lb.begin() + static_cast<std::ptrdiff_t>(i));
    jack.push_back(statistic(a, lb));
  }
  return bca_interval(boot, statistic(a, b), jack, level);
}

// ---------------------------------------------------------------------------

EffectSize hedges_g(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw InvalidArgument("hedges_g needs at least 2 values per sample");
  const double n1 = static_cast<double>(a.size()), n2 = static_cast<double>(b.size());
  const double pooled =
      ((n1 - 1) * sample_variance(a) + (n2 - 1) * sample_variance(b)) / (n1 + n2 - 2);
  if (pooled <= 0) throw DegenerateSample("hedges_g: zero pooled variance");
  const double d = (mean(a) - mean(b)) / std::sqrt(pooled);
  const double j = 1.0 - 3.0 / (4.0 * (n1 + n2) - 9.0);
  return {EffectSize::Kind::kHedgesG, d * j, std::nullopt};
}

EffectSize cliffs_delta(std::span<const double> a, std::span<const double> b) {
  require_nonempty(a, "cliffs_delta");
  require_nonempty(b, "cliffs_delta");
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sb.begin(), sb.end());
  double greater = 0, less = 0;
  for (double x : a) {
    const auto lo = std::lower_bound(sb.begin(), sb.end(), x);
    const auto hi = std::upper_bound(sb.begin(), sb.end(), x);
    greater += static_cast<double>(lo - sb.begin());
    less += static_cast<double>(sb.end() - hi);
  }
  const double delta = (greater - less) / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
  return {EffectSize::Kind::kCliffsDelta, delta, auc_from_cliffs_delta(delta)};
}

Correlation spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("spearman_rho: unequal lengths");
  if (x.size() < 3) throw InvalidArgument("spearman_rho needs at least 3 pairs");
  const auto rx = midranks(x), ry = midranks(y);
  const double mx = mean(rx), my = mean(ry);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx <= 0 || syy <= 0) throw DegenerateSample("spearman_rho: constant input");
  const double rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double n = static_cast<double>(x.size());
  double p = 0.0;
  if (std::abs(rho) < 1.0) {
    const double t = rho * std::sqrt((n - 2) / (1 - rho * rho));
    p = clamp_p(2.0 * bm::cdf(bm::complement(bm::students_t(n - 2), std::abs(t))));
  }
  return {rho, p, x.size()};
}

double kendall_w(const std::vector<std::vector<double>>& rankings) {
  const std::size_t k = rankings.size();
  if (k < 2) throw InvalidArgument("kendall_w needs at least 2 judges");
  const std::size_t n = rankings.front().size();
  if (n < 2) throw InvalidArgument("kendall_w needs at least 2 items");
  std::vector<double> sums(n, 0.0);
  double ties = 0;
  for (const auto& row : rankings) {
    if (row.size() != n) throw InvalidArgument("kendall_w: ragged rankings");
    const auto r = midranks(row);
    for (std::size_t i = 0; i < n; ++i) sums[i] += r[i];
    ties += tie_term(row);
  }
  const double dk = static_cast<double>(k), dn = static_cast<double>(n);
  const double expected = dk * (dn + 1) / 2.0;
  double s = 0;
  for (double v : sums) s += (v - expected) * (v - expected);
  const double denom = dk * dk * (dn * dn * dn - dn) - dk * ties;
  if (denom <= 0) return 0.0;
  return std::clamp(12.0 * s / denom, 0.0, 1.0);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> differences(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("paired test: unequal lengths");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

}  // namespace

TestResult paired_t(std::span<const double> a, std::span<const double> b, Sidedness sidedness) {
  const auto d = differences(a, b);
  if (d.size() < 2) throw InvalidArgument("paired_t needs at least 2 pairs");
  const double var = sample_variance(d);
  if (var <= 0) throw DegenerateSample("paired_t: constant differences");
  const double n = static_cast<double>(d.size());
  const double t = mean(d) / std::sqrt(var / n);
  bm::students_t dist(n - 1);
  TestResult r{"paired_t", t, 1.0, sidedness, d.size(), d.size(), false, n - 1};
  r.p_value = sidedness == Sidedness::kTwoSided
                  ? clamp_p(2.0 * bm::cdf(bm::complement(dist, std::abs(t))))
                  : sided_p(bm::cdf(bm::complement(dist, t)), bm::cdf(dist, t), sidedness);
  return r;
}

TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                Sidedness sidedness, std::uint64_t exact_cutoff) {
  std::vector<double> nz;
  for (double v : differences(a, b))
    if (v != 0.0) nz.push_back(v);
  if (nz.empty()) throw DegenerateSample("wilcoxon: all differences are zero");
  const std::size_t m = nz.size();
  std::vector<double> mags(m);
  for (std::size_t i = 0; i < m; ++i) mags[i] = std::abs(nz[i]);
  const auto ranks = midranks(mags);
  double w = 0;
  for (std::size_t i = 0; i < m; ++i)
    if (nz[i] > 0) w += ranks[i];
  TestResult r{"wilcoxon_signed_rank", w, 1.0, sidedness, m, m, false, std::nullopt};

  if (!has_ties(mags) && m < 63 && (std::uint64_t{1} << m) <= exact_cutoff) {
    const auto counts = signed_rank_null_counts(m);
    const auto wo = static_cast<std::size_t>(std::llround(w));
    double total = 0, ge = 0, le = 0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
      const double c = static_cast<double>(counts[s]);
      total += c;
      if (s >= wo) ge += c;
      if (s <= wo) le += c;
    }
    r.exact = true;
    r.p_value = sided_p(ge / total, le / total, sidedness);
    return r;
  }
  const double dm = static_cast<double>(m);
  const double mu = dm * (dm + 1) / 4.0;
  const double var = dm * (dm + 1) * (2 * dm + 1) / 24.0 - tie_term(mags) / 48.0;
  if (var <= 0) return r;
  const double sd = std::sqrt(var);
  r.p_value = sidedness == Sidedness::kTwoSided
                  ? clamp_p(2.0 * normal_sf(std::max(0.0, std::abs(w - mu) - 0.5) / sd))
                  : sided_p(normal_sf((w - mu - 0.5) / sd), normal_cdf((w - mu + 0.5) / sd),
                            sidedness);
  return r;
}

TestResult sign_test(std::span<const double> a, std::span<const double> b, Sidedness sidedness) {
  std::size_t pos = 0, neg = 0;
  for (double v : differences(a, b)) {
    if (v > 0) ++pos;
    else if (v < 0) ++neg;
  }
  const std::size_t n = pos + neg;
  if (n == 0) throw DegenerateSample("sign_test: all differences are zero");
  bm::binomial_distribution<double> dist(static_cast<double>(n), 0.5);
  const double k = static_cast<double>(pos);
  const double lower = bm::cdf(dist, k);
  const double upper = pos == 0 ? 1.0 : bm::cdf(bm::complement(dist, k - 1));
  return {"sign_test", k, sided_p(upper, lower, sidedness), sidedness, n, n, true, std::nullopt};
}

PairedSuite paired_suite(std::span<const double> a, std::span<const double> b,
                         const PairedOptions& options) {
  const auto d = differences(a, b);
  if (d.size() < 2) throw InvalidArgument("paired_suite needs at least 2 pairs");
  PairedSuite s;
  s.n = d.size();
  std::size_t positive = 0;
  for (double v : d) {
    if (v == 0.0) ++s.zero_differences;
    if (v > 0.0) ++positive;
  }
  s.sign = sign_test(a, b, options.sidedness);
  s.wilcoxon = wilcoxon_signed_rank(a, b, options.sidedness, options.exact_cutoff);
  s.paired_t = paired_t(a, b, options.sidedness);
  s.mean_difference = mean(d);
  s.positive_fraction = static_cast<double>(positive) / static_cast<double>(d.size());
  s.mean_difference_ci =
      bootstrap_ci(d, [](std::span<const double> x) { return mean(x); }, options.level,
                   options.ci_method, options.bootstrap_iterations, options.seed);
  return s;
}

TwoSampleComparison compare_samples(std::string label, std::span<const double> a,
                                    std::span<const double> b,
                                    const ComparisonOptions& options) {
  TwoSampleComparison c;
  c.label = std::move(label);
  c.n1 = a.size();
  c.n2 = b.size();
  c.mean_a = mean(a);
  c.mean_b = mean(b);
  c.mean_difference = c.mean_a - c.mean_b;
  c.median_difference = median(a) - median(b);
  c.mean_difference_ci = bootstrap_ci(
      a, b, [](std::span<const double> x, std::span<const double> y) { return mean(x) - mean(y); },
      options.level, CiMethod::kBCa, options.bootstrap_iterations, detail::derive_seed(options.seed, 1));
  c.median_difference_ci = bootstrap_ci(
      a, b,
      [](std::span<const double> x, std::span<const double> y) { return median(x) - median(y); },
      options.level, CiMethod::kPercentile, options.bootstrap_iterations,
      detail::derive_seed(options.seed, 2));
  c.hedges = hedges_g(a, b);
  c.cliffs = cliffs_delta(a, b);
  c.tests.push_back(welch_t(a, b, options.sidedness));
  c.tests.push_back(mann_whitney_u(a, b, options.sidedness, options.exact_cutoff));
  c.tests.push_back(ks_test_right(a, b));
  c.tests.push_back(permutation_mean_test(a, b, options.permutation_iterations,
                                          detail::derive_seed(options.seed, 3), options.sidedness,
                                          options.exact_cutoff));
  std::vector<double> ps;
  for (const auto& t : c.tests) ps.push_back(t.p_value);
  c.holm_p_values = holm_adjust(ps);
  return c;
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json to_json(const TestResult& r) {
  nlohmann::ordered_json j;
  j["test"] = r.test;
  j["statistic"] = r.statistic;
  j["p_value"] = r.p_value;
  j["sidedness"] = std::string(to_string(r.sidedness));
  j["n1"] = r.n1;
  j["n2"] = r.n2;
  j["exact"] = r.exact;
  if (r.df) j["df"] = *r.df;
  return j;
}

nlohmann::ordered_json to_json(const EffectSize& e) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(e.kind));
  j["value"] = e.value;
  if (e.auc) j["auc"] = *e.auc;
  return j;
}

nlohmann::ordered_json to_json(const IntervalEstimate& ci) {
  nlohmann::ordered_json j;
  j["lower"] = ci.lower;
  j["upper"] = ci.upper;
  j["level"] = ci.level;
  j["method"] = std::string(to_string(ci.method));
  if (ci.warning) j["warning"] = *ci.warning;
  return j;
}

nlohmann::ordered_json to_json(const Correlation& c) {
  return {{"rho", c.rho}, {"p_value", c.p_value}, {"n", c.n}};
}

nlohmann::ordered_json to_json(const PairedSuite& s) {
  nlohmann::ordered_json j;
  j["n"] = s.n;
  j["zero_differences"] = s.zero_differences;
  j["mean_difference"] = s.mean_difference;
  j["mean_difference_ci"] = to_json(s.mean_difference_ci);
  j["positive_fraction"] = s.positive_fraction;
  j["paired_t"] = to_json(s.paired_t);
  j["wilcoxon"] = to_json(s.wilcoxon);
  j["sign"] = to_json(s.sign);
  return j;
}

nlohmann::ordered_json to_json(const TwoSampleComparison& c) {
  nlohmann::ordered_json j;
  j["label"] = c.label;
  j["n1"] = c.n1;
  j["n2"] = c.n2;
  j["mean_a"] = c.mean_a;
  j["mean_b"] = c.mean_b;
  j["mean_difference"] = c.mean_difference;
  j["mean_difference_ci"] = to_json(c.mean_difference_ci);
  j["median_difference"] = c.median_difference;
  j["median_difference_ci"] = to_json(c.median_difference_ci);
  j["hedges_g"] = to_json(c.hedges);
  j["cliffs_delta"] = to_json(c.cliffs);
  auto tests = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < c.tests.size(); ++i) {
    auto t = to_json(c.tests[i]);
    t["p_holm"] = c.holm_p_values[i];
    tests.push_back(std::move(t));
  }
  j["tests"] = std::move(tests);
  return j;
}

}  // namespace lacuna
