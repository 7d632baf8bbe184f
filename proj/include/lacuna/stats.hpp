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

#pragma once

// Location tests, effect sizes, multiplicity control, resampling intervals,
// rank correlation and concordance for comparing score samples.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lacuna/error.hpp"

namespace lacuna {

enum class Sidedness { kGreater, kLess, kTwoSided };
std::string_view to_string(Sidedness s);  // one_sided_greater | one_sided_less | two_sided
Sidedness sidedness_from_string(std::string_view s);

// Exact enumeration is used when the number of enumerated outcomes is at most
// this many; otherwise the documented approximation.
inline constexpr std::uint64_t kDefaultExactCutoff = 1'000'000;

struct TestResult {
  std::string test;
  double statistic = 0;
  double p_value = 1;
  Sidedness sidedness = Sidedness::kTwoSided;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  bool exact = false;
  std::optional<double> df;
};

struct EffectSize {
  enum class Kind { kHedgesG, kCliffsDelta };
  Kind kind;
  double value = 0;
  std::optional<double> auc;  // Cliff's delta only
};
std::string_view to_string(EffectSize::Kind kind);

enum class CiMethod { kPercentile, kBCa };
std::string_view to_string(CiMethod m);
CiMethod ci_method_from_string(std::string_view s);

struct IntervalEstimate {
  double lower = 0;
  double upper = 0;
  double level = 0.95;
  CiMethod method = CiMethod::kPercentile;
  std::optional<std::string> warning;
};

// Welch's unequal-variance t test of mean(a) vs mean(b).
TestResult welch_t(std::span<const double> a, std::span<const double> b, Sidedness sidedness);

// U is the statistic for `a` (pairs with a > b plus half the ties). Greater
// means a tends to be larger.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                          Sidedness sidedness,
                          std::uint64_t exact_cutoff = kDefaultExactCutoff);

// One-sided two-sample KS: D+ = sup (F_b - F_a), alternative "a is
// stochastically larger", p = exp(-2 m n D+^2 / (m + n)).
TestResult ks_test_right(std::span<const double> a, std::span<const double> b);

// Difference in means under label permutation.
TestResult permutation_mean_test(std::span<const double> a, std::span<const double> b,
                                 std::size_t iterations, std::uint64_t seed,
                                 Sidedness sidedness,
                                 std::uint64_t exact_cutoff = kDefaultExactCutoff);

// Step-down Holm adjustment, returned in input order.
std::vector<double> holm_adjust(std::span<const double> p_values);

using Statistic = std::function<double(std::span<const double>)>;
using TwoSampleStatistic =
    std::function<double(std::span<const double>, std::span<const double>)>;

IntervalEstimate bootstrap_ci(std::span<const double> sample, const Statistic& statistic,
                              double level, CiMethod method, std::size_t iterations,
                              std::uint64_t seed);
// Resamples each group independently.
IntervalEstimate bootstrap_ci(std::span<const double> a, std::span<const double> b,
                              const TwoSampleStatistic& statistic, double level,
                              CiMethod method, std::size_t iterations, std::uint64_t seed);

EffectSize hedges_g(std::span<const double> a, std::span<const double> b);
EffectSize cliffs_delta(std::span<const double> a, std::span<const double> b);
inline double auc_from_cliffs_delta(double delta) { return (delta + 1.0) / 2.0; }

struct Correlation {
  double rho = 0;
  double p_value = 1;  // two-sided, t approximation
  std::size_t n = 0;
};
Correlation spearman_rho(std::span<const double> x, std::span<const double> y);

// rankings[j][i] = score or rank judge j gives item i; converted to midranks.
double kendall_w(const std::vector<std::vector<double>>& rankings);

// Independent seed for stream `stream` of a run seeded with `seed`
// (splitmix64 of seed + golden-ratio increment * (stream + 1)).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Midranks (1-based, ties share the average rank).
std::vector<double> midranks(std::span<const double> values);

double mean(std::span<const double> x);
double median(std::span<const double> x);
double sample_variance(std::span<const double> x);
// Linear interpolation between order statistics (type 7).
double quantile(std::span<const double> x, double q);

// Tests on the paired differences d = a - b.
TestResult paired_t(std::span<const double> a, std::span<const double> b, Sidedness sidedness);
// Zero differences are dropped; throws DegenerateSample when none remain.
TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                Sidedness sidedness,
                                std::uint64_t exact_cutoff = kDefaultExactCutoff);
TestResult sign_test(std::span<const double> a, std::span<const double> b, Sidedness sidedness);

struct PairedSuite {
  std::size_t n = 0;
  std::size_t zero_differences = 0;
  double mean_difference = 0;
  double positive_fraction = 0;  // over all n pairs
  TestResult paired_t;
  TestResult wilcoxon;
  TestResult sign;
  IntervalEstimate mean_difference_ci;
};

struct PairedOptions {
  Sidedness sidedness = Sidedness::kTwoSided;
  double level = 0.95;
  CiMethod ci_method = CiMethod::kPercentile;
  std::size_t bootstrap_iterations = 10000;
  std::uint64_t seed = 0;
  std::uint64_t exact_cutoff = kDefaultExactCutoff;
};
PairedSuite paired_suite(std::span<const double> a, std::span<const double> b,
                         const PairedOptions& options = {});

// Full two-sample comparison of a (e.g. SEEN) against b (UNSEEN).
struct ComparisonOptions {
  Sidedness sidedness = Sidedness::kGreater;
  double level = 0.95;
  std::size_t permutation_iterations = 10000;
  std::size_t bootstrap_iterations = 10000;
  std::uint64_t seed = 0;
  std::uint64_t exact_cutoff = kDefaultExactCutoff;
};

struct TwoSampleComparison {
  std::string label;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  double mean_a = 0;
  double mean_b = 0;
  double mean_difference = 0;
  IntervalEstimate mean_difference_ci;  // BCa
  double median_difference = 0;
  IntervalEstimate median_difference_ci;  // percentile
  EffectSize hedges;
  EffectSize cliffs;
  std::vector<TestResult> tests;     // Welch, MWU, KS-right, permutation
  std::vector<double> holm_p_values; // over `tests`
};

TwoSampleComparison compare_samples(std::string label, std::span<const double> a,
                                    std::span<const double> b,
                                    const ComparisonOptions& options = {});

nlohmann::ordered_json to_json(const TestResult& r);
nlohmann::ordered_json to_json(const EffectSize& e);
nlohmann::ordered_json to_json(const IntervalEstimate& ci);
nlohmann::ordered_json to_json(const Correlation& c);
nlohmann::ordered_json to_json(const PairedSuite& s);
nlohmann::ordered_json to_json(const TwoSampleComparison& c);

}  // namespace lacuna
