#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace replica_sync {

struct Sample {
  std::vector<double> values;
  std::string label;
};

struct GroupSummary {
  std::size_t n = 0;
  double mean = 0.0;
  /// Sample standard deviation (n - 1 divisor).
  double sd = 0.0;
};

enum class StatisticName { W_sw, U, W_ranksum, F };
std::string_view to_string(StatisticName name);

struct TestResult {
  double statistic = 0.0;
  StatisticName statistic_name = StatisticName::F;
  std::optional<std::pair<double, double>> df;
  double p_value = 1.0;
  /// True when p comes from full enumeration.
  bool exact = false;
  /// Mann-Whitney only: rank sum of the first sample (midranks).
  std::optional<double> rank_sum;
};

inline constexpr std::size_t kShapiroWilkMinN = 3;
inline constexpr std::size_t kShapiroWilkMaxN = 50;

/// Royston's approximation for the coefficients and the p-value. Throws
/// StatsError when n is outside [3, 50], a value is not finite, or the
/// sample has zero variance.
TestResult shapiro_wilk(const Sample& s);

/// Royston's coefficients a_1..a_{n/2} for the upper half (a_i pairs
/// x_(n+1-i) - x_(i)); normalised so that 2 * sum a_i^2 = 1.
std::vector<double> shapiro_wilk_coefficients(std::size_t n);

inline constexpr std::size_t kDefaultExactThreshold = 16;
inline constexpr std::size_t kMaxExactThreshold = 30;

/// U = R_a - n_a(n_a + 1)/2 for the first sample, midranks for ties; this is
/// the W reported by R's wilcox.test. Two-sided p = P(|U - mu| >= |U_obs - mu|)
/// by enumerating all labelings when n_a + n_b <= exact_threshold, otherwise
/// the normal approximation with tie and continuity corrections. Throws
/// StatsError on an empty sample or a threshold above kMaxExactThreshold.
TestResult mann_whitney(const Sample& a, const Sample& b, std::size_t exact_threshold = kDefaultExactThreshold);

/// Throws StatsError with fewer than 2 groups, a group with n < 2, or when
/// both within and between variance are zero.
TestResult anova_oneway_raw(const std::vector<Sample>& groups);
TestResult anova_oneway_summary(const std::vector<GroupSummary>& groups);

/// Throws StatsError when n < 2.
GroupSummary mean_sd(const Sample& s);

/// Standard normal helpers.
double normal_cdf(double z);
double normal_quantile(double p);

}  // namespace replica_sync
