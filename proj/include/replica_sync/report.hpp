#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "replica_sync/metrics.hpp"
#include "replica_sync/stats.hpp"

namespace replica_sync {

inline constexpr double kNormalityAlpha = 0.05;
inline constexpr double kSignificanceAlpha = 0.05;

enum class Method { None, ANOVA, MWW };
std::string_view to_string(Method method);

struct NormalityCheck {
  std::optional<TestResult> result;
  /// Why the test could not run (sample size, zero variance).
  std::string note;

  bool normal() const { return result && result->p_value >= kNormalityAlpha; }
};

struct MeasureComparison {
  std::string measure;
  std::map<Condition, GroupSummary> summaries;
  std::map<Condition, NormalityCheck> normality;
  Method method = Method::None;
  std::optional<TestResult> test;
  /// Relative reduction from Tablet to HMD, when Tablet's mean is positive.
  std::optional<double> improvement;

  bool significant(double alpha = kSignificanceAlpha) const { return test && test->p_value < alpha; }
};

struct AnalysisReport {
  std::vector<SessionMetrics> rows;
  std::map<Condition, std::size_t> sessions;
  std::map<Condition, ErrorCounts> error_totals;
  std::vector<MeasureComparison> measures;

  const MeasureComparison& measure(const std::string& name) const;
  bool between_groups() const { return sessions.size() == 2; }
};

/// Measures in report order.
const std::vector<std::string>& measure_names();
std::vector<double> measure_values(const std::vector<SessionMetrics>& rows, Condition condition, const std::string& measure);

/// Per measure: Shapiro-Wilk on each group; ANOVA when both are normal at
/// alpha 0.05, otherwise Mann-Whitney. A single condition yields summaries
/// only. Throws StatsError on an empty corpus.
AnalysisReport analyze(const std::vector<SessionMetrics>& rows);

std::string report_markdown(const AnalysisReport& report);
std::string report_results_csv(const AnalysisReport& report);

/// Overlaid per-condition histogram over a shared binning.
std::string histogram_svg(const std::string& title, const std::map<Condition, std::vector<double>>& values,
                          std::size_t bins = 10);

// ------------------------------------------------------- constants check --

struct PercentCheck {
  std::string name;
  double baseline = 0.0;
  double treatment = 0.0;
  /// In percent.
  double expected = 0.0;
};

/// Published figures of the reference study.
struct ReferenceConstants {
  GroupSummary tablet_total{19, 763.65, 76.80};
  GroupSummary hmd_total{20, 623.55, 67.70};
  double f_expected = 36.6;
  double f_tolerance = 0.3;
  double df_between = 1.0;
  double df_within = 37.0;
  double p_below = 1e-6;

  ErrorCounts tablet_errors{49, 6, 3};
  ErrorCounts hmd_errors{3, 1, 0};
  std::int64_t tablet_weighted = 64;
  std::int64_t hmd_weighted = 5;
  double tablet_weighted_average = 3.37;
  double hmd_weighted_average = 0.25;
  double average_tolerance = 0.005;

  std::vector<PercentCheck> percentages{
      {"total time", 763.65, 623.55, 18.35},
      {"1-handed time", 193.26, 146.43, 24.24},
      {"2-handed time", 146.7, 105.86, 27.84},
      {"weighted errors per participant", 3.37, 0.25, 92.58},
      {"simple errors", 49, 3, 93.88},
      {"critical errors", 6, 1, 83.33},
  };
  /// Percentage points.
  double percent_tolerance = 0.01;
};

struct CheckResult {
  std::string name;
  std::string detail;
  bool pass = false;
};

std::vector<CheckResult> paper_check(const ReferenceConstants& constants = {});

}  // namespace replica_sync
