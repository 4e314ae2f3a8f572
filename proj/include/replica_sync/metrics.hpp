#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "replica_sync/session_log.hpp"

namespace replica_sync {

enum class ErrorType { Simple, Critical, Repetition };
std::string_view to_string(ErrorType type);

/// Simple 1, Critical 2, Repetition 1.
int error_weight(ErrorType type);

struct ErrorRecord {
  SimTime t_ms = 0;
  ErrorType type = ErrorType::Simple;
  NodeId valve;
  std::string block;

  friend bool operator==(const ErrorRecord&, const ErrorRecord&) = default;
};

struct ErrorCounts {
  std::int64_t simple = 0;
  std::int64_t critical = 0;
  std::int64_t repetition = 0;

  ErrorCounts& operator+=(const ErrorCounts& other);
  friend ErrorCounts operator+(ErrorCounts a, const ErrorCounts& b) { return a += b; }
  friend bool operator==(const ErrorCounts&, const ErrorCounts&) = default;
};

/// Errors of one attempted action on `target`. A wrong manipulation yields a
/// Critical only, never an additional Simple.
std::vector<ErrorRecord> classify(const NodeId& target, const std::optional<NodeId>& identified,
                                  const std::optional<NodeId>& manipulated, bool repeat_requested);

std::int64_t weighted_total(const ErrorCounts& counts);

ErrorCounts count_errors(const std::vector<ErrorRecord>& records);

/// Every error in a session log, in log order. Throws ParseError when an
/// Identify/Manipulate/RepeatRequest appears with no instruction target.
std::vector<ErrorRecord> session_errors(const SessionLog& log);

struct BlockTiming {
  std::string block;
  BlockKind kind = BlockKind::NoManipulation;
  double duration_s = 0.0;

  friend bool operator==(const BlockTiming&, const BlockTiming&) = default;
};

struct SessionTimings {
  std::vector<BlockTiming> blocks;
  double one_handed_s = 0.0;
  double two_handed_s = 0.0;
  double no_manipulation_s = 0.0;
  double total_s = 0.0;
};

/// Breakpoint-to-breakpoint block durations; the first block starts at
/// CallStart. Throws ParseError on a log violating the SessionLog
/// invariants.
SessionTimings block_times(const SessionLog& log);

/// (baseline - treatment) / baseline. Throws ConfigError when baseline <= 0.
double percent_improvement(double baseline, double treatment);

/// One row of the metrics CSV.
struct SessionMetrics {
  std::string session_id;
  Condition condition = Condition::Tablet;
  std::uint64_t seed = 0;
  double total_s = 0.0;
  double one_handed_s = 0.0;
  double two_handed_s = 0.0;
  ErrorCounts errors;

  std::int64_t weighted() const { return weighted_total(errors); }
  friend bool operator==(const SessionMetrics&, const SessionMetrics&) = default;
};

SessionMetrics session_metrics(const std::string& session_id, const SessionLog& log);

inline constexpr const char* kMetricsCsvHeader =
    "session_id,condition,seed,total_s,one_handed_s,two_handed_s,simple,critical,repetition,weighted_total";

/// Header plus one line per row; seconds printed with 3 decimals.
std::string to_csv(const std::vector<SessionMetrics>& rows);

/// Throws ParseError naming the offending line on a malformed row.
std::vector<SessionMetrics> metrics_from_csv(const std::string& text);

}  // namespace replica_sync
