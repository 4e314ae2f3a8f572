#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "replica_sync/metrics.hpp"
#include "replica_sync/scenario.hpp"

namespace replica_sync {

/// Group sizes of the reference study.
inline constexpr std::size_t kTabletParticipants = 19;
inline constexpr std::size_t kHmdParticipants = 20;

struct RunConfig {
  /// Sessions per condition, in output order (Tablet before HMD).
  std::map<Condition, std::size_t> sessions;
  std::uint64_t seed = 1;
  std::map<Condition, OperatorProfile> profiles;
  InspectionPlan plan;
  ExpertPolicy expert;
  SessionEnvironment env;
  /// 0 picks the hardware concurrency.
  unsigned workers = 1;

  /// Throws ConfigError: no sessions, a zero count, or a missing profile.
  void validate() const;
};

/// Defaults for every field except sessions and seed.
RunConfig default_run_config();

std::uint64_t session_seed(std::uint64_t base_seed, Condition condition, std::size_t index);

/// "tablet-001", "hmd-020", ...
std::string session_id(Condition condition, std::size_t index);

struct SimulatedSession {
  std::string id;
  SessionLog log;
  SessionMetrics metrics;
};

/// Runs every session; output order is Tablet then HMD, each by index,
/// regardless of the worker count.
std::vector<SimulatedSession> simulate_corpus(const RunConfig& config);

}  // namespace replica_sync
