#include "replica_sync/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "replica_sync/errors.hpp"

namespace replica_sync {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

void RunConfig::validate() const {
  if (sessions.empty()) throw ConfigError("no condition selected");
  for (const auto& [condition, count] : sessions) {
    if (count < 1) throw ConfigError("sessions must be at least 1");
    auto it = profiles.find(condition);
    if (it == profiles.end()) throw ConfigError("no profile for condition '" + std::string(to_string(condition)) + "'");
    it->second.validate();
  }
  validate_plan(plan, registry_from_model(env.model));
}

RunConfig default_run_config() {
  RunConfig c;
  c.env = default_environment();
  c.plan = build_default_plan(registry_from_model(c.env.model));
  c.expert = default_expert_policy();
  c.profiles[Condition::Tablet] = default_profile(Condition::Tablet);
  c.profiles[Condition::HMD] = default_profile(Condition::HMD);
  return c;
}

std::uint64_t session_seed(std::uint64_t base_seed, Condition condition, std::size_t index) {
  const std::uint64_t lane = condition == Condition::Tablet ? 0x7461626C6574ULL : 0x686D64ULL;
  return splitmix64(splitmix64(base_seed ^ lane) + index);
}

std::string session_id(Condition condition, std::size_t index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s-%03zu", std::string(to_string(condition)).c_str(), index + 1);
  return buf;
}

std::vector<SimulatedSession> simulate_corpus(const RunConfig& config) {
  config.validate();
  struct Job {
    Condition condition;
    std::size_t index;
  };
  std::vector<Job> jobs;
  for (Condition c : {Condition::Tablet, Condition::HMD}) {
    auto it = config.sessions.find(c);
    if (it == config.sessions.end()) continue;
    for (std::size_t i = 0; i < it->second; ++i) jobs.push_back({c, i});
  }

  std::vector<SimulatedSession> out(jobs.size());
  auto run_one = [&](std::size_t k) {
    const auto& job = jobs[k];
    const auto seed = session_seed(config.seed, job.condition, job.index);
    SimulatedSession s;
    s.id = session_id(job.condition, job.index);
    s.log = run_session(config.plan, job.condition, config.profiles.at(job.condition), config.expert, seed, config.env);
    s.metrics = session_metrics(s.id, s.log);
    out[k] = std::move(s);
  };

  unsigned workers = config.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.workers;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, jobs.size()));
  if (workers <= 1) {
    for (std::size_t k = 0; k < jobs.size(); ++k) run_one(k);
    return out;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < jobs.size(); k = next++) {
        try {
          run_one(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace replica_sync
