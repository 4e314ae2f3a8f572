#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "replica_sync/session_protocol.hpp"

namespace replica_sync {

/// Milliseconds since session start.
using SimTime = std::int64_t;

class SimClock {
 public:
  SimTime now() const { return now_; }
  /// Throws Error if time would go backwards.
  void advance_to(SimTime t);

 private:
  SimTime now_ = 0;
};

struct LinkConfig {
  SimTime base_latency_ms = 0;
  /// Half-width of the uniform jitter window.
  SimTime jitter_ms = 0;
  std::uint64_t seed = 0;
  /// Test-only loss injection. 0 keeps the transport reliable.
  double drop_probability = 0.0;

  /// Throws ConfigError unless 0 <= jitter <= base and 0 <= drop <= 1.
  void validate() const;
};

/// Seed of the (from -> to) link: splitmix64(world_seed XOR fnv1a64("from->to")).
std::uint64_t derive_link_seed(std::uint64_t world_seed, const std::string& from, const std::string& to);

/// Per-link sender state: the jitter stream and the FIFO watermark.
class LinkState {
 public:
  explicit LinkState(LinkConfig config);
  const LinkConfig& config() const { return config_; }
  SimTime last_delivery() const { return last_delivery_; }

  /// Draws the delivery time for a send at `now`, clamped so the link stays
  /// FIFO. Returns nullopt when drop mode discards the message.
  std::optional<SimTime> schedule(SimTime now);

 private:
  LinkConfig config_;
  std::mt19937_64 rng_;
  SimTime last_delivery_ = 0;
};

struct SimEvent {
  SimTime deliver_at = 0;
  SimTime sent_at = 0;
  std::string from;
  std::string to;
  Envelope envelope;
};

/// Schedules one envelope on a link.
std::optional<SimEvent> send(const SimClock& clock, LinkState& link, const std::string& from, const std::string& to,
                             Envelope envelope);

struct TraceEntry {
  SimTime t_ms = 0;
  std::string from;
  std::string to;
  Envelope envelope;

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};
using Trace = std::vector<TraceEntry>;

Json to_json(const TraceEntry& entry);
TraceEntry trace_entry_from_json(const Json& j);
/// One JSON object per line.
std::string to_jsonl(const Trace& trace);

class World;

/// Handle an endpoint uses to act on the world during a callback.
class Context {
 public:
  Context(World& world, std::string self) : world_(world), self_(std::move(self)) {}
  SimTime now() const;
  const std::string& self() const { return self_; }
  void send(const std::string& to, Envelope envelope);
  /// Fires on_timer(token) after `delay_ms`.
  void schedule(SimTime delay_ms, std::uint64_t token);

 private:
  World& world_;
  std::string self_;
};

class Endpoint {
 public:
  virtual ~Endpoint() = default;
  virtual void on_start(Context&) {}
  virtual void on_envelope(const std::string& from, const Envelope& envelope, Context& ctx) = 0;
  virtual void on_timer(std::uint64_t /*token*/, Context&) {}
};

/// Single-threaded discrete-event world. The trace is a pure function of
/// the endpoints, link configs and seeds.
class World {
 public:
  explicit World(std::uint64_t seed, LinkConfig default_link = {});

  template <class T, class... Args>
  T& emplace_endpoint(const std::string& id, Args&&... args) {
    auto ptr = std::make_unique<T>(std::forward<Args>(args)...);
    T& ref = *ptr;
    add_endpoint(id, std::move(ptr));
    return ref;
  }
  void add_endpoint(const std::string& id, std::unique_ptr<Endpoint> endpoint);
  Endpoint& endpoint(const std::string& id);

  /// Overrides the config of the directed link; a zero seed is replaced by
  /// the derived per-link seed.
  void set_link(const std::string& from, const std::string& to, LinkConfig config);
  /// Sets both directions.
  void set_duplex(const std::string& a, const std::string& b, LinkConfig config);

  void send(const std::string& from, const std::string& to, Envelope envelope);
  void schedule_timer(const std::string& endpoint, SimTime delay_ms, std::uint64_t token);

  /// Processes events in (deliver_at, host_seq, sender_seq, enqueue order)
  /// until none remain. Throws LivelockError past `max_events`.
  Trace run_until_quiescent(std::size_t max_events = 2'000'000);

  const SimClock& clock() const { return clock_; }
  std::size_t dropped() const { return dropped_; }

 private:
  struct Queued {
    SimTime deliver_at;
    std::uint64_t host_seq;
    std::uint64_t sender_seq;
    std::uint64_t order;
    bool is_timer;
    std::uint64_t token;
    SimEvent event;
  };
  struct Later {
    bool operator()(const Queued& a, const Queued& b) const;
  };

  LinkState& link(const std::string& from, const std::string& to);
  void start_all();

  std::uint64_t seed_;
  LinkConfig default_link_;
  SimClock clock_;
  std::map<std::string, std::unique_ptr<Endpoint>> endpoints_;
  std::map<std::pair<std::string, std::string>, LinkConfig> link_configs_;
  std::map<std::pair<std::string, std::string>, LinkState> links_;
  std::vector<Queued> queue_;  // binary heap ordered by Later
  std::uint64_t next_order_ = 0;
  std::size_t dropped_ = 0;
  bool started_ = false;
};

}  // namespace replica_sync
