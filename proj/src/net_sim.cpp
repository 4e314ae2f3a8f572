#include "replica_sync/net_sim.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

#include "replica_sync/errors.hpp"
#include "replica_sync/wire.hpp"

namespace replica_sync {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

void SimClock::advance_to(SimTime t) {
  if (t < now_) throw Error("simulation clock cannot move backwards");
  now_ = t;
}

void LinkConfig::validate() const {
  if (base_latency_ms < 0 || jitter_ms < 0) throw ConfigError("link latency and jitter must be non-negative");
  if (base_latency_ms - jitter_ms < 0) throw ConfigError("link jitter must not exceed base latency");
  if (!(drop_probability >= 0.0 && drop_probability <= 1.0)) throw ConfigError("drop probability must lie in [0,1]");
}

std::uint64_t derive_link_seed(std::uint64_t world_seed, const std::string& from, const std::string& to) {
  return splitmix64(world_seed ^ fnv1a64(from + "->" + to));
}

LinkState::LinkState(LinkConfig config) : config_(config), rng_(config.seed) { config_.validate(); }

std::optional<SimTime> LinkState::schedule(SimTime now) {
  if (config_.drop_probability > 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng_) < config_.drop_probability) return std::nullopt;
  }
  SimTime jitter = 0;
  if (config_.jitter_ms > 0) {
    std::uniform_int_distribution<SimTime> draw(-config_.jitter_ms, config_.jitter_ms);
    jitter = draw(rng_);
  }
  const SimTime at = std::max(now + config_.base_latency_ms + jitter, last_delivery_);
  last_delivery_ = at;
  return at;
}

std::optional<SimEvent> send(const SimClock& clock, LinkState& link, const std::string& from, const std::string& to,
                             Envelope envelope) {
  const auto at = link.schedule(clock.now());
  if (!at) return std::nullopt;
  return SimEvent{*at, clock.now(), from, to, std::move(envelope)};
}

Json to_json(const TraceEntry& entry) {
  return Json{{"t_ms", entry.t_ms}, {"from", entry.from}, {"to", entry.to}, {"envelope", to_json(entry.envelope)}};
}

TraceEntry trace_entry_from_json(const Json& j) {
  try {
    return TraceEntry{j.at("t_ms").get<SimTime>(), j.at("from").get<std::string>(), j.at("to").get<std::string>(),
                      envelope_from_json(j.at("envelope"))};
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed trace entry: ") + e.what());
  }
}

std::string to_jsonl(const Trace& trace) {
  std::ostringstream out;
  for (const auto& e : trace) out << to_json(e).dump() << '\n';
  return out.str();
}

SimTime Context::now() const { return world_.clock().now(); }
void Context::send(const std::string& to, Envelope envelope) { world_.send(self_, to, std::move(envelope)); }
void Context::schedule(SimTime delay_ms, std::uint64_t token) { world_.schedule_timer(self_, delay_ms, token); }

World::World(std::uint64_t seed, LinkConfig default_link) : seed_(seed), default_link_(default_link) {
  default_link_.validate();
}

void World::add_endpoint(const std::string& id, std::unique_ptr<Endpoint> endpoint) {
  if (!endpoints_.emplace(id, std::move(endpoint)).second) throw ConfigError("duplicate endpoint '" + id + "'");
}

Endpoint& World::endpoint(const std::string& id) {
  auto it = endpoints_.find(id);
  if (it == endpoints_.end()) throw ConfigError("unknown endpoint '" + id + "'");
  return *it->second;
}

void World::set_link(const std::string& from, const std::string& to, LinkConfig config) {
  config.validate();
  if (links_.contains({from, to})) throw ConfigError("link " + from + "->" + to + " already carries traffic");
  link_configs_[{from, to}] = config;
}

void World::set_duplex(const std::string& a, const std::string& b, LinkConfig config) {
  set_link(a, b, config);
  set_link(b, a, config);
}

LinkState& World::link(const std::string& from, const std::string& to) {
  auto it = links_.find({from, to});
  if (it != links_.end()) return it->second;
  LinkConfig config = default_link_;
  if (auto c = link_configs_.find({from, to}); c != link_configs_.end()) config = c->second;
  if (config.seed == 0) config.seed = derive_link_seed(seed_, from, to);
  return links_.emplace(std::make_pair(from, to), LinkState(config)).first->second;
}

bool World::Later::operator()(const Queued& a, const Queued& b) const {
  return std::tie(a.deliver_at, a.host_seq, a.sender_seq, a.order) >
         std::tie(b.deliver_at, b.host_seq, b.sender_seq, b.order);
}

void World::send(const std::string& from, const std::string& to, Envelope envelope) {
  if (!endpoints_.contains(to)) throw ConfigError("send to unknown endpoint '" + to + "'");
  auto event = replica_sync::send(clock_, link(from, to), from, to, std::move(envelope));
  if (!event) {
    ++dropped_;
    return;
  }
  const auto host_seq = event->envelope.host_seq;
  const auto sender_seq = event->envelope.sender_seq;
  queue_.push_back(Queued{event->deliver_at, host_seq, sender_seq, next_order_++, false, 0, std::move(*event)});
  std::push_heap(queue_.begin(), queue_.end(), Later{});
}

void World::schedule_timer(const std::string& endpoint, SimTime delay_ms, std::uint64_t token) {
  if (delay_ms < 0) throw ConfigError("timer delay must be non-negative");
  SimEvent ev{clock_.now() + delay_ms, clock_.now(), endpoint, endpoint, {}};
  queue_.push_back(Queued{ev.deliver_at, 0, 0, next_order_++, true, token, std::move(ev)});
  std::push_heap(queue_.begin(), queue_.end(), Later{});
}

void World::start_all() {
  if (started_) return;
  started_ = true;
  for (auto& [id, ep] : endpoints_) {
    Context ctx(*this, id);
    ep->on_start(ctx);
  }
}

Trace World::run_until_quiescent(std::size_t max_events) {
  start_all();
  Trace trace;
  std::size_t processed = 0;
  while (!queue_.empty()) {
    if (++processed > max_events) {
      throw LivelockError("event cap of " + std::to_string(max_events) + " exceeded");
    }
    std::pop_heap(queue_.begin(), queue_.end(), Later{});
    Queued q = std::move(queue_.back());
    queue_.pop_back();
    clock_.advance_to(q.deliver_at);
    Context ctx(*this, q.event.to);
    Endpoint& target = endpoint(q.event.to);
    if (q.is_timer) {
      target.on_timer(q.token, ctx);
    } else {
      trace.push_back(TraceEntry{q.deliver_at, q.event.from, q.event.to, q.event.envelope});
      target.on_envelope(q.event.from, q.event.envelope, ctx);
    }
  }
  return trace;
}

}  // namespace replica_sync
