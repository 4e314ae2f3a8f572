#include "replica_sync/metrics.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "replica_sync/errors.hpp"

namespace replica_sync {

std::string_view to_string(ErrorType type) {
  switch (type) {
    case ErrorType::Simple: return "Simple";
    case ErrorType::Critical: return "Critical";
    case ErrorType::Repetition: return "Repetition";
  }
  return "?";
}

int error_weight(ErrorType type) { return type == ErrorType::Critical ? 2 : 1; }

ErrorCounts& ErrorCounts::operator+=(const ErrorCounts& other) {
  simple += other.simple;
  critical += other.critical;
  repetition += other.repetition;
  return *this;
}

std::vector<ErrorRecord> classify(const NodeId& target, const std::optional<NodeId>& identified,
                                  const std::optional<NodeId>& manipulated, bool repeat_requested) {
  std::vector<ErrorRecord> out;
  if (manipulated && *manipulated != target) {
    out.push_back({0, ErrorType::Critical, *manipulated, {}});
  } else if (identified && *identified != target) {
    out.push_back({0, ErrorType::Simple, *identified, {}});
  }
  if (repeat_requested) out.push_back({0, ErrorType::Repetition, target, {}});
  return out;
}

std::int64_t weighted_total(const ErrorCounts& c) { return c.simple + 2 * c.critical + c.repetition; }

ErrorCounts count_errors(const std::vector<ErrorRecord>& records) {
  ErrorCounts c;
  for (const auto& r : records) {
    switch (r.type) {
      case ErrorType::Simple: ++c.simple; break;
      case ErrorType::Critical: ++c.critical; break;
      case ErrorType::Repetition: ++c.repetition; break;
    }
  }
  return c;
}

std::vector<ErrorRecord> session_errors(const SessionLog& log) {
  std::vector<ErrorRecord> out;
  std::optional<NodeId> target;
  // A misidentification is held back until we know whether the same action
  // went on to a wrong manipulation.
  std::optional<SessionEvent> held;

  auto flush = [&](const std::optional<NodeId>& manipulated, const SessionEvent* manip_event) {
    if (!held) return;
    auto recs = classify(*target, held->valve, manipulated, false);
    for (auto& r : recs) {
      const SessionEvent& at = manip_event ? *manip_event : *held;
      r.t_ms = at.t_ms;
      r.block = at.block;
      out.push_back(std::move(r));
    }
    held.reset();
  };

  for (const auto& e : log.events) {
    switch (e.kind) {
      case EventKind::Instruction:
        flush(std::nullopt, nullptr);
        target = e.valve;
        break;
      case EventKind::Identify:
        if (!target || !e.valve) throw ParseError("Identify at t=" + std::to_string(e.t_ms) + " has no instruction target");
        flush(std::nullopt, nullptr);
        held = e;
        break;
      case EventKind::Manipulate:
        if (!target || !e.valve) throw ParseError("Manipulate at t=" + std::to_string(e.t_ms) + " has no instruction target");
        if (held) {
          flush(e.valve, &e);
        } else {
          for (auto r : classify(*target, std::nullopt, e.valve, false)) {
            r.t_ms = e.t_ms;
            r.block = e.block;
            out.push_back(std::move(r));
          }
        }
        break;
      case EventKind::RepeatRequest:
        if (!target) throw ParseError("RepeatRequest at t=" + std::to_string(e.t_ms) + " has no instruction target");
        flush(std::nullopt, nullptr);
        out.push_back({e.t_ms, ErrorType::Repetition, *target, e.block});
        break;
      default:
        break;
    }
  }
  flush(std::nullopt, nullptr);
  return out;
}

SessionTimings block_times(const SessionLog& log) {
  validate_log(log);
  SessionTimings t;
  const SimTime start = log.events.front().t_ms;
  SimTime previous = start;
  for (const auto& e : log.events) {
    if (e.kind != EventKind::Breakpoint) continue;
    if (!e.block_kind) throw ParseError("Breakpoint for '" + e.block + "' lacks a block kind");
    const double d = static_cast<double>(e.t_ms - previous) / 1000.0;
    previous = e.t_ms;
    t.blocks.push_back({e.block, *e.block_kind, d});
    switch (*e.block_kind) {
      case BlockKind::OneHanded: t.one_handed_s += d; break;
      case BlockKind::TwoHanded: t.two_handed_s += d; break;
      case BlockKind::NoManipulation: t.no_manipulation_s += d; break;
    }
  }
  t.total_s = static_cast<double>(log.events.back().t_ms - start) / 1000.0;
  return t;
}

double percent_improvement(double baseline, double treatment) {
  if (!(baseline > 0.0)) throw ConfigError("baseline must be positive");
  return (baseline - treatment) / baseline;
}

SessionMetrics session_metrics(const std::string& session_id, const SessionLog& log) {
  const auto t = block_times(log);
  SessionMetrics m;
  m.session_id = session_id;
  m.condition = log.condition;
  m.seed = log.seed;
  m.total_s = t.total_s;
  m.one_handed_s = t.one_handed_s;
  m.two_handed_s = t.two_handed_s;
  m.errors = count_errors(session_errors(log));
  return m;
}

std::string to_csv(const std::vector<SessionMetrics>& rows) {
  std::string out = std::string(kMetricsCsvHeader) + "\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%llu,%.3f,%.3f,%.3f,%lld,%lld,%lld,%lld\n", r.session_id.c_str(),
                  std::string(to_string(r.condition)).c_str(), static_cast<unsigned long long>(r.seed), r.total_s,
                  r.one_handed_s, r.two_handed_s, static_cast<long long>(r.errors.simple),
                  static_cast<long long>(r.errors.critical), static_cast<long long>(r.errors.repetition),
                  static_cast<long long>(r.weighted()));
    out += buf;
  }
  return out;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T parse_number(const std::string& cell, std::size_t line_no, const char* column) {
  T value{};
  const auto* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError("line " + std::to_string(line_no) + ": bad " + column + " '" + cell + "'");
  }
  return value;
}

}  // namespace

std::vector<SessionMetrics> metrics_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<SessionMetrics> rows;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != kMetricsCsvHeader) throw ParseError("line 1: unexpected header '" + line + "'");
      header = true;
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != 10) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 10 columns, got " + std::to_string(cells.size()));
    }
    SessionMetrics m;
    m.session_id = cells[0];
    if (m.session_id.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty session_id");
    try {
      m.condition = condition_from_string(cells[1]);
    } catch (const Error&) {
      throw ParseError("line " + std::to_string(line_no) + ": bad condition '" + cells[1] + "'");
    }
    m.seed = parse_number<std::uint64_t>(cells[2], line_no, "seed");
    m.total_s = parse_number<double>(cells[3], line_no, "total_s");
    m.one_handed_s = parse_number<double>(cells[4], line_no, "one_handed_s");
    m.two_handed_s = parse_number<double>(cells[5], line_no, "two_handed_s");
    m.errors.simple = parse_number<std::int64_t>(cells[6], line_no, "simple");
    m.errors.critical = parse_number<std::int64_t>(cells[7], line_no, "critical");
    m.errors.repetition = parse_number<std::int64_t>(cells[8], line_no, "repetition");
    const auto weighted = parse_number<std::int64_t>(cells[9], line_no, "weighted_total");
    if (m.total_s < 0 || m.one_handed_s < 0 || m.two_handed_s < 0 || m.errors.simple < 0 || m.errors.critical < 0 ||
        m.errors.repetition < 0) {
      throw ParseError("line " + std::to_string(line_no) + ": negative value");
    }
    if (weighted != m.weighted()) throw ParseError("line " + std::to_string(line_no) + ": weighted_total disagrees with counts");
    rows.push_back(std::move(m));
  }
  if (!header) throw ParseError("metrics CSV is empty");
  return rows;
}

}  // namespace replica_sync
