// replica-sync: simulate inspection sessions, analyse them, replay logs and
// check the published reference figures.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "replica_sync/errors.hpp"
#include "replica_sync/experiment.hpp"
#include "replica_sync/report.hpp"

namespace fs = std::filesystem;
using namespace replica_sync;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << content;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("REPLICA_SYNC_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(std::string("REPLICA_SYNC_SEED is not an unsigned integer: ") + env);
    }
  }
  return 1;
}

std::vector<Condition> selected(const std::string& condition) {
  if (condition == "both") return {Condition::Tablet, Condition::HMD};
  return {condition_from_string(condition)};
}

struct SimulateArgs {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> sessions;
  std::string condition = "both";
  std::string plan;
  std::vector<std::string> profiles;
  std::string routing;
  std::string out = "out";
  unsigned workers = 1;
};

RunConfig build_config(const SimulateArgs& a) {
  RunConfig c = default_run_config();
  c.seed = resolve_seed(a.seed);
  c.workers = a.workers;
  if (!a.routing.empty()) c.env.routing = load_routing_file(a.routing);
  if (!a.plan.empty()) c.plan = load_plan_file(a.plan);
  const auto conditions = selected(a.condition);
  for (const auto& spec : a.profiles) {
    // Either "<condition>=<path>" or a bare path applied to every condition.
    const auto eq = spec.find('=');
    if (eq != std::string::npos && (spec.substr(0, eq) == "tablet" || spec.substr(0, eq) == "hmd")) {
      c.profiles[condition_from_string(spec.substr(0, eq))] = load_profile_file(spec.substr(eq + 1));
    } else {
      for (Condition cond : conditions) c.profiles[cond] = load_profile_file(spec);
    }
  }
  for (Condition cond : conditions) {
    if (a.sessions) {
      c.sessions[cond] = *a.sessions;
    } else {
      c.sessions[cond] = cond == Condition::Tablet ? kTabletParticipants : kHmdParticipants;
    }
  }
  return c;
}

int cmd_simulate(const SimulateArgs& a) {
  const RunConfig config = build_config(a);
  const auto corpus = simulate_corpus(config);
  const fs::path out(a.out);
  fs::create_directories(out / "logs");
  std::vector<SessionMetrics> rows;
  for (const auto& s : corpus) {
    write_file(out / "logs" / (s.id + ".jsonl"), to_jsonl(s.log));
    rows.push_back(s.metrics);
  }
  write_file(out / "metrics.csv", to_csv(rows));
  std::cout << "simulated " << corpus.size() << " sessions (seed " << config.seed << ") into " << out.string() << "\n";
  return 0;
}

int cmd_analyze(const std::string& csv_path, const std::string& out_dir, bool plots) {
  const auto rows = metrics_from_csv(read_file(csv_path));
  const auto report = analyze(rows);
  const fs::path out(out_dir);
  fs::create_directories(out);
  const auto md = report_markdown(report);
  write_file(out / "report.md", md);
  write_file(out / "results.csv", report_results_csv(report));
  if (plots) {
    for (const auto& name : measure_names()) {
      std::map<Condition, std::vector<double>> values;
      for (const auto& [c, n] : report.sessions) values[c] = measure_values(rows, c, name);
      write_file(out / ("hist_" + name + ".svg"), histogram_svg(name, values));
    }
  }
  std::cout << md;
  return 0;
}

int cmd_replay(const std::string& log_path) {
  const auto log = session_log_from_jsonl(read_file(log_path));
  validate_log(log);
  const auto m = session_metrics(fs::path(log_path).stem().string(), log);
  const auto t = block_times(log);
  std::cout << "condition " << to_string(log.condition) << ", seed " << log.seed << ", " << log.events.size() << " events\n";
  for (const auto& e : log.events) {
    std::cout << std::setw(9) << e.t_ms << " ms  " << to_string(e.kind);
    if (!e.block.empty()) std::cout << " [" << e.block << (e.step ? "#" + std::to_string(*e.step) : "") << "]";
    if (e.valve) std::cout << " " << *e.valve;
    if (e.correct) std::cout << (*e.correct ? " ok" : " wrong");
    if (e.value) std::cout << " " << *e.value << " C";
    if (e.commit_version) std::cout << " v" << *e.commit_version;
    std::cout << "\n";
  }
  std::cout << "\nblocks:\n";
  for (const auto& b : t.blocks) std::cout << "  " << b.block << " (" << to_string(b.kind) << "): " << b.duration_s << " s\n";
  std::cout << "total " << m.total_s << " s; errors simple " << m.errors.simple << ", critical " << m.errors.critical
            << ", repetition " << m.errors.repetition << ", weighted " << m.weighted() << "\n";
  const bool restored = log.final_valves == log.initial_valves;
  std::cout << "valves " << (restored ? "restored to" : "differ from") << " the initial state\n";
  return 0;
}

int cmd_paper_check() {
  bool all = true;
  for (const auto& r : paper_check()) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    all = all && r.pass;
  }
  return all ? 0 : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Replica-synchronised remote maintenance: session simulator and analysis"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate sessions and write JSONL logs plus metrics.csv");
  simulate->add_option("--seed", sim.seed, "Base seed (falls back to REPLICA_SYNC_SEED, then 1)");
  simulate->add_option("--sessions", sim.sessions, "Sessions per condition (default 19 Tablet, 20 HMD)");
  simulate->add_option("--condition", sim.condition, "tablet, hmd or both")
      ->check(CLI::IsMember({"tablet", "hmd", "both"}));
  simulate->add_option("--plan", sim.plan, "Inspection plan JSON");
  simulate->add_option("--profile", sim.profiles, "Operator profile JSON, optionally prefixed with tablet= or hmd=");
  simulate->add_option("--routing", sim.routing, "Routing table JSON");
  simulate->add_option("--out", sim.out, "Output directory");
  simulate->add_option("--workers", sim.workers, "Parallel sessions (0: all cores)");

  std::string csv_path;
  std::string analyze_out = "report";
  bool no_plots = false;
  auto* analyze_cmd = app.add_subcommand("analyze", "Run the normality-branching test pipeline over a metrics CSV");
  analyze_cmd->add_option("csv", csv_path, "metrics.csv from simulate")->required();
  analyze_cmd->add_option("--out", analyze_out, "Output directory");
  analyze_cmd->add_flag("--no-plots", no_plots, "Skip SVG histograms");

  std::string log_path;
  auto* replay = app.add_subcommand("replay", "Print a session log's timeline and metrics");
  replay->add_option("log", log_path, "Session JSONL log")->required();

  auto* check = app.add_subcommand("paper-check", "Recompute the reference study's published figures");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*simulate) {
      if (sim.sessions && *sim.sessions < 1) throw ConfigError("--sessions must be at least 1");
      return cmd_simulate(sim);
    }
    if (*analyze_cmd) return cmd_analyze(csv_path, analyze_out, !no_plots);
    if (*replay) return cmd_replay(log_path);
    if (*check) return cmd_paper_check();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
