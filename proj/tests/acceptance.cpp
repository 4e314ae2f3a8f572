// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>

#include "replica_sync/experiment.hpp"
#include "replica_sync/report.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace replica_sync;
using test_support::plant;
using test_support::uniform01;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  failures += !o.pass;
  std::printf("%s %d %s: %s [%.1f ms]\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(), ms);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// ---------------------------------------------------------------- 1 --

Outcome anova_reconstruction() {
  const auto t0 = std::chrono::steady_clock::now();
  const TestResult r = anova_oneway_summary({{19, 763.65, 76.80}, {20, 623.55, 67.70}});
  const double us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = r.statistic >= 36.3 && r.statistic <= 36.9 && r.df && r.df->first == 1 && r.df->second == 37 &&
                  r.p_value < 1e-6 && us < 1000;
  return {ok, fmt("F(%.0f,%.0f) = %.4f", r.df->first, r.df->second, r.statistic) + fmt(", p = %.3g, %.1f us", r.p_value, us)};
}

// ---------------------------------------------------------------- 2 --

Outcome ponderation() {
  const auto t = weighted_total({49, 6, 3});
  const auto h = weighted_total({3, 1, 0});
  return {t == 64 && h == 5, fmt("(49,6,3) -> %.0f, (3,1,0) -> %.0f", double(t), double(h))};
}

// ---------------------------------------------------------------- 3 --

Outcome percentages() {
  struct P {
    double base, treat, pct;
  };
  const std::vector<P> cases = {{763.65, 623.55, 18.35}, {193.26, 146.43, 24.24}, {146.7, 105.86, 27.84},
                                {3.37, 0.25, 92.58},     {49, 3, 93.88},          {6, 1, 83.33}};
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    const double got = 100 * percent_improvement(c.base, c.treat);
    ok = ok && std::abs(got - c.pct) <= 0.01;
    detail += fmt("%.4f%% ", got);
  }
  return {ok, detail + "(tolerance 0.01 pp)"};
}

// ---------------------------------------------------------------- 4 --

Outcome convergence() {
  std::size_t bad = 0, commits = 0;
  std::string first;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    const auto r = test_support::convergence_trial(seed);
    commits += r.commits;
    if (!(r.clients_match_host && r.working_copies_match && r.host_matches_oracle && r.errors.empty())) {
      if (!bad++) first = "seed " + std::to_string(seed) + (r.errors.empty() ? "" : ": " + r.errors.front());
    }
  }
  return {bad == 0, std::to_string(1000 - bad) + "/1000 trials converged, " + std::to_string(commits) + " commits" +
                        (first.empty() ? "" : "; first failure " + first)};
}

// ---------------------------------------------------------------- 5 --

/// Random single-field edit on `node` for `field`.
EditOp field_edit(std::mt19937_64& rng, const NodeId& node, Field field) {
  switch (field) {
    case Field::Pose:
      return SetPose{node, Pose::make({uniform01(rng), uniform01(rng), uniform01(rng)}, Quat::from_yaw(6.28 * uniform01(rng)))};
    case Field::ValveState:
      return SetValveState{node, uniform01(rng) < 0.5 ? ValveState::Open : ValveState::Closed};
    case Field::Highlight:
      return SetHighlight{node, Rgb{uniform01(rng), uniform01(rng), uniform01(rng)}};
    case Field::Indication:
      break;
  }
  return SetIndication{node, uniform01(rng) < 0.5};
}

bool same_field(const SceneModel& a, const SceneModel& b, const NodeId& node, Field field) {
  const auto& x = a.node(node);
  const auto& y = b.node(node);
  switch (field) {
    case Field::Pose:
      return x.local_pose == y.local_pose;
    case Field::ValveState:
      return x.valve_state == y.valve_state;
    case Field::Highlight:
      return x.visual.highlight_color == y.visual.highlight_color;
    case Field::Indication:
      break;
  }
  return x.visual.indication_animation == y.visual.indication_animation;
}

SyncRequest one_edit(const SceneModel& base, const ClientId& who, Role role, EditOp op) {
  Replica r = create_replica(base, who, role);
  r = edit_replica(r, Edit{std::move(op), role, 1});
  return make_sync_request(r);
}

Outcome precedence_and_retention() {
  std::mt19937_64 rng(20240605);
  const auto valves = plant().valve_ids();
  std::vector<NodeId> nodes;
  for (const auto& [id, n] : plant().nodes) nodes.push_back(id);
  std::size_t precedence_violations = 0, retention_violations = 0, removals_tried = 0;
  for (int i = 0; i < 10000; ++i) {
    // Age the shared model with a few prior commits, annotations included.
    SceneModel shared = plant();
    int counter = 0;
    const int prior = std::uniform_int_distribution<int>(0, 4)(rng);
    for (int k = 0; k < prior; ++k) {
      const Role role = uniform01(rng) < 0.5 ? Role::Expert : Role::Operator;
      const EditOp op = test_support::random_edit(rng, shared, "p" + std::to_string(k), counter);
      shared = synchronize(one_edit(shared, "prior", role, op), shared).merged;
    }
    for (int k = 0; k < 2; ++k) {
      Annotation a{"kept-" + std::to_string(k), uniform01(rng) < 0.5 ? Role::Expert : Role::Operator,
                   test_support::pick(rng, nodes), "keep", {}};
      shared = synchronize(one_edit(shared, "prior", a.author_role, AddAnnotation{a}), shared).merged;
    }

    // Single-field conflict, submitted concurrently in a random order.
    const Field field = static_cast<Field>(std::uniform_int_distribution<int>(0, 3)(rng));
    const NodeId node = field == Field::ValveState || field == Field::Indication ? test_support::pick(rng, valves)
                                                                                  : test_support::pick(rng, nodes);
    const EditOp expert_op = field_edit(rng, node, field);
    const EditOp operator_op = field_edit(rng, node, field);
    const SyncRequest ex = one_edit(shared, "expert", Role::Expert, expert_op);
    const SyncRequest op = one_edit(shared, "operator", Role::Operator, operator_op);
    const bool expert_first = uniform01(rng) < 0.5;
    SceneModel merged = synchronize(expert_first ? ex : op, shared).merged;
    merged = synchronize(expert_first ? op : ex, merged).merged;
    const SceneModel expected = apply_edit(shared, Edit{expert_op, Role::Expert, 1});
    precedence_violations += !same_field(merged, expected, node, field);

    // Operator removals of shared annotations never take effect.
    Replica r = create_replica(merged, "operator", Role::Operator);
    std::uint64_t seq = 1;
    for (const auto& [id, a] : merged.annotations) {
      if (uniform01(rng) < 0.7) {
        r = edit_replica(r, Edit{RemoveAnnotation{id}, Role::Operator, seq++});
        ++removals_tried;
      }
    }
    r = edit_replica(r, Edit{test_support::random_edit(rng, r.working, "o", counter), Role::Operator, seq++});
    const SceneModel after = synchronize(make_sync_request(r), merged).merged;
    for (const auto& [id, a] : merged.annotations) retention_violations += !after.annotations.contains(id);
  }
  return {precedence_violations == 0 && retention_violations == 0 && removals_tried > 0,
          std::to_string(precedence_violations) + " precedence and " + std::to_string(retention_violations) +
              " retention violations over 10000 cases (" + std::to_string(removals_tried) + " operator removals)"};
}

// ---------------------------------------------------------------- 6 --

double pairwise_u(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0;
  for (double x : a)
    for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  return u;
}

double enumerated_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const double mu = a.size() * b.size() / 2.0;
  const double obs = std::abs(pairwise_u(a, b) - mu);
  std::vector<int> label(pooled.size(), 0);
  std::fill(label.end() - a.size(), label.end(), 1);
  std::size_t hit = 0, total = 0;
  do {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < pooled.size(); ++i) (label[i] ? x : y).push_back(pooled[i]);
    hit += std::abs(pairwise_u(x, y) - mu) >= obs - 1e-9;
    ++total;
  } while (std::next_permutation(label.begin(), label.end()));
  return double(hit) / double(total);
}

Outcome statistics_oracles() {
  std::mt19937_64 rng(6);
  std::string why;
  // MWW: every size pair with n1 + n2 <= 10, continuous and tied data.
  std::size_t pairs = 0, mww_bad = 0;
  for (std::size_t n1 = 1; n1 <= 9; ++n1) {
    for (std::size_t n2 = 1; n1 + n2 <= 10; ++n2) {
      ++pairs;
      for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> a(n1), b(n2);
        for (auto& x : a) x = rep % 2 ? double(rng() % 5) : uniform01(rng);
        for (auto& x : b) x = rep % 2 ? double(rng() % 5) : uniform01(rng);
        const auto r = mann_whitney({a, "a"}, {b, "b"});
        mww_bad += !(r.exact && r.statistic == pairwise_u(a, b) && std::abs(r.p_value - enumerated_p(a, b)) <= 1e-12);
      }
    }
  }
  // Shapiro-Wilk.
  const double w3 = shapiro_wilk({{1, 2, 3}, ""}).statistic;
  double max_invariance = 0;
  std::gamma_distribution<double> g(2.0, 3.0);
  for (std::size_t n = 3; n <= 50; ++n) {
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = 7.3 * (x[i] = g(rng)) - 20;
    max_invariance = std::max(max_invariance, std::abs(shapiro_wilk({x, ""}).statistic - shapiro_wilk({y, ""}).statistic));
  }
  // ANOVA raw vs summary on moment-matched data.
  double max_anova = 0;
  std::normal_distribution<double> z;
  for (int i = 0; i < 100; ++i) {
    const std::size_t k = 2 + rng() % 4;
    std::vector<GroupSummary> sums;
    std::vector<Sample> raws;
    for (std::size_t j = 0; j < k; ++j) {
      const GroupSummary s{2 + rng() % 30, 100 * uniform01(rng) - 50, 0.1 + 20 * uniform01(rng)};
      std::vector<double> v(s.n);
      for (auto& x : v) x = z(rng);
      const double m = std::accumulate(v.begin(), v.end(), 0.0) / s.n;
      double ss = 0;
      for (double x : v) ss += (x - m) * (x - m);
      const double sd = std::sqrt(ss / (s.n - 1));
      for (auto& x : v) x = s.mean + s.sd * (x - m) / sd;
      sums.push_back(s);
      raws.push_back({v, ""});
    }
    const double fa = anova_oneway_raw(raws).statistic;
    const double fb = anova_oneway_summary(sums).statistic;
    max_anova = std::max(max_anova, std::abs(fa - fb) / std::max(1.0, fb));
  }
  const bool ok = mww_bad == 0 && std::abs(w3 - 1.0) <= 1e-9 && max_invariance <= 1e-12 && max_anova <= 1e-9;
  return {ok, std::to_string(pairs) + " MWW size pairs, " + std::to_string(mww_bad) + " mismatches; " +
                  fmt("W{1,2,3} - 1 = %.2e; SW invariance %.2e; ANOVA raw/summary %.2e", w3 - 1.0, max_invariance, max_anova)};
}

// ---------------------------------------------------------------- 7 --

double total_time_p(const std::vector<SessionMetrics>& rows) {
  const auto& m = analyze(rows).measure("total_s");
  return m.test ? m.test->p_value : 1.0;
}

Outcome pipeline_power() {
  RunConfig base = default_run_config();
  base.workers = 0;
  int detected = 0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    RunConfig c = base;
    c.sessions = {{Condition::Tablet, kTabletParticipants}, {Condition::HMD, kHmdParticipants}};
    c.seed = 1000 + rep;
    std::vector<SessionMetrics> rows;
    for (const auto& s : simulate_corpus(c)) rows.push_back(s.metrics);
    detected += total_time_p(rows) < 0.01;
  }
  // Null: both groups drawn from the same condition and profile, the
  // second group relabelled.
  int false_positive = 0;
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    RunConfig c = base;
    c.sessions = {{Condition::Tablet, kTabletParticipants + kHmdParticipants}};
    c.seed = 50000 + rep;
    std::vector<SessionMetrics> rows;
    for (const auto& s : simulate_corpus(c)) rows.push_back(s.metrics);
    for (std::size_t i = kTabletParticipants; i < rows.size(); ++i) rows[i].condition = Condition::HMD;
    false_positive += total_time_p(rows) < 0.05;
  }
  const double fpr = false_positive / 200.0;
  return {detected >= 95 && fpr >= 0.01 && fpr <= 0.12,
          fmt("significant at p < 0.01 in %.0f/100; null false-positive rate %.3f over 200", detected, fpr)};
}

// ---------------------------------------------------------------- 8 --

Outcome scenario_integrity() {
  const SessionEnvironment env = default_environment();
  const ValveRegistry reg = registry_from_model(env.model);
  std::size_t bad_plan = 0, not_restored = 0, unpaired = 0, paired = 0;
  for (std::optional<std::uint64_t> shuffle : {std::optional<std::uint64_t>{}, std::optional<std::uint64_t>{7}}) {
    for (const auto& part : build_default_plan(reg, shuffle).parts)
      for (const auto& b : part.blocks)
        bad_plan += (b.kind == BlockKind::OneHanded && b.operations.size() != 4) ||
                    (b.kind == BlockKind::TwoHanded && b.operations.size() != 2);
  }
  const InspectionPlan plan = build_default_plan(reg);
  for (Condition c : {Condition::Tablet, Condition::HMD}) {
    OperatorProfile p = default_profile(c);
    p.p_simple = p.p_critical = p.p_repeat = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      const SessionLog log = run_session(plan, c, p, default_expert_policy(), seed, env);
      not_restored += log.final_valves != log.initial_valves;
    }
  }
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const SessionRun run =
        run_session_detailed(plan, Condition::HMD, default_profile(Condition::HMD), default_expert_policy(), seed, env);
    // The commit versions the operator actually received.
    std::set<std::uint64_t> delivered;
    for (const auto& t : run.trace)
      if (const auto* c = std::get_if<payload::SyncCommit>(&t.envelope.payload); c && t.to == "operator")
        delivered.insert(c->new_version);
    std::optional<SessionEvent> indication;
    for (const auto& e : run.log.events) {
      if (e.kind == EventKind::ReplicaIndication) indication = e;
      if (e.kind == EventKind::Instruction && e.block_kind && *e.block_kind != BlockKind::NoManipulation) {
        const bool ok = indication && indication->valve == e.valve && indication->commit_version &&
                        delivered.contains(*indication->commit_version);
        ok ? ++paired : ++unpaired;
      }
    }
  }
  return {bad_plan == 0 && not_restored == 0 && unpaired == 0 && paired > 0,
          std::to_string(not_restored) + "/100 zero-error sessions not restored; " + std::to_string(paired) +
              " HMD instructions paired, " + std::to_string(unpaired) + " unpaired; " + std::to_string(bad_plan) +
              " malformed blocks"};
}

// ---------------------------------------------------------------- 9 --

std::uint64_t fnv1a_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::uint64_t h = 1469598103934665603ULL;
  for (char c; in.get(c);) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::map<std::string, std::uint64_t> tree_hashes(const fs::path& root) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = fnv1a_file(e.path());
  return out;
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "replica_sync_acceptance";
  fs::remove_all(dir);
  for (const char* run : {"a", "b"}) {
    const std::string workers = std::string(run) == "a" ? "1" : "0";
    const std::string cmd = "'" REPLICA_SYNC_CLI "' simulate --seed 2024 --workers " + workers + " --out '" +
                            (dir / run).string() + "' > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "simulate failed"};
  }
  const auto a = tree_hashes(dir / "a");
  const auto b = tree_hashes(dir / "b");
  fs::remove_all(dir);
  std::uint64_t combined = 0;
  for (const auto& [name, h] : a) combined = combined * 31 + h;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(combined));
  return {a == b && a.size() == 40, std::to_string(a.size()) + " files, identical hashes: " + (a == b ? "yes" : "no") +
                                        " (digest " + buf + ")"};
}

}  // namespace

int main() {
  criterion(1, "ANOVA reconstruction", anova_reconstruction);
  criterion(2, "Ponderation", ponderation);
  criterion(3, "Percentage suite", percentages);
  criterion(4, "Replica convergence", convergence);
  criterion(5, "Expert precedence and retention", precedence_and_retention);
  criterion(6, "Statistics oracles", statistics_oracles);
  criterion(7, "Pipeline power check", pipeline_power);
  criterion(8, "Scenario integrity", scenario_integrity);
  criterion(9, "Determinism", determinism);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
