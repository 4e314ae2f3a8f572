#include "replica_sync/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>

#include "replica_sync/errors.hpp"

namespace replica_sync {

namespace {

std::string format(const char* fmt, ...) {
  char buf[1024];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

const std::vector<Condition> kConditions = {Condition::Tablet, Condition::HMD};

std::string label(Condition c) { return c == Condition::Tablet ? "Tablet" : "HMD"; }

std::string p_text(double p) {
  if (p < 1e-6) return "< 1e-6";
  return format("%.4g", p);
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::None: return "none";
    case Method::ANOVA: return "ANOVA";
    case Method::MWW: return "MWW";
  }
  return "?";
}

const MeasureComparison& AnalysisReport::measure(const std::string& name) const {
  for (const auto& m : measures) {
    if (m.measure == name) return m;
  }
  throw StatsError("no measure '" + name + "' in report");
}

const std::vector<std::string>& measure_names() {
  static const std::vector<std::string> names = {"total_s", "one_handed_s", "two_handed_s", "simple",
                                                 "critical", "repetition",   "weighted_total"};
  return names;
}

std::vector<double> measure_values(const std::vector<SessionMetrics>& rows, Condition condition, const std::string& measure) {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.condition != condition) continue;
    if (measure == "total_s") {
      out.push_back(r.total_s);
    } else if (measure == "one_handed_s") {
      out.push_back(r.one_handed_s);
    } else if (measure == "two_handed_s") {
      out.push_back(r.two_handed_s);
    } else if (measure == "simple") {
      out.push_back(static_cast<double>(r.errors.simple));
    } else if (measure == "critical") {
      out.push_back(static_cast<double>(r.errors.critical));
    } else if (measure == "repetition") {
      out.push_back(static_cast<double>(r.errors.repetition));
    } else if (measure == "weighted_total") {
      out.push_back(static_cast<double>(r.weighted()));
    } else {
      throw StatsError("unknown measure '" + measure + "'");
    }
  }
  return out;
}

AnalysisReport analyze(const std::vector<SessionMetrics>& rows) {
  if (rows.empty()) throw StatsError("no sessions to analyze");
  AnalysisReport report;
  report.rows = rows;
  for (const auto& r : rows) {
    ++report.sessions[r.condition];
    report.error_totals[r.condition] += r.errors;
  }

  for (const auto& name : measure_names()) {
    MeasureComparison mc;
    mc.measure = name;
    std::map<Condition, Sample> samples;
    for (Condition c : kConditions) {
      if (!report.sessions.contains(c)) continue;
      Sample s{measure_values(rows, c, name), label(c)};
      if (s.values.size() >= 2) {
        mc.summaries[c] = mean_sd(s);
      } else {
        mc.summaries[c] = GroupSummary{s.values.size(), s.values.front(), 0.0};
      }
      NormalityCheck check;
      try {
        check.result = shapiro_wilk(s);
      } catch (const StatsError& e) {
        check.note = e.what();
      }
      mc.normality[c] = std::move(check);
      samples[c] = std::move(s);
    }
    if (report.between_groups()) {
      const auto& t = samples.at(Condition::Tablet);
      const auto& h = samples.at(Condition::HMD);
      const bool both_normal = mc.normality[Condition::Tablet].normal() && mc.normality[Condition::HMD].normal();
      if (both_normal) {
        mc.method = Method::ANOVA;
        mc.test = anova_oneway_raw({t, h});
      } else {
        mc.method = Method::MWW;
        mc.test = mann_whitney(t, h);
      }
      const double base = mc.summaries[Condition::Tablet].mean;
      if (base > 0.0) mc.improvement = percent_improvement(base, mc.summaries[Condition::HMD].mean);
    }
    report.measures.push_back(std::move(mc));
  }
  return report;
}

std::string report_markdown(const AnalysisReport& report) {
  std::string md = "# Session analysis\n\n";
  md += "| condition | sessions |\n|---|---|\n";
  for (const auto& [c, n] : report.sessions) md += format("| %s | %zu |\n", label(c).c_str(), n);

  md += "\n## Measures\n\n";
  md += "| measure | condition | n | mean | SD | SW W | SW p |\n|---|---|---|---|---|---|---|\n";
  for (const auto& m : report.measures) {
    for (const auto& [c, s] : m.summaries) {
      const auto& check = m.normality.at(c);
      std::string w = "n/a";
      std::string p = check.note.empty() ? "n/a" : "n/a (" + check.note + ")";
      if (check.result) {
        w = format("%.4f", check.result->statistic);
        p = p_text(check.result->p_value);
      }
      md += format("| %s | %s | %zu | %.3f | %.3f | %s | %s |\n", m.measure.c_str(), label(c).c_str(), s.n, s.mean, s.sd,
                   w.c_str(), p.c_str());
    }
  }

  if (report.between_groups()) {
    md += "\n## Between-condition tests\n\n";
    md += "| measure | test | statistic | p | significant (0.05) | improvement |\n|---|---|---|---|---|---|\n";
    for (const auto& m : report.measures) {
      const auto& t = *m.test;
      std::string stat;
      if (m.method == Method::ANOVA) {
        stat = format("F(%.0f,%.0f) = %.3f", t.df->first, t.df->second, t.statistic);
      } else {
        stat = format("U = %.1f, W = %.1f%s", t.statistic, *t.rank_sum, t.exact ? " (exact)" : "");
      }
      const std::string imp = m.improvement ? format("%.2f%%", 100.0 * *m.improvement) : "n/a";
      md += format("| %s | %s | %s | %s | %s | %s |\n", m.measure.c_str(), std::string(to_string(m.method)).c_str(),
                   stat.c_str(), p_text(t.p_value).c_str(), m.significant() ? "yes" : "no", imp.c_str());
    }
    md += "\nNormality is checked with Shapiro-Wilk at alpha 0.05; ANOVA runs only when both groups pass, "
          "Mann-Whitney otherwise. U is the first (Tablet) sample's statistic, W its midrank sum.\n";
  }

  md += "\n## Errors\n\n";
  md += "| error type |";
  std::string rule = "|---|";
  for (const auto& [c, n] : report.sessions) {
    md += format(" %s total | %s average |", label(c).c_str(), label(c).c_str());
    rule += "---|---|";
  }
  md += "\n" + rule + "\n";
  auto error_row = [&](const char* name, auto get) {
    md += format("| %s |", name);
    for (const auto& [c, n] : report.sessions) {
      const double v = static_cast<double>(get(report.error_totals.at(c)));
      md += format(" %.0f | %.2f |", v, v / static_cast<double>(n));
    }
    md += "\n";
  };
  error_row("Simple", [](const ErrorCounts& e) { return e.simple; });
  error_row("Critical", [](const ErrorCounts& e) { return e.critical; });
  error_row("Repetition", [](const ErrorCounts& e) { return e.repetition; });
  error_row("Total", [](const ErrorCounts& e) { return e.simple + e.critical + e.repetition; });
  error_row("Total with ponderation", [](const ErrorCounts& e) { return weighted_total(e); });

  if (report.between_groups()) {
    md += "\n## Improvements (HMD relative to Tablet)\n\n";
    for (const auto& m : report.measures) {
      if (m.improvement) {
        md += format("- %s: %.2f%% (%.3f -> %.3f)\n", m.measure.c_str(), 100.0 * *m.improvement,
                     m.summaries.at(Condition::Tablet).mean, m.summaries.at(Condition::HMD).mean);
      } else {
        md += format("- %s: n/a (Tablet mean is zero)\n", m.measure.c_str());
      }
    }
  }
  return md;
}

std::string report_results_csv(const AnalysisReport& report) {
  std::string out =
      "measure,tablet_n,tablet_mean,tablet_sd,hmd_n,hmd_mean,hmd_sd,tablet_sw_p,hmd_sw_p,method,statistic,rank_sum,df1,df2,p_value,"
      "exact,improvement\n";
  auto cell = [](const std::optional<double>& v, const char* fmt) { return v ? format(fmt, *v) : std::string{}; };
  for (const auto& m : report.measures) {
    std::string line = m.measure;
    for (Condition c : kConditions) {
      auto it = m.summaries.find(c);
      if (it == m.summaries.end()) {
        line += ",,,";
      } else {
        line += format(",%zu,%.6f,%.6f", it->second.n, it->second.mean, it->second.sd);
      }
    }
    for (Condition c : kConditions) {
      auto it = m.normality.find(c);
      std::optional<double> p;
      if (it != m.normality.end() && it->second.result) p = it->second.result->p_value;
      line += "," + cell(p, "%.6g");
    }
    line += "," + std::string(to_string(m.method));
    if (m.test) {
      const auto& t = *m.test;
      line += "," + format("%.6g", t.statistic) + "," + cell(t.rank_sum, "%.6g");
      line += t.df ? format(",%.0f,%.0f", t.df->first, t.df->second) : std::string(",,");
      line += format(",%.6g,%s", t.p_value, t.exact ? "true" : "false");
    } else {
      line += ",,,,,,";
    }
    line += "," + cell(m.improvement, "%.6f") + "\n";
    out += line;
  }
  return out;
}

std::string histogram_svg(const std::string& title, const std::map<Condition, std::vector<double>>& values,
                          std::size_t bins) {
  if (bins == 0) throw ConfigError("histogram needs at least one bin");
  double lo = INFINITY;
  double hi = -INFINITY;
  for (const auto& [c, v] : values) {
    for (double x : v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  if (hi <= lo) hi = lo + 1.0;
  const double width = (hi - lo) / static_cast<double>(bins);

  std::map<Condition, std::vector<std::size_t>> counts;
  std::size_t peak = 1;
  for (const auto& [c, v] : values) {
    auto& bucket = counts[c];
    bucket.assign(bins, 0);
    for (double x : v) {
      auto k = static_cast<std::size_t>((x - lo) / width);
      bucket[std::min(k, bins - 1)]++;
    }
    peak = std::max(peak, *std::max_element(bucket.begin(), bucket.end()));
  }

  const double W = 480, H = 300, left = 40, bottom = 260, top = 40;
  const double plot_w = W - left - 20;
  const double slot = plot_w / static_cast<double>(bins);
  const double bar = slot / static_cast<double>(std::max<std::size_t>(1, counts.size()));
  std::string svg = format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                           W, H, W, H);
  svg += format("<text x=\"%.0f\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">%s</text>\n", left, title.c_str());
  svg += format("<line x1=\"%.0f\" y1=\"%.0f\" x2=\"%.0f\" y2=\"%.0f\" stroke=\"black\"/>\n", left, bottom, left + plot_w, bottom);
  std::size_t series = 0;
  for (const auto& [c, bucket] : counts) {
    const char* color = c == Condition::Tablet ? "#4c72b0" : "#dd8452";
    for (std::size_t k = 0; k < bins; ++k) {
      const double h = (bottom - top) * static_cast<double>(bucket[k]) / static_cast<double>(peak);
      svg += format("<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"%s\"/>\n",
                    left + slot * static_cast<double>(k) + bar * static_cast<double>(series), bottom - h, bar, h, color);
    }
    svg += format("<text x=\"%.0f\" y=\"%.0f\" font-family=\"sans-serif\" font-size=\"11\" fill=\"%s\">%s (n=%zu)</text>\n",
                  W - 120, 20.0 + 14.0 * static_cast<double>(series), color, label(c).c_str(), values.at(c).size());
    ++series;
  }
  svg += format("<text x=\"%.0f\" y=\"%.0f\" font-family=\"sans-serif\" font-size=\"11\">%.2f</text>\n", left, bottom + 16, lo);
  svg += format("<text x=\"%.0f\" y=\"%.0f\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">%.2f</text>\n",
                left + plot_w, bottom + 16, hi);
  svg += "</svg>\n";
  return svg;
}

std::vector<CheckResult> paper_check(const ReferenceConstants& k) {
  std::vector<CheckResult> out;
  auto run = [&](const std::string& name, auto fn) {
    try {
      out.push_back(fn());
      out.back().name = name;
    } catch (const Error& e) {
      out.push_back({name, std::string("error: ") + e.what(), false});
    }
  };

  run("anova F(1,37) = 36.6", [&] {
    const auto r = anova_oneway_summary({k.tablet_total, k.hmd_total});
    const bool pass = std::abs(r.statistic - k.f_expected) <= k.f_tolerance && r.df->first == k.df_between &&
                      r.df->second == k.df_within && r.p_value < k.p_below;
    return CheckResult{"", format("F(%.0f,%.0f) = %.3f, p = %.3g", r.df->first, r.df->second, r.statistic, r.p_value), pass};
  });
  run("weighted total Tablet = 64", [&] {
    const auto w = weighted_total(k.tablet_errors);
    return CheckResult{"", format("%lld", static_cast<long long>(w)), w == k.tablet_weighted};
  });
  run("weighted total HMD = 5", [&] {
    const auto w = weighted_total(k.hmd_errors);
    return CheckResult{"", format("%lld", static_cast<long long>(w)), w == k.hmd_weighted};
  });
  run("weighted average Tablet = 3.37", [&] {
    const double a = static_cast<double>(weighted_total(k.tablet_errors)) / static_cast<double>(k.tablet_total.n);
    return CheckResult{"", format("%.4f", a), std::abs(a - k.tablet_weighted_average) <= k.average_tolerance};
  });
  run("weighted average HMD = 0.25", [&] {
    const double a = static_cast<double>(weighted_total(k.hmd_errors)) / static_cast<double>(k.hmd_total.n);
    return CheckResult{"", format("%.4f", a), std::abs(a - k.hmd_weighted_average) <= k.average_tolerance};
  });
  for (const auto& pc : k.percentages) {
    run(format("%s %.2f%%", pc.name.c_str(), pc.expected), [&] {
      const double v = 100.0 * percent_improvement(pc.baseline, pc.treatment);
      return CheckResult{"", format("%.4f%%", v), std::abs(v - pc.expected) <= k.percent_tolerance};
    });
  }
  return out;
}

}  // namespace replica_sync
