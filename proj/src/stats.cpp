#include "replica_sync/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>

#include "replica_sync/errors.hpp"

namespace replica_sync {

namespace {

void require_finite(const Sample& s) {
  for (double v : s.values) {
    if (!std::isfinite(v)) throw StatsError("sample '" + s.label + "' contains a non-finite value");
  }
}

double poly(const double* c, int n, double x) {
  double r = c[n - 1];
  for (int i = n - 2; i >= 0; --i) r = r * x + c[i];
  return r;
}

double upper_normal(double x, double mean, double sd) {
  return boost::math::cdf(boost::math::complement(boost::math::normal(mean, sd), x));
}

}  // namespace

std::string_view to_string(StatisticName name) {
  switch (name) {
    case StatisticName::W_sw: return "W_sw";
    case StatisticName::U: return "U";
    case StatisticName::W_ranksum: return "W_ranksum";
    case StatisticName::F: return "F";
  }
  return "?";
}

double normal_cdf(double z) { return boost::math::cdf(boost::math::normal(), z); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw StatsError("normal quantile needs p in (0,1)");
  return boost::math::quantile(boost::math::normal(), p);
}

// ---------------------------------------------------------- Shapiro-Wilk --

std::vector<double> shapiro_wilk_coefficients(std::size_t n) {
  if (n < kShapiroWilkMinN || n > kShapiroWilkMaxN) {
    throw StatsError("Shapiro-Wilk needs 3 <= n <= 50, got " + std::to_string(n));
  }
  const std::size_t half = n / 2;
  std::vector<double> a(half);
  if (n == 3) {
    a[0] = 1.0 / std::sqrt(2.0);
    return a;
  }
  static const double c1[6] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
  static const double c2[6] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};

  const double an = static_cast<double>(n);
  std::vector<double> m(half);
  double summ2 = 0.0;
  for (std::size_t i = 0; i < half; ++i) {
    m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
    summ2 += m[i] * m[i];
  }
  summ2 *= 2.0;
  const double ssumm2 = std::sqrt(summ2);
  const double rsn = 1.0 / std::sqrt(an);
  const double a1 = poly(c1, 6, rsn) - m[0] / ssumm2;

  std::size_t first = 1;
  double fac;
  if (n > 5) {
    first = 2;
    const double a2 = -m[1] / ssumm2 + poly(c2, 6, rsn);
    fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
    a[1] = a2;
  } else {
    fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
  }
  a[0] = a1;
  for (std::size_t i = first; i < half; ++i) a[i] = -m[i] / fac;
  return a;
}

TestResult shapiro_wilk(const Sample& s) {
  const std::size_t n = s.values.size();
  if (n < kShapiroWilkMinN || n > kShapiroWilkMaxN) {
    throw StatsError("Shapiro-Wilk needs 3 <= n <= 50, got " + std::to_string(n));
  }
  require_finite(s);
  std::vector<double> x = s.values;
  std::sort(x.begin(), x.end());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  // Relative to the data's magnitude so the check is scale-free.
  const double scale = std::max(std::abs(x.front()), std::abs(x.back()));
  if (ss <= 0.0 || (x.back() - x.front()) <= 1e-12 * scale) {
    throw StatsError("Shapiro-Wilk: sample '" + s.label + "' has zero variance");
  }

  const auto a = shapiro_wilk_coefficients(n);
  double num = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) num += a[i] * (x[n - 1 - i] - x[i]);
  double w = std::min(1.0, num * num / ss);

  TestResult r;
  r.statistic = w;
  r.statistic_name = StatisticName::W_sw;
  r.exact = false;

  if (n == 3) {
    constexpr double pi = 3.14159265358979323846;
    const double pw = 6.0 / pi * (std::asin(std::sqrt(w)) - pi / 3.0);
    r.p_value = std::clamp(pw, 0.0, 1.0);
    return r;
  }

  static const double g[2] = {-2.273, 0.459};
  static const double c3[4] = {0.5440, -0.39978, 0.025054, -6.714e-4};
  static const double c4[4] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static const double c5[4] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static const double c6[3] = {-0.4803, -0.082676, 0.0030302};

  const double an = static_cast<double>(n);
  if (w >= 1.0) {
    r.p_value = 1.0;
    return r;
  }
  double y = std::log(1.0 - w);
  double mu;
  double sigma;
  if (n <= 11) {
    const double gamma = poly(g, 2, an);
    if (y >= gamma) {
      r.p_value = 1e-99;
      return r;
    }
    y = -std::log(gamma - y);
    mu = poly(c3, 4, an);
    sigma = std::exp(poly(c4, 4, an));
  } else {
    const double xx = std::log(an);
    mu = poly(c5, 4, xx);
    sigma = std::exp(poly(c6, 3, xx));
  }
  r.p_value = std::clamp(upper_normal(y, mu, sigma), 0.0, 1.0);
  return r;
}

// ----------------------------------------------------------- Mann-Whitney --

namespace {

std::vector<double> midranks(const std::vector<double>& pooled) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

TestResult mann_whitney(const Sample& a, const Sample& b, std::size_t exact_threshold) {
  if (a.values.empty() || b.values.empty()) throw StatsError("Mann-Whitney needs two non-empty samples");
  if (exact_threshold > kMaxExactThreshold) throw StatsError("exact threshold above " + std::to_string(kMaxExactThreshold));
  require_finite(a);
  require_finite(b);

  const std::size_t na = a.values.size();
  const std::size_t nb = b.values.size();
  const std::size_t n = na + nb;
  std::vector<double> pooled = a.values;
  pooled.insert(pooled.end(), b.values.begin(), b.values.end());
  const auto ranks = midranks(pooled);

  const double offset = static_cast<double>(na) * static_cast<double>(na + 1) / 2.0;
  const double rank_sum = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(na), 0.0);
  const double u = rank_sum - offset;
  const double mu = static_cast<double>(na) * static_cast<double>(nb) / 2.0;

  TestResult r;
  r.statistic = u;
  r.statistic_name = StatisticName::U;
  r.rank_sum = rank_sum;

  if (n <= exact_threshold) {
    // Every way to pick which na pooled positions belong to the first sample.
    const double observed = std::abs(u - mu) - 1e-9;
    std::uint64_t hits = 0;
    std::uint64_t total = 0;
    std::uint64_t mask = (std::uint64_t{1} << na) - 1;
    const std::uint64_t limit = std::uint64_t{1} << n;
    while (mask < limit) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (std::uint64_t{1} << i)) s += ranks[i];
      }
      if (std::abs(s - offset - mu) >= observed) ++hits;
      ++total;
      const std::uint64_t low = mask & (~mask + 1);
      const std::uint64_t ripple = mask + low;
      mask = (((ripple ^ mask) >> 2) / low) | ripple;
    }
    r.p_value = static_cast<double>(hits) / static_cast<double>(total);
    r.exact = true;
    return r;
  }

  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  const double dn = static_cast<double>(n);
  const double var = static_cast<double>(na) * static_cast<double>(nb) / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (var <= 0.0) {
    r.p_value = 1.0;
    return r;
  }
  const double z = std::max(0.0, std::abs(u - mu) - 0.5) / std::sqrt(var);
  r.p_value = std::min(1.0, 2.0 * upper_normal(z, 0.0, 1.0));
  return r;
}

// ------------------------------------------------------------------ ANOVA --

namespace {

TestResult f_test(double ss_between, double ss_within, double df1, double df2) {
  if (ss_between < 0.0) ss_between = 0.0;
  if (ss_within <= 0.0 && ss_between <= 0.0) throw StatsError("ANOVA is degenerate: no variance within or between groups");
  TestResult r;
  r.statistic_name = StatisticName::F;
  r.df = std::make_pair(df1, df2);
  if (ss_within <= 0.0) {
    r.statistic = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    return r;
  }
  r.statistic = (ss_between / df1) / (ss_within / df2);
  r.p_value = boost::math::cdf(boost::math::complement(boost::math::fisher_f(df1, df2), r.statistic));
  return r;
}

}  // namespace

TestResult anova_oneway_summary(const std::vector<GroupSummary>& groups) {
  if (groups.size() < 2) throw StatsError("ANOVA needs at least two groups");
  double n_total = 0.0;
  double weighted = 0.0;
  for (const auto& g : groups) {
    if (g.n < 2) throw StatsError("ANOVA needs n >= 2 in every group");
    if (!std::isfinite(g.mean) || !std::isfinite(g.sd) || g.sd < 0.0) throw StatsError("group summary must be finite with sd >= 0");
    n_total += static_cast<double>(g.n);
    weighted += static_cast<double>(g.n) * g.mean;
  }
  const double grand = weighted / n_total;
  double ssb = 0.0;
  double ssw = 0.0;
  for (const auto& g : groups) {
    ssb += static_cast<double>(g.n) * (g.mean - grand) * (g.mean - grand);
    ssw += static_cast<double>(g.n - 1) * g.sd * g.sd;
  }
  const double k = static_cast<double>(groups.size());
  return f_test(ssb, ssw, k - 1.0, n_total - k);
}

TestResult anova_oneway_raw(const std::vector<Sample>& groups) {
  if (groups.size() < 2) throw StatsError("ANOVA needs at least two groups");
  double n_total = 0.0;
  double sum = 0.0;
  for (const auto& g : groups) {
    if (g.values.size() < 2) throw StatsError("ANOVA needs n >= 2 in every group");
    require_finite(g);
    n_total += static_cast<double>(g.values.size());
    sum += std::accumulate(g.values.begin(), g.values.end(), 0.0);
  }
  const double grand = sum / n_total;
  double ssb = 0.0;
  double ssw = 0.0;
  for (const auto& g : groups) {
    const double n = static_cast<double>(g.values.size());
    const double mean = std::accumulate(g.values.begin(), g.values.end(), 0.0) / n;
    for (double v : g.values) ssw += (v - mean) * (v - mean);
    ssb += n * (mean - grand) * (mean - grand);
  }
  const double k = static_cast<double>(groups.size());
  return f_test(ssb, ssw, k - 1.0, n_total - k);
}

GroupSummary mean_sd(const Sample& s) {
  if (s.values.size() < 2) throw StatsError("mean_sd needs n >= 2");
  require_finite(s);
  const double n = static_cast<double>(s.values.size());
  const double mean = std::accumulate(s.values.begin(), s.values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : s.values) ss += (v - mean) * (v - mean);
  return GroupSummary{s.values.size(), mean, std::sqrt(ss / (n - 1.0))};
}

}  // namespace replica_sync
