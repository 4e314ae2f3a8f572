#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "replica_sync/errors.hpp"
#include "replica_sync/stats.hpp"

using namespace replica_sync;

namespace {

const std::vector<double> kUniform20 = {
    7.918213070746603,  5.8086761509813369, 4.1486125353449523, 9.4703662304272278, 1.4274442405701404,
    4.6410582236211742, 5.9874049881028455, 5.4068107564936563, 7.9093423195960488, 7.3195001896114364,
    3.6104873536372661, 1.4814015423912419, 7.4811822765966172, 9.7364234306204125, 9.5362941749635848,
    7.9215196683821567, 0.47576200567041704, 1.8941702874673572, 5.9782516739745528, 0.080309742236510662};

Sample S(std::vector<double> v) { return Sample{std::move(v), ""}; }

/// Pairwise-count U: pairs with a > b, ties counted one half.
double pairwise_u(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0;
  for (double x : a)
    for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  return u;
}

/// Exact two-sided p by walking every labeling of the pooled values.
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

/// Raw data with exactly the requested moments.
Sample synthesize(std::size_t n, double mean, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  std::vector<double> v(n);
  for (auto& x : v) x = z(rng);
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  const double s = std::sqrt(ss / (n - 1));
  for (auto& x : v) x = mean + sd * (x - m) / s;
  return S(v);
}

}  // namespace

TEST(ShapiroWilk, ThreeEquallySpacedIsOne) {
  const auto r = shapiro_wilk(S({1, 2, 3}));
  EXPECT_NEAR(r.statistic, 1.0, 1e-9);
  EXPECT_EQ(r.statistic_name, StatisticName::W_sw);
  // asin(sqrt(W)) is steep at W = 1: one ulp in W moves p by ~1e-8.
  EXPECT_NEAR(r.p_value, 1.0, 1e-6);
}

TEST(ShapiroWilk, ThreeCoefficientIsExact) {
  const auto a = shapiro_wilk_coefficients(3);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_NEAR(a[0], 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(ShapiroWilk, CoefficientsNormalised) {
  for (std::size_t n = 3; n <= 50; ++n) {
    const auto a = shapiro_wilk_coefficients(n);
    EXPECT_EQ(a.size(), n / 2);
    double ss = 0;
    for (double c : a) ss += c * c;
    EXPECT_NEAR(2 * ss, 1.0, 1e-12) << n;
    EXPECT_TRUE(std::is_sorted(a.rbegin(), a.rend())) << n;
  }
}

TEST(ShapiroWilk, LocationScaleInvariance) {
  std::mt19937_64 rng(31);
  std::gamma_distribution<double> g(2.0, 3.0);
  for (std::size_t n = 3; n <= 50; n += 1) {
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = g(rng);
      y[i] = 7.3 * x[i] - 20;
    }
    const auto a = shapiro_wilk(S(x));
    const auto b = shapiro_wilk(S(y));
    EXPECT_NEAR(a.statistic, b.statistic, 1e-12) << n;
    EXPECT_NEAR(a.p_value, b.p_value, 1e-12) << n;
    EXPECT_GT(a.statistic, 0.0);
    EXPECT_LE(a.statistic, 1.0);
  }
}

// Oracle: expected normal order statistics by Monte Carlo (see oracles/).
TEST(ShapiroWilk, Uniform20AgainstOrderStatisticOracle) {
  EXPECT_NEAR(shapiro_wilk(S(kUniform20)).statistic, 0.934548, 1e-3);
}

TEST(ShapiroWilk, PinnedReferenceValues) {
  struct Case {
    std::vector<double> x;
    double w, p;
  };
  const std::vector<Case> cases = {
      {kUniform20, 0.934630671, 0.189500248},
      {{2.1, 3.4, 1.9, 5.6, 4.4}, 0.932084939, 0.610655902},
      {{1, 1.2, 1.3, 1.5, 2, 2.2, 3, 4.5, 7, 9.5, 15}, 0.775919558, 0.004538863},
      {{4.9, 5.1, 5.0, 6.2, 4.4, 5.8, 5.3, 4.7, 5.6, 5.2, 6.0, 4.1}, 0.982826678, 0.992505543},
      {{1, 2, 4}, 0.964285714, 0.636886845},
  };
  for (const auto& c : cases) {
    const auto r = shapiro_wilk(S(c.x));
    EXPECT_NEAR(r.statistic, c.w, 1e-6) << c.x.size();
    EXPECT_NEAR(r.p_value, c.p, 1e-5) << c.x.size();
  }
}

TEST(ShapiroWilk, Errors) {
  EXPECT_THROW(shapiro_wilk(S({1, 2})), StatsError);
  EXPECT_THROW(shapiro_wilk(S(std::vector<double>(51, 1.0))), StatsError);
  EXPECT_THROW(shapiro_wilk(S({4, 4, 4, 4})), StatsError);
  EXPECT_THROW(shapiro_wilk(S({1, 2, NAN})), StatsError);
  EXPECT_THROW(shapiro_wilk_coefficients(2), StatsError);
}

TEST(MannWhitney, Examples) {
  auto r = mann_whitney(S({1, 2}), S({3, 4}));
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.statistic_name, StatisticName::U);
  EXPECT_TRUE(r.exact);
  EXPECT_NEAR(r.p_value, 1.0 / 3.0, 1e-9);
  EXPECT_EQ(*r.rank_sum, 3.0);
  EXPECT_EQ(mann_whitney(S({1, 4}), S({2, 3})).statistic, 2.0);
  const std::vector<double> same{3, 1, 4, 1, 5};
  EXPECT_DOUBLE_EQ(mann_whitney(S(same), S(same)).statistic, 12.5);
}

TEST(MannWhitney, UComplementWithoutTies) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z;
  for (int i = 0; i < 200; ++i) {
    std::vector<double> a(1 + rng() % 12), b(1 + rng() % 12);
    for (auto& x : a) x = z(rng);
    for (auto& x : b) x = z(rng);
    EXPECT_DOUBLE_EQ(mann_whitney(S(a), S(b)).statistic + mann_whitney(S(b), S(a)).statistic,
                     double(a.size() * b.size()));
  }
}

TEST(MannWhitney, ExactMatchesEnumerationForAllSmallSizes) {
  std::mt19937_64 rng(2024);
  for (std::size_t n1 = 1; n1 <= 9; ++n1) {
    for (std::size_t n2 = 1; n1 + n2 <= 10; ++n2) {
      for (int rep = 0; rep < 4; ++rep) {
        // Alternate continuous data and heavily tied integer data.
        std::vector<double> a(n1), b(n2);
        for (auto& x : a) x = rep % 2 ? double(rng() % 4) : std::uniform_real_distribution<double>(0, 1)(rng);
        for (auto& x : b) x = rep % 2 ? double(rng() % 4) : std::uniform_real_distribution<double>(0, 1)(rng);
        const auto r = mann_whitney(S(a), S(b));
        ASSERT_TRUE(r.exact);
        ASSERT_DOUBLE_EQ(r.statistic, pairwise_u(a, b));
        ASSERT_NEAR(r.p_value, enumerated_p(a, b), 1e-12) << n1 << "+" << n2 << " rep " << rep;
      }
    }
  }
}

TEST(MannWhitney, PinnedReferenceValues) {
  const auto asym = mann_whitney(S({3, 5, 5, 7, 9, 9, 9, 12, 14, 15, 18}), S({1, 2, 2, 4, 5, 6, 8, 8, 10, 11}));
  EXPECT_FALSE(asym.exact);
  EXPECT_DOUBLE_EQ(asym.statistic, 82.0);
  EXPECT_NEAR(asym.p_value, 0.061184174850, 1e-9);
  const auto ex = mann_whitney(S({1.5, 2.5, 7.1, 3.3, 9.0, 4.2}), S({5.5, 6.6, 8.1, 9.9, 10.4, 12.0, 11.1}));
  EXPECT_TRUE(ex.exact);
  EXPECT_DOUBLE_EQ(ex.statistic, 5.0);
  EXPECT_NEAR(ex.p_value, 0.022144522145, 1e-9);
  EXPECT_DOUBLE_EQ(*ex.rank_sum, 5.0 + 6 * 7 / 2.0);
}

TEST(MannWhitney, ThresholdSelectsPath) {
  const Sample a = S({1.5, 2.5, 7.1, 3.3, 9.0, 4.2});
  const Sample b = S({5.5, 6.6, 8.1, 9.9, 10.4, 12.0, 11.1});
  EXPECT_FALSE(mann_whitney(a, b, 12).exact);
  EXPECT_TRUE(mann_whitney(a, b, 13).exact);
  const auto all_tied = mann_whitney(S({2, 2, 2, 2, 2, 2, 2, 2, 2}), S({2, 2, 2, 2, 2, 2, 2, 2, 2}));
  EXPECT_FALSE(all_tied.exact);
  EXPECT_DOUBLE_EQ(all_tied.p_value, 1.0);
}

TEST(MannWhitney, Errors) {
  EXPECT_THROW(mann_whitney(S({}), S({1})), StatsError);
  EXPECT_THROW(mann_whitney(S({1}), S({})), StatsError);
  EXPECT_THROW(mann_whitney(S({1}), S({2}), kMaxExactThreshold + 1), StatsError);
}

TEST(Anova, HandComputedExample) {
  const auto r = anova_oneway_raw({S({1, 2, 3}), S({4, 5, 6})});
  EXPECT_NEAR(r.statistic, 13.5, 1e-12);
  ASSERT_TRUE(r.df);
  EXPECT_EQ(*r.df, (std::pair<double, double>{1, 4}));
  EXPECT_NEAR(r.p_value, 0.021311641129, 1e-9);
  EXPECT_EQ(r.statistic_name, StatisticName::F);
}

TEST(Anova, PinnedThreeGroups) {
  const auto r = anova_oneway_raw({S({2.0, 3.1, 4.5, 3.3}), S({5.2, 6.1, 5.9}), S({4.0, 4.4, 3.9, 5.0, 4.8})});
  EXPECT_NEAR(r.statistic, 10.774757675155715, 1e-9);
  EXPECT_NEAR(r.p_value, 0.004088573701287662, 1e-9);
  EXPECT_EQ(*r.df, (std::pair<double, double>{2, 9}));
}

TEST(Anova, IdenticalGroupsAndEqualMeans) {
  const auto r = anova_oneway_raw({S({1, 2, 3}), S({1, 2, 3})});
  EXPECT_DOUBLE_EQ(r.statistic, 0.0);
  EXPECT_DOUBLE_EQ(r.p_value, 1.0);
  EXPECT_DOUBLE_EQ(anova_oneway_summary({{10, 5.0, 1.0}, {12, 5.0, 3.0}}).statistic, 0.0);
}

TEST(Anova, PublishedTotalTime) {
  const auto r = anova_oneway_summary({{19, 763.65, 76.80}, {20, 623.55, 67.70}});
  EXPECT_NEAR(r.statistic, 36.6, 0.3);
  EXPECT_EQ(*r.df, (std::pair<double, double>{1, 37}));
  EXPECT_LT(r.p_value, 1e-6);
  EXPECT_GT(r.p_value, 0.0);
}

TEST(Anova, RawMatchesSummaryOnMomentMatchedData) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 100; ++i) {
    const std::size_t k = 2 + rng() % 4;
    std::vector<GroupSummary> sums;
    std::vector<Sample> raws;
    for (std::size_t g = 0; g < k; ++g) {
      const GroupSummary s{2 + rng() % 30, 100 * u(rng) - 50, 0.1 + 20 * u(rng)};
      sums.push_back(s);
      raws.push_back(synthesize(s.n, s.mean, s.sd, rng));
    }
    const auto a = anova_oneway_raw(raws);
    const auto b = anova_oneway_summary(sums);
    ASSERT_NEAR(a.statistic, b.statistic, 1e-9 * std::max(1.0, b.statistic));
    ASSERT_NEAR(a.p_value, b.p_value, 1e-9);
    ASSERT_EQ(a.df, b.df);
  }
}

TEST(Anova, ScaleEquivariance) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(10, 3);
  std::vector<Sample> g(3);
  for (auto& s : g)
    for (int i = 0; i < 8; ++i) s.values.push_back(z(rng));
  const double f = anova_oneway_raw(g).statistic;
  for (auto& s : g)
    for (auto& x : s.values) x *= 4.25;
  EXPECT_NEAR(anova_oneway_raw(g).statistic, f, 1e-9 * f);
}

TEST(Anova, DegenerateAndErrors) {
  const auto inf = anova_oneway_raw({S({1, 1}), S({2, 2})});
  EXPECT_TRUE(std::isinf(inf.statistic));
  EXPECT_EQ(inf.p_value, 0.0);
  EXPECT_THROW(anova_oneway_raw({S({1, 1}), S({1, 1})}), StatsError);
  EXPECT_THROW(anova_oneway_raw({S({1, 2, 3})}), StatsError);
  EXPECT_THROW(anova_oneway_raw({S({1, 2, 3}), S({4})}), StatsError);
  EXPECT_THROW(anova_oneway_summary({{1, 3.0, 0.0}, {5, 2.0, 1.0}}), StatsError);
  EXPECT_THROW(anova_oneway_summary({{4, 3.0, 1.0}}), StatsError);
}

TEST(MeanSd, Examples) {
  auto s = mean_sd(S({2, 4}));
  EXPECT_EQ(s.n, 2u);
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  EXPECT_DOUBLE_EQ(s.sd, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(mean_sd(S({5, 5, 5})).sd, 0.0);
  EXPECT_THROW(mean_sd(S({1})), StatsError);
}

TEST(MeanSd, RecoversGeneratorMoments) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(763.65, 76.80);
  Sample s;
  for (int i = 0; i < 100000; ++i) s.values.push_back(z(rng));
  const auto g = mean_sd(s);
  EXPECT_NEAR(g.mean, 763.65, 4 * 76.80 / std::sqrt(1e5));
  EXPECT_NEAR(g.sd, 76.80, 4 * 76.80 / std::sqrt(2e5));
}

TEST(Normal, CdfAndQuantile) {
  EXPECT_NEAR(normal_cdf(0), 0.5, 1e-15);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
  for (double p : {1e-8, 0.01, 0.3, 0.5, 0.9, 0.999}) EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-12 + 1e-9 * p);
}
