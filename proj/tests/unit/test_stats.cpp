#include <gtest/gtest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <random>

#include "lesioneval/error.hpp"
#include "lesioneval/stats.hpp"
#include "oracles.hpp"
#include "shapiro_cases.hpp"

using namespace lesioneval;
using oracle::shapiro_cases;

namespace {

const std::vector<double> kPaired30 = {1.779912,  -0.118824, -0.185987, 0.571009,  -0.556142, 0.900599,
                                       -0.596652, -0.305781, 0.940274,  -0.763272, 2.777261,  1.194423,
                                       -0.792409, 0.743046,  -1.84505,  1.446292,  1.876236,  0.598123,
                                       1.308728,  -1.113495, 0.190193,  0.941382,  1.268468,  -0.295433,
                                       -0.482983, -0.913091, -0.571881, 0.627705,  0.643593,  0.450283};

const std::vector<double> kGroupA = {0.788029,  -1.342908, -1.475059, 0.211522,  -1.705132, -0.830901, 1.6655,
                                     0.428529,  0.899479,  -0.281488, -0.741305, 0.161723,  -0.534201, 0.708954,
                                     0.267043,  0.347374,  -0.070234, -0.556983, -0.239125, 1.120154,  -1.356165,
                                     0.810531,  -1.736871, -0.271174, -0.911145};
const std::vector<double> kGroupB = {1.347117,  -0.683761, 0.610826, 1.743126,  0.954936, 0.024494,  0.461609,
                                     -0.242083, 1.407674,  2.587439, 1.894481,  -0.959385, -0.485547, 0.575104,
                                     -0.941703, 2.160343,  0.180866, 0.261324,  -0.146114, 0.810818,  0.751082,
                                     0.281037,  2.435409,  1.625991, -0.534026};

std::vector<double> distinct_values(std::size_t n, std::mt19937_64& rng, bool signed_values) {
  std::uniform_real_distribution<double> u(0.05, 5.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> v;
  while (v.size() < n) {
    double x = std::round(u(rng) * 1e4) / 1e4;
    if (std::find_if(v.begin(), v.end(), [&](double y) { return std::fabs(y) == x; }) != v.end()) continue;
    if (signed_values && coin(rng)) x = -x;
    v.push_back(x);
  }
  return v;
}

}  // namespace

TEST(ShapiroWilk, SymmetricTriple) {
  const std::vector<double> x = {-1, 0, 1};
  const auto r = shapiro_wilk(x);
  EXPECT_NEAR(r.statistic, 1.0, 1e-6);
  EXPECT_NEAR(r.p_value, 1.0, 1e-6);
}

TEST(ShapiroWilk, FrozenReferenceVectors) {
  for (const auto& c : shapiro_cases()) {
    const auto r = shapiro_wilk(c.x);
    EXPECT_NEAR(r.statistic, c.w, 1e-3) << c.name;
    EXPECT_NEAR(r.p_value, c.p, 1e-3) << c.name;
    EXPECT_EQ(r.p_value < 0.05, c.p < 0.05) << c.name;
    EXPECT_EQ(r.n1, c.x.size());
  }
}

TEST(ShapiroWilk, ExponentialRejected) {
  EXPECT_LT(shapiro_wilk(shapiro_cases()[1].x).p_value, 0.01);
}

TEST(ShapiroWilk, Errors) {
  const std::vector<double> two = {1, 2};
  const std::vector<double> flat = {3, 3, 3, 3};
  EXPECT_THROW(shapiro_wilk(two), InputError);
  EXPECT_THROW(shapiro_wilk(flat), InputError);
  EXPECT_THROW(shapiro_wilk(std::vector<double>(5001, 1.0)), InputError);
}

TEST(ShapiroWilk, ScaleAndShiftInvariant) {
  const auto& x = shapiro_cases()[2].x;
  std::vector<double> y;
  for (double v : x) y.push_back(3.5 * v - 12.0);
  EXPECT_NEAR(shapiro_wilk(x).statistic, shapiro_wilk(y).statistic, 1e-12);
}

TEST(Wilcoxon, AllPositiveFive) {
  const std::vector<double> d = {0.4, 1.1, 2.0, 0.7, 3.3};
  const auto r = wilcoxon_signed_rank(d);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_DOUBLE_EQ(r.p_value, 0.0625);
  EXPECT_EQ(r.method, PValueMethod::exact);
}

TEST(Wilcoxon, AntisymmetricPair) {
  const std::vector<double> d = {-2.5, 2.5};
  // Tied magnitudes route to the approximation; the statistic sits at the mean.
  EXPECT_DOUBLE_EQ(wilcoxon_signed_rank(d).p_value, 1.0);
  const std::vector<double> e = {-1.0, 2.0, 3.0, -4.0};
  // W+ = W- = 5
  EXPECT_DOUBLE_EQ(wilcoxon_signed_rank(e).p_value, 1.0);
}

TEST(Wilcoxon, ExactEqualsSignEnumeration) {
  std::mt19937_64 rng(73);
  for (std::size_t n = 1; n <= 12; ++n) {
    for (int rep = 0; rep < 6; ++rep) {
      const auto d = distinct_values(n, rng, true);
      const auto r = wilcoxon_signed_rank(d);
      ASSERT_EQ(r.method, PValueMethod::exact);
      EXPECT_NEAR(r.p_value, oracle::enumerate_signed_rank_p(d), 1e-12) << "n=" << n;
    }
  }
}

TEST(Wilcoxon, ZerosDropped) {
  const std::vector<double> d = {0.0, 0.4, 1.1, 0.0, 2.0, 0.7, 3.3};
  const auto r = wilcoxon_signed_rank(d);
  EXPECT_EQ(r.n1, 5u);
  EXPECT_DOUBLE_EQ(r.p_value, 0.0625);
  const std::vector<double> zeros = {0.0, 0.0};
  EXPECT_THROW(wilcoxon_signed_rank(zeros), InputError);
  EXPECT_THROW(wilcoxon_signed_rank(std::vector<double>{}), InputError);
}

TEST(Wilcoxon, MonotoneTransformInvariance) {
  std::mt19937_64 rng(79);
  for (int rep = 0; rep < 20; ++rep) {
    const auto d = distinct_values(10, rng, true);
    std::vector<double> t;
    for (double v : d) t.push_back(std::copysign(std::pow(std::fabs(v), 3.0) + std::fabs(v), v));
    EXPECT_EQ(wilcoxon_signed_rank(d).p_value, wilcoxon_signed_rank(t).p_value);
  }
}

TEST(Wilcoxon, LargeSampleApproximation) {
  const auto r = wilcoxon_signed_rank(kPaired30);
  EXPECT_EQ(r.method, PValueMethod::approximate);
  EXPECT_EQ(r.statistic, 150.0);
  EXPECT_NEAR(r.p_value, 0.09167955558323944, 1e-9);
}

TEST(Wilcoxon, ApproximationNearExactOnSubsample) {
  const std::vector<double> sub(kPaired30.begin(), kPaired30.begin() + 15);
  const auto exact = wilcoxon_signed_rank(sub);
  const auto approx = wilcoxon_signed_rank(sub, PValueMethod::approximate);
  ASSERT_EQ(exact.method, PValueMethod::exact);
  EXPECT_EQ(exact.statistic, 47.0);
  EXPECT_NEAR(exact.p_value, oracle::enumerate_signed_rank_p(sub), 1e-12);
  EXPECT_NEAR(approx.p_value, 0.4777337208915725, 1e-9);
  EXPECT_NEAR(approx.p_value, exact.p_value, 0.005);
}

TEST(Wilcoxon, ApproximationWithinHundredthFromSeventeen) {
  // Differences +-1..+-n hit every W+ in [0, n(n+1)/2]; both regimes are forced.
  for (std::size_t n = 17; n <= kWilcoxonExactMaxN; ++n) {
    const std::size_t total = n * (n + 1) / 2;
    for (std::size_t w = 0; w <= total; ++w) {
      std::vector<double> d(n);
      std::size_t left = w;
      for (std::size_t r = n; r >= 1; --r) {
        const bool positive = r <= left;
        if (positive) left -= r;
        d[r - 1] = positive ? static_cast<double>(r) : -static_cast<double>(r);
      }
      const double exact = wilcoxon_signed_rank(d, PValueMethod::exact).p_value;
      const double approx = wilcoxon_signed_rank(d, PValueMethod::approximate).p_value;
      EXPECT_LE(std::fabs(exact - approx), 0.01) << "n=" << n << " W+=" << w;
    }
  }
}

TEST(Wilcoxon, TiedMagnitudes) {
  const std::vector<double> d = {0.5, -0.5, 1.0, 1.0, 2.0, -1.5, 0.5, 3.0, 0.0, 2.5, -0.5, 1.5, 1.0, 2.0};
  const auto r = wilcoxon_signed_rank(d);
  EXPECT_EQ(r.method, PValueMethod::approximate);
  EXPECT_DOUBLE_EQ(r.statistic, 13.5);
  EXPECT_NEAR(r.p_value, 0.026950831549747395, 1e-9);
  EXPECT_THROW(wilcoxon_signed_rank(d, PValueMethod::exact), InputError);
}

TEST(Wilcoxon, PairedOverload) {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  const std::vector<double> y = {0.6, 0.9, 1.0, 0.7, 1.8};
  EXPECT_DOUBLE_EQ(wilcoxon_signed_rank(x, y).p_value, 0.0625);
  const std::vector<double> shorter = {1, 2};
  EXPECT_THROW(wilcoxon_signed_rank(x, shorter), InputError);
}

TEST(MannWhitney, CompleteSeparation) {
  const std::vector<double> a = {1, 2}, b = {3, 4};
  const auto r = mann_whitney_u(a, b);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_DOUBLE_EQ(r.p_value, 1.0 / 3.0);
  EXPECT_EQ(r.method, PValueMethod::exact);
  EXPECT_EQ(r.n1, 2u);
  EXPECT_EQ(r.n2, 2u);
}

TEST(MannWhitney, IdenticalMultisets) {
  const std::vector<double> a = {1, 5, 2, 8}, b = {8, 2, 5, 1};
  EXPECT_DOUBLE_EQ(mann_whitney_u(a, b).p_value, 1.0);
}

TEST(MannWhitney, ExactEqualsAssignmentEnumeration) {
  std::mt19937_64 rng(83);
  for (std::size_t n = 2; n <= 12; ++n) {
    for (std::size_t n1 = 1; n1 < n; ++n1) {
      const auto v = distinct_values(n, rng, false);
      const std::vector<double> a(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n1));
      const std::vector<double> b(v.begin() + static_cast<std::ptrdiff_t>(n1), v.end());
      const auto r = mann_whitney_u(a, b);
      ASSERT_EQ(r.method, PValueMethod::exact);
      EXPECT_NEAR(r.p_value, oracle::enumerate_rank_sum_p(a, b), 1e-12) << n1 << "/" << n;
    }
  }
}

TEST(MannWhitney, USumsToProduct) {
  std::mt19937_64 rng(89);
  std::uniform_int_distribution<int> sz(1, 30), val(0, 9);
  const std::vector<double> dummy;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> a(static_cast<std::size_t>(sz(rng))), b(static_cast<std::size_t>(sz(rng)));
    for (auto& x : a) x = val(rng);
    for (auto& x : b) x = val(rng);
    const auto r = midranks([&] {
      auto j = a;
      j.insert(j.end(), b.begin(), b.end());
      return j;
    }());
    double r1 = 0;
    for (std::size_t i = 0; i < a.size(); ++i) r1 += r[i];
    const double u1 = r1 - a.size() * (a.size() + 1) / 2.0;
    const double u2 = static_cast<double>(a.size() * b.size()) - u1;
    EXPECT_DOUBLE_EQ(u1 + u2, static_cast<double>(a.size() * b.size()));
    EXPECT_DOUBLE_EQ(mann_whitney_u(a, b).statistic, std::min(u1, u2));
    EXPECT_DOUBLE_EQ(mann_whitney_u(b, a).statistic, std::min(u1, u2));
  }
}

TEST(MannWhitney, ShiftedGaussianGroups) {
  const auto r = mann_whitney_u(kGroupA, kGroupB);
  EXPECT_EQ(r.method, PValueMethod::approximate);
  EXPECT_EQ(r.statistic, 181.0);
  EXPECT_NEAR(r.p_value, 0.011029166691101183, 0.005);
}

TEST(MannWhitney, ApproximationWithinHundredthAtTwenty) {
  std::mt19937_64 rng(89);
  for (const auto& [n1, n2] : {std::pair<std::size_t, std::size_t>{10, 10}, {9, 11}}) {
    for (int rep = 0; rep < 300; ++rep) {
      auto pool = distinct_values(n1 + n2, rng, false);
      const std::vector<double> a(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n1));
      const std::vector<double> b(pool.begin() + static_cast<std::ptrdiff_t>(n1), pool.end());
      const double exact = mann_whitney_u(a, b, PValueMethod::exact).p_value;
      const double approx = mann_whitney_u(a, b, PValueMethod::approximate).p_value;
      EXPECT_LE(std::fabs(exact - approx), 0.01) << n1 << "+" << n2 << " rep " << rep;
    }
  }
}

TEST(MannWhitney, Ties) {
  const std::vector<double> a = {1, 2, 2, 3, 4, 5, 5, 5, 6, 7, 8, 9};
  const std::vector<double> b = {3, 4, 4, 5, 6, 7, 7, 8, 9, 9, 10, 11, 12};
  const auto r = mann_whitney_u(a, b);
  EXPECT_DOUBLE_EQ(r.statistic, 40.0);
  EXPECT_NEAR(r.p_value, 0.040363758653918745, 1e-9);
  EXPECT_THROW(mann_whitney_u(a, b, PValueMethod::exact), InputError);
  EXPECT_THROW(mann_whitney_u(a, {}), InputError);
}

TEST(RankTests, PValuesInUnitInterval) {
  std::mt19937_64 rng(97);
  std::normal_distribution<double> n(0, 1);
  std::uniform_int_distribution<int> sz(1, 40);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> a(static_cast<std::size_t>(sz(rng))), b(static_cast<std::size_t>(sz(rng)));
    for (auto& x : a) x = std::round(n(rng) * 10) / 10;
    for (auto& x : b) x = std::round(n(rng) * 10) / 10 + 0.3;
    const auto mw = mann_whitney_u(a, b);
    EXPECT_GE(mw.p_value, 0.0);
    EXPECT_LE(mw.p_value, 1.0);
    if (std::any_of(a.begin(), a.end(), [](double v) { return v != 0.0; })) {
      const auto w = wilcoxon_signed_rank(a);
      EXPECT_GE(w.p_value, 0.0);
      EXPECT_LE(w.p_value, 1.0);
    }
  }
}

TEST(Bonferroni, ScalesAndClamps) {
  const std::vector<double> p = {0.01, 0.5, 0.2};
  const auto adj = bonferroni(p, 3);
  EXPECT_DOUBLE_EQ(adj[0], 0.03);
  EXPECT_EQ(adj[1], 1.0);
  EXPECT_DOUBLE_EQ(adj[2], 0.6000000000000001);
  EXPECT_EQ(bonferroni(p, 5)[0], 0.05);
  const std::vector<double> one = {0.37};
  EXPECT_EQ(bonferroni(one, 1), one);
  EXPECT_EQ(bonferroni(bonferroni(one, 1), 1), one);
  EXPECT_THROW(bonferroni(p, 2), InputError);
  EXPECT_THROW(bonferroni(std::vector<double>{1.5}, 1), InputError);
  EXPECT_THROW(bonferroni(std::vector<double>{-0.1}, 1), InputError);
}

TEST(Bonferroni, MonotoneAndElementwise) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> p(12);
  for (auto& x : p) x = u(rng);
  const auto adj = bonferroni(p, 20);
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(adj[i], std::min(1.0, 20 * p[i]));
    EXPECT_GE(adj[i], p[i]);
    for (std::size_t j = 0; j < p.size(); ++j)
      if (p[i] <= p[j]) EXPECT_LE(adj[i], adj[j]);
  }
}

TEST(Bonferroni, AppliesToResults) {
  std::vector<StatTestResult> rs(2);
  rs[0].p_value = 0.01;
  rs[1].p_value = 0.4;
  apply_bonferroni(rs, 4);
  EXPECT_DOUBLE_EQ(rs[0].p_adjusted, 0.04);
  EXPECT_EQ(rs[1].p_adjusted, 1.0);
  EXPECT_EQ(rs[0].p_value, 0.01);
}

TEST(Stars, Thresholds) {
  EXPECT_EQ(significance_stars(0.04), "*");
  EXPECT_EQ(significance_stars(0.0005), "***");
  EXPECT_EQ(significance_stars(0.05), "n.s.");
  EXPECT_EQ(significance_stars(0.01), "*");
  EXPECT_EQ(significance_stars(0.0099), "**");
  EXPECT_EQ(significance_stars(0.001), "**");
  EXPECT_EQ(significance_stars(1.0), "n.s.");
}

TEST(Midranks, TiesShareMean) {
  const std::vector<double> v = {3, 1, 3, 2, 3};
  EXPECT_EQ(midranks(v), (std::vector<double>{4, 1, 4, 2, 4}));
}

TEST(Normal, QuantileAndTail) {
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-14);
  EXPECT_EQ(normal_quantile(0.5), 0.0);
  EXPECT_NEAR(normal_quantile(1e-10), -6.361340902404056, 1e-12);
  for (double p : {1e-6, 0.01, 0.3, 0.5, 0.8, 0.999}) EXPECT_NEAR(normal_sf(normal_quantile(p)), 1 - p, 1e-13);
  EXPECT_NEAR(normal_sf(1.0), 0.15865525393145707, 1e-15);
}

TEST(StatJson, Fields) {
  const std::vector<double> a = {1, 2}, b = {3, 4};
  const nlohmann::json j = mann_whitney_u(a, b);
  EXPECT_EQ(j.at("test"), "mann_whitney_u");
  EXPECT_EQ(j.at("statistic"), 0.0);
  EXPECT_EQ(j.at("method"), "exact");
  EXPECT_EQ(j.at("n1"), 2);
  EXPECT_EQ(j.at("n2"), 2);
  EXPECT_TRUE(j.contains("p"));
  EXPECT_TRUE(j.contains("p_adj"));
}
