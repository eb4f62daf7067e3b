#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles/oracles.hpp"
#include "trajmode/errors.hpp"
#include "trajmode/random.hpp"
#include "trajmode/stats.hpp"

using namespace trajmode;

namespace {

std::vector<double> draw(Rng& rng, std::size_t n, double shift = 0.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal() + shift;
  return v;
}

std::vector<double> permuted(Rng& rng, std::vector<double> v) {
  rng.shuffle(std::span<double>(v));
  return v;
}

}  // namespace

TEST(Ranks, Examples) {
  EXPECT_EQ(rank_with_ties(std::vector<double>{10, 20, 30}), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(rank_with_ties(std::vector<double>{5, 5}), (std::vector<double>{1.5, 1.5}));
  EXPECT_EQ(rank_with_ties(std::vector<double>{3, 1, 3, 2}), (std::vector<double>{3.5, 1, 3.5, 2}));
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> v(30);
    for (auto& x : v) x = static_cast<double>(rng.uniform_index(8));
    EXPECT_EQ(rank_with_ties(v), oracle::ranks(v));
  }
}

TEST(Distributions, NormalCdfMatchesSeriesOracle) {
  for (int i = 0; i < 1000; ++i) {
    const double z = -8.0 + 16.0 * i / 999.0;
    EXPECT_NEAR(normal_cdf(z), static_cast<double>(oracle::normal_cdf(z)), 1e-10) << z;
    EXPECT_NEAR(normal_sf(z), static_cast<double>(1.0L - oracle::normal_cdf(z)), 1e-10) << z;
  }
}

TEST(Distributions, ChiSquareCdfMatchesSeriesOracle) {
  for (double dof : {1.0, 2.0, 3.0, 4.0, 7.0, 10.0}) {
    for (int i = 0; i < 1000; ++i) {
      const double x = 40.0 * i / 999.0;
      EXPECT_NEAR(chi_square_cdf(x, dof), static_cast<double>(oracle::chi_square_cdf(x, dof)), 1e-10)
          << x << " dof " << dof;
    }
  }
  EXPECT_NEAR(chi_square_sf(3.841458820694124, 1), 0.05, 1e-12);
}

TEST(Distributions, KolmogorovSurvival) {
  EXPECT_NEAR(kolmogorov_sf(1.3580986393225505), 0.05, 1e-9);
  EXPECT_NEAR(kolmogorov_sf(1.6276236115189502), 0.01, 1e-9);
  EXPECT_EQ(kolmogorov_sf(0.0), 1.0);
  double prev = 1.0;
  for (int i = 1; i <= 300; ++i) {
    const double q = kolmogorov_sf(i / 100.0);
    EXPECT_LE(q, prev + 1e-15);
    EXPECT_GE(q, 0.0);
    prev = q;
  }
}

TEST(MannWhitney, Examples) {
  const auto r = mann_whitney_u(std::vector<double>{1, 2}, std::vector<double>{3, 4}, Alternative::less);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_TRUE(r.exact);
  EXPECT_NEAR(r.p_value, 1.0 / 6.0, 1e-15);

  Rng rng(3);
  const auto x = draw(rng, 30);
  const auto same = mann_whitney_u(x, x);
  EXPECT_FALSE(same.exact);
  EXPECT_GE(same.p_value, 0.99);

  EXPECT_THROW((void)mann_whitney_u(std::vector<double>{}, x), DomainError);
}

TEST(MannWhitney, ExactMatchesEnumerationOracle) {
  Rng rng(4);
  for (int t = 0; t < 40; ++t) {
    const std::size_t nx = 1 + rng.uniform_index(6);
    const std::size_t ny = 1 + rng.uniform_index(12 - nx);
    const auto x = draw(rng, nx);
    const auto y = draw(rng, ny, 0.5);
    const auto r = mann_whitney_u(x, y, Alternative::less, PValueMethod::exact);
    EXPECT_NEAR(r.p_value, oracle::mann_whitney_exact_cdf(nx, ny, r.statistic), 1e-12);
    const auto g = mann_whitney_u(x, y, Alternative::greater, PValueMethod::exact);
    EXPECT_NEAR(g.p_value, 1.0 - oracle::mann_whitney_exact_cdf(nx, ny, r.statistic - 1.0), 1e-12);
  }
}

TEST(MannWhitney, InvariantUnderMonotoneTransformAndOrder) {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto x = draw(rng, 15);
    const auto y = draw(rng, 18, 0.3);
    std::vector<double> ex, ey;
    for (double v : x) ex.push_back(std::exp(v) * 3.0 + 1.0);
    for (double v : y) ey.push_back(std::exp(v) * 3.0 + 1.0);
    const auto a = mann_whitney_u(x, y);
    const auto b = mann_whitney_u(ex, ey);
    const auto c = mann_whitney_u(permuted(rng, x), permuted(rng, y));
    EXPECT_EQ(a.statistic, b.statistic);
    EXPECT_EQ(a.p_value, b.p_value);
    EXPECT_EQ(a.statistic, c.statistic);
    EXPECT_NEAR(a.p_value, c.p_value, 1e-15);
  }
}

TEST(MannWhitney, ExactAndAsymptoticAgreeAtBoundary) {
  Rng rng(6);
  for (int t = 0; t < 50; ++t) {
    const auto x = draw(rng, 6);
    const auto y = draw(rng, 6, 0.4);
    const double exact = mann_whitney_u(x, y, Alternative::two_sided, PValueMethod::exact).p_value;
    const double approx = mann_whitney_u(x, y, Alternative::two_sided, PValueMethod::asymptotic).p_value;
    EXPECT_NEAR(exact, approx, 0.03);
  }
}

TEST(SignedRank, Examples) {
  const auto r = wilcoxon_signed_rank(std::vector<double>{1, 2, 3, 4, 5});
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_TRUE(r.exact);
  EXPECT_NEAR(r.p_value, 0.0625, 1e-15);

  EXPECT_NEAR(wilcoxon_signed_rank(std::vector<double>{-1, 1}).p_value, 1.0, 1e-15);

  const auto z = wilcoxon_signed_rank(std::vector<double>{0, 0, 0});
  EXPECT_TRUE(z.degenerate);
  EXPECT_EQ(z.p_value, 1.0);

  const auto one_sample = wilcoxon_signed_rank(std::vector<double>{11, 12, 13, 14, 15}, 10.0);
  EXPECT_NEAR(one_sample.p_value, 0.0625, 1e-15);
}

TEST(SignedRank, ExactMatchesEnumerationOracle) {
  Rng rng(7);
  for (int t = 0; t < 30; ++t) {
    const auto d = draw(rng, 1 + rng.uniform_index(12), 0.3);
    const auto r = wilcoxon_signed_rank(d, Alternative::two_sided, PValueMethod::exact);
    EXPECT_NEAR(r.p_value, std::min(1.0, oracle::wilcoxon_exact_two_sided(d)), 1e-12);
  }
}

TEST(SignedRank, ExactAndAsymptoticAgreeAtBoundary) {
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    const auto d = draw(rng, 12, 0.3);
    const double exact = wilcoxon_signed_rank(d, Alternative::two_sided, PValueMethod::exact).p_value;
    const double approx = wilcoxon_signed_rank(d, Alternative::two_sided, PValueMethod::asymptotic).p_value;
    EXPECT_NEAR(exact, approx, 0.03);
  }
}

TEST(RankSum, Examples) {
  Rng rng(9);
  const auto x = draw(rng, 20);
  const auto same = wilcoxon_rank_sum(x, x);
  EXPECT_NEAR(same.statistic, 0.0, 1e-12);
  EXPECT_GE(same.p_value, 0.99);

  std::vector<double> lo(10), hi(10);
  std::iota(lo.begin(), lo.end(), 0.0);
  std::iota(hi.begin(), hi.end(), 100.0);
  const auto sep = wilcoxon_rank_sum(lo, hi);
  EXPECT_LT(sep.statistic, -3.0);
  EXPECT_LT(sep.p_value, 0.01);

  for (int t = 0; t < 20; ++t) {
    const auto a = draw(rng, 25);
    const auto b = draw(rng, 30, 0.4);
    const double mw = mann_whitney_u(a, b, Alternative::two_sided, PValueMethod::asymptotic).p_value;
    EXPECT_NEAR(wilcoxon_rank_sum(a, b).p_value, mw, 1e-9);
  }
}

TEST(Kruskal, Examples) {
  const std::vector<std::vector<double>> g = {{1, 2, 3}, {4, 5, 6}};
  EXPECT_NEAR(kruskal_wallis(g).statistic, 3.857, 1e-3);
  EXPECT_NEAR(kruskal_wallis(g).statistic, oracle::kruskal_h(g), 1e-12);

  const std::vector<std::vector<double>> same = {{1, 2, 3, 4}, {1, 2, 3, 4}};
  EXPECT_NEAR(kruskal_wallis(same).statistic, 0.0, 1e-12);

  const std::vector<std::vector<double>> flat = {{2, 2}, {2, 2, 2}};
  const auto f = kruskal_wallis(flat);
  EXPECT_EQ(f.statistic, 0.0);
  EXPECT_EQ(f.p_value, 1.0);

  const std::vector<std::vector<double>> one = {{1, 2, 3}};
  EXPECT_THROW((void)kruskal_wallis(one), DomainError);
}

TEST(Kruskal, MatchesOracleWithTiesAndIsMonotoneInvariant) {
  Rng rng(10);
  for (int t = 0; t < 30; ++t) {
    std::vector<std::vector<double>> groups(2 + rng.uniform_index(3));
    std::vector<std::vector<double>> cubed;
    for (auto& g : groups) {
      g.resize(2 + rng.uniform_index(8));
      for (auto& x : g) x = static_cast<double>(rng.uniform_index(6));
      std::vector<double> c;
      for (double x : g) c.push_back(x * x * x + 2.0);
      cubed.push_back(c);
    }
    const auto r = kruskal_wallis(groups);
    EXPECT_NEAR(r.statistic, oracle::kruskal_h(groups), 1e-9);
    EXPECT_NEAR(r.statistic, kruskal_wallis(cubed).statistic, 1e-12);
    EXPECT_NEAR(r.p_value, 1.0 - static_cast<double>(oracle::chi_square_cdf(r.statistic, groups.size() - 1.0)),
                1e-9);
  }
}

TEST(Ks, Examples) {
  const auto cdf = [](double x) { return normal_cdf(x); };
  EXPECT_DOUBLE_EQ(ks_one_sample(std::vector<double>{0.0}, cdf).statistic, 0.5);

  Rng rng(11);
  int accepted = 0;
  for (int t = 0; t < 100; ++t) {
    if (ks_one_sample(draw(rng, 500), cdf).p_value > 0.01) ++accepted;
  }
  EXPECT_GE(accepted, 95);

  EXPECT_LT(ks_one_sample(draw(rng, 200, 8.0), cdf).p_value, 1e-6);
}

TEST(Ks, StatisticMatchesBruteForce) {
  Rng rng(12);
  const auto cdf = [](double x) { return normal_cdf(x); };
  for (int t = 0; t < 30; ++t) {
    std::vector<double> v = draw(rng, 5 + rng.uniform_index(60), 0.2);
    for (auto& x : v) x = std::round(x * 4.0) / 4.0;  // ties included
    EXPECT_NEAR(ks_one_sample(v, cdf).statistic, oracle::ks_d(v, cdf), 1e-15);
  }
}

TEST(PValues, AlwaysInUnitInterval) {
  Rng rng(13);
  for (int t = 0; t < 100; ++t) {
    const auto x = draw(rng, 1 + rng.uniform_index(20));
    const auto y = draw(rng, 1 + rng.uniform_index(20), rng.normal());
    for (auto alt : {Alternative::two_sided, Alternative::less, Alternative::greater}) {
      for (const auto& r : {mann_whitney_u(x, y, alt), wilcoxon_signed_rank(x, alt), wilcoxon_rank_sum(x, y, alt)}) {
        EXPECT_GE(r.p_value, 0.0);
        EXPECT_LE(r.p_value, 1.0);
      }
    }
  }
}

TEST(Spearman, PerfectAndDegenerate) {
  EXPECT_NEAR(*spearman_correlation(std::vector<double>{1, 2, 3}, std::vector<double>{10, 40, 90}), 1.0, 1e-15);
  EXPECT_NEAR(*spearman_correlation(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}), -1.0, 1e-15);
  EXPECT_FALSE(spearman_correlation(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}).has_value());
  EXPECT_THROW((void)parse_alternative("sideways"), ConfigError);
}
