#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "oracles/oracles.hpp"
#include "oracles/tracks.hpp"
#include "trajmode/traj_features.hpp"

using namespace trajmode;
using oracle::Dir;

namespace {

Segment segment_of(const oracle::KnownTrack& t) {
  Segment s;
  s.user_id = "u";
  s.label = "walk";
  s.day = day_of(t.points.front().timestamp);
  s.points = t.points;
  return s;
}

FeatureMatrix column_matrix(const std::vector<double>& values) {
  FeatureMatrix m;
  m.columns = {"x"};
  m.data = values;
  for (std::size_t i = 0; i < values.size(); ++i) {
    m.labels.push_back("a");
    m.user_ids.push_back("u");
  }
  return m;
}

}  // namespace

TEST(Summarize, Examples) {
  const auto s = summarize(std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  EXPECT_DOUBLE_EQ(s[Statistic::mean], 5.5);
  EXPECT_DOUBLE_EQ(s[Statistic::median], 5.5);
  EXPECT_DOUBLE_EQ(s[Statistic::p25], 3.25);
  EXPECT_DOUBLE_EQ(s[Statistic::p90], 9.1);

  const auto c = summarize(std::vector<double>(9, 4.25));
  for (std::size_t i = 0; i < kStatisticCount; ++i) {
    EXPECT_EQ(c.values[i], static_cast<Statistic>(i) == Statistic::std ? 0.0 : 4.25);
  }

  const auto two = summarize(std::vector<double>{2, 4});
  EXPECT_DOUBLE_EQ(two[Statistic::mean], 3.0);
  EXPECT_DOUBLE_EQ(two[Statistic::std], 1.0);
  EXPECT_DOUBLE_EQ(two[Statistic::p50], 3.0);

  EXPECT_THROW((void)summarize(std::vector<double>{}), DomainError);
}

TEST(Summarize, MatchesOracleOnRandomSeries) {
  std::mt19937_64 gen(21);
  std::normal_distribution<double> value(10.0, 25.0);
  std::uniform_int_distribution<int> len(1, 300);
  const auto rel = [](double got, double want) { return std::fabs(got - want) / std::max(1.0, std::fabs(want)); };
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(len(gen)));
    for (auto& x : v) x = value(gen);
    const auto s = summarize(v);
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(s[Statistic::min], sorted.front());
    EXPECT_EQ(s[Statistic::max], sorted.back());
    const std::size_t mid = sorted.size() / 2;
    const double median = sorted.size() % 2 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2.0;
    EXPECT_EQ(s[Statistic::median], median);
    EXPECT_EQ(s[Statistic::p50], s[Statistic::median]);
    EXPECT_LE(rel(s[Statistic::mean], oracle::mean(v)), 1e-12);
    EXPECT_LE(rel(s[Statistic::std], oracle::population_std(v)), 1e-12);
    const std::pair<Statistic, double> qs[] = {
        {Statistic::p10, 0.1}, {Statistic::p25, 0.25}, {Statistic::p75, 0.75}, {Statistic::p90, 0.9}};
    for (auto [stat, q] : qs) EXPECT_LE(rel(s[stat], oracle::percentile(v, q)), 1e-12);
  }
}

TEST(FeatureNames, SeventyCanonicalNames) {
  const auto& names = feature_names();
  ASSERT_EQ(names.size(), 70u);
  EXPECT_EQ(names.front(), "duration_min");
  EXPECT_EQ(names[1 * 10 + 9], "speed_p90");
  EXPECT_EQ(feature_name(PointFeature::speed, Statistic::p90), "speed_p90");
  EXPECT_EQ(names.back(), "bearing_rate_rate_p90");
  std::set<std::string> unique(names.begin(), names.end());
  EXPECT_EQ(unique.size(), 70u);
}

TEST(BuildFeatureVector, UniformEastboundTrack) {
  const auto t = oracle::build_track(oracle::constant_moves(Dir::east, 5.0, 1, 20));
  const auto fv = build_feature_vector(segment_of(t), "ref");
  EXPECT_NEAR(fv.value("speed_mean"), 5.0, 1e-9);
  EXPECT_NEAR(fv.value("speed_min"), 5.0, 1e-9);
  EXPECT_NEAR(fv.value("speed_max"), 5.0, 1e-9);
  EXPECT_NEAR(fv.value("bearing_mean"), 90.0, 1e-9);
  EXPECT_NEAR(fv.length_m, 100.0, 1e-6);
  EXPECT_THROW((void)fv.value("speed_p99"), DomainError);
}

TEST(BuildFeatureVector, StationarySegment) {
  const auto t = oracle::build_track(oracle::constant_moves(Dir::stay, 0, 2, 15));
  const auto fv = build_feature_vector(segment_of(t), "ref");
  for (const char* pf : {"speed", "acceleration", "jerk"}) {
    for (std::size_t s = 0; s < kStatisticCount; ++s) {
      EXPECT_EQ(fv.value(std::string(pf) + "_" + std::string(to_string(static_cast<Statistic>(s)))), 0.0);
    }
  }
}

TEST(BuildFeatureVector, OrderChainHoldsOnRandomTracks) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto t = oracle::build_track(oracle::random_moves(seed, 30));
    for (BearingDiff diff : {BearingDiff::raw, BearingDiff::wrapped}) {
      const auto fv = build_feature_vector(segment_of(t), "ref", diff);
      for (double v : fv.values) ASSERT_TRUE(std::isfinite(v));
      for (std::size_t p = 0; p < kPointFeatureCount; ++p) {
        const auto at = [&](Statistic s) { return fv.values[p * kStatisticCount + static_cast<std::size_t>(s)]; };
        EXPECT_LE(at(Statistic::min), at(Statistic::p10));
        EXPECT_LE(at(Statistic::p10), at(Statistic::p25));
        EXPECT_LE(at(Statistic::p25), at(Statistic::p50));
        EXPECT_LE(at(Statistic::p50), at(Statistic::p75));
        EXPECT_LE(at(Statistic::p75), at(Statistic::p90));
        EXPECT_LE(at(Statistic::p90), at(Statistic::max));
        EXPECT_LE(at(Statistic::min), at(Statistic::mean));
        EXPECT_LE(at(Statistic::mean), at(Statistic::max));
        EXPECT_EQ(at(Statistic::p50), at(Statistic::median));
      }
    }
  }
}

TEST(MinMax, Examples) {
  const auto train = column_matrix({2, 4, 6});
  const auto pair = minmax_normalize(train, column_matrix({8}));
  EXPECT_EQ(pair.train.data, (std::vector<double>{0, 0.5, 1}));
  EXPECT_DOUBLE_EQ(pair.applied.data[0], 1.5);

  const auto flat = minmax_normalize(column_matrix({3, 3, 3}), column_matrix({7, -1}));
  EXPECT_EQ(flat.train.data, (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(flat.applied.data, (std::vector<double>{0, 0}));

  EXPECT_THROW((void)MinMaxScaler::fit(column_matrix({})), DomainError);
}

TEST(MinMax, IdempotentOnNormalizedTrain) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(40);
    for (auto& x : v) x = u(gen);
    const auto once = minmax_normalize(column_matrix(v), column_matrix(v)).train;
    const auto twice = minmax_normalize(once, once).train;
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(twice.data[i], once.data[i], 1e-12);
  }
}

TEST(FeatureMatrixIo, RoundTripAndSchemaErrors) {
  std::vector<FeatureVector> vs;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto fv = build_feature_vector(segment_of(oracle::build_track(oracle::random_moves(seed, 20))), "r");
    fv.user_id = "u" + std::to_string(seed % 2);
    vs.push_back(fv);
  }
  const auto m = to_matrix(vs);
  std::stringstream ss;
  write_feature_matrix(ss, m);
  const auto back = read_feature_matrix(ss);
  EXPECT_EQ(back.columns, m.columns);
  EXPECT_EQ(back.data, m.data);
  EXPECT_EQ(back.labels, m.labels);
  EXPECT_EQ(back.user_ids, m.user_ids);
  EXPECT_EQ(back.distances_m, m.distances_m);

  std::stringstream partial("speed_mean,user_id,label\n1.0,u,walk\n");
  EXPECT_THROW((void)read_feature_matrix(partial), SchemaError);
  std::stringstream loose("speed_mean,user_id,label\n1.0,u,walk\n");
  EXPECT_EQ(read_feature_matrix(loose, false).cols(), 1u);

  const std::vector<std::string> want = {"nope"};
  EXPECT_THROW((void)m.select_columns(want), SchemaError);
}
