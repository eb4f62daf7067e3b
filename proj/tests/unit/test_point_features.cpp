#include <gtest/gtest.h>

#include <cmath>

#include "oracles/tracks.hpp"
#include "trajmode/errors.hpp"
#include "trajmode/point_features.hpp"

using namespace trajmode;
using oracle::Dir;

namespace {

std::vector<TrajectoryPoint> at_times(std::vector<Timestamp> times) {
  std::vector<TrajectoryPoint> p;
  for (auto t : times) p.push_back({GeoCoordinate{116.3, 39.9}, t});
  return p;
}

void expect_all(const std::vector<double>& v, double want, double tol) {
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(v[i], want, tol) << "index " << i;
}

void expect_series(const std::vector<double>& got, const std::vector<double>& want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "index " << i;
}

}  // namespace

TEST(DurationSeries, Examples) {
  EXPECT_EQ(duration_series(at_times({0, 2, 5})).values, (std::vector<double>{2, 3, 3}));
  EXPECT_EQ(duration_series(at_times({0, 1, 4, 5})).values, (std::vector<double>{1, 3, 1, 1}));
  expect_all(duration_series(at_times({10, 11, 12, 13, 14})).values, 1.0, 0.0);
}

TEST(DurationSeries, RejectsDegenerateSegments) {
  EXPECT_THROW((void)duration_series(at_times({5})), DomainError);
  EXPECT_THROW((void)speed_series(at_times({1, 1, 2})), DomainError);
}

TEST(SpeedSeries, Examples) {
  const auto uniform = oracle::build_track(oracle::constant_moves(Dir::east, 10.0, 2, 12));
  expect_all(speed_series(uniform.points).values, 5.0, 1e-9);

  expect_all(speed_series(at_times({0, 1, 2, 3, 4, 5, 6, 7, 8, 9})).values, 0.0, 0.0);

  std::vector<oracle::Move> alt;
  for (int i = 0; i < 11; ++i) alt.push_back({Dir::east, i % 2 == 0 ? 5.0 : 10.0, 1});
  const auto s = speed_series(oracle::build_track(alt).points).values;
  ASSERT_EQ(s.size(), 12u);
  EXPECT_NEAR(s[0], s[1], 0.0);
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_NEAR(s[i], i % 2 == 1 ? 5.0 : 10.0, 1e-9);
}

TEST(ForwardRate, AccelerationAndJerkExamples) {
  const std::vector<double> one(4, 1.0);
  expect_series(forward_rate(std::vector<double>{0, 1, 2, 3}, one), {1, 1, 1, 1}, 0.0);
  expect_series(forward_rate(std::vector<double>{5, 5, 7}, std::vector<double>{2, 2, 2}), {0, 0, 1}, 0.0);
  expect_series(forward_rate(std::vector<double>{0, 2, 4}, std::vector<double>{1, 1, 1}), {2, 2, 2}, 0.0);
  expect_series(forward_rate(std::vector<double>{0, 4, 8}, std::vector<double>{2, 2, 2}), {2, 2, 2}, 0.0);
}

TEST(BearingRate, RawAndWrapped) {
  const std::vector<double> dt{2, 2};
  expect_series(bearing_rate(std::vector<double>{90, 100}, dt, BearingDiff::raw), {5, 5}, 0.0);
  const std::vector<double> one{1, 1};
  expect_series(bearing_rate(std::vector<double>{350, 10}, one, BearingDiff::raw), {-340, -340}, 0.0);
  expect_series(bearing_rate(std::vector<double>{350, 10}, one, BearingDiff::wrapped), {20, 20}, 0.0);
  expect_series(bearing_rate(std::vector<double>{10, 350}, one, BearingDiff::wrapped), {-20, -20}, 0.0);
  expect_series(bearing_rate(std::vector<double>{0, 180}, one, BearingDiff::wrapped), {180, 180}, 0.0);
}

TEST(BearingSeries, Examples) {
  expect_all(bearing_series(oracle::build_track(oracle::constant_moves(Dir::east, 7, 1, 10)).points).values, 90.0,
             1e-9);
  expect_all(bearing_series(oracle::build_track(oracle::constant_moves(Dir::north, 7, 1, 10)).points).values, 0.0,
             1e-9);

  // Square legs: north, east, south, west. The east leg runs on a parallel,
  // where a great-circle bearing deviates from 90 by ~ dlon * sin(lat).
  std::vector<TrajectoryPoint> sq;
  const double d = 1e-4;
  const std::vector<std::pair<double, double>> corners = {{0, 0}, {0, d}, {d, d}, {d, 0}, {0, 0}};
  for (std::size_t i = 0; i < corners.size(); ++i) {
    sq.push_back({GeoCoordinate{corners[i].first, corners[i].second}, static_cast<Timestamp>(i)});
  }
  const auto b = bearing_series(sq).values;
  expect_series(b, {0, 90, 180, 270, 270}, 1e-6);
}

TEST(PointFeatures, KnownTracksMatchHandForms) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto t = oracle::build_track(oracle::random_moves(seed, 40));
    const auto all = compute_point_features(t.points);
    const auto d = oracle::durations(t);
    const auto s = oracle::speeds(t);
    const auto a = oracle::rate(s, d);
    const auto j = oracle::rate(a, d);
    // Stationary hops have bearing 0 by convention, so the oracle value 0 applies.
    const auto b = oracle::bearings(t);
    const auto br = oracle::rate(b, d);
    const auto brr = oracle::rate(br, d);
    expect_series(all[0].values, d, 1e-9);
    expect_series(all[1].values, s, 1e-9);
    expect_series(all[2].values, a, 1e-9);
    expect_series(all[3].values, j, 1e-9);
    expect_series(all[4].values, b, 1e-9);
    expect_series(all[5].values, br, 1e-9);
    expect_series(all[6].values, brr, 1e-9);
  }
}

TEST(PointFeatures, ConstantVelocityHasZeroDerivatives) {
  for (Dir dir : {Dir::north, Dir::east, Dir::south, Dir::west}) {
    const auto t = oracle::build_track(oracle::constant_moves(dir, 12.5, 3, 30));
    const auto all = compute_point_features(t.points);
    for (std::size_t f : {2u, 3u, 5u, 6u}) expect_all(all[f].values, 0.0, 1e-9);
  }
}

TEST(PointFeatures, LengthsFiniteAndNonNegativeSpeed) {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const auto t = oracle::build_track(oracle::random_moves(seed, 25));
    for (BearingDiff diff : {BearingDiff::raw, BearingDiff::wrapped}) {
      for (const auto& s : compute_point_features(t.points, diff)) {
        ASSERT_EQ(s.values.size(), t.points.size());
        for (double v : s.values) EXPECT_TRUE(std::isfinite(v));
      }
    }
    for (double v : speed_series(t.points).values) EXPECT_GE(v, 0.0);
  }
}

TEST(PointFeatures, TimeScalingProperty) {
  for (std::uint64_t seed = 200; seed < 210; ++seed) {
    auto moves = oracle::random_moves(seed, 30);
    const auto base = compute_point_features(oracle::build_track(moves).points);
    const double c = 3.0;
    for (auto& m : moves) m.dt *= static_cast<std::int64_t>(c);
    const auto scaled = compute_point_features(oracle::build_track(moves).points);
    for (std::size_t i = 0; i < base[1].values.size(); ++i) {
      const double pw[] = {1.0, c, c * c, c * c * c};
      for (std::size_t f = 1; f <= 3; ++f) {
        const double want = base[f].values[i] / pw[f];
        EXPECT_NEAR(scaled[f].values[i], want, 1e-6 * std::max(1.0, std::fabs(want)));
      }
    }
  }
}

TEST(PointFeatures, NamesInCanonicalOrder) {
  const char* names[] = {"duration", "speed", "acceleration", "jerk", "bearing", "bearing_rate", "bearing_rate_rate"};
  for (std::size_t i = 0; i < kPointFeatureCount; ++i) EXPECT_EQ(to_string(kPointFeatures[i]), names[i]);
}
