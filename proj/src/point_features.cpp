#include "trajmode/point_features.hpp"

#include <string>

#include "trajmode/errors.hpp"

namespace trajmode {

namespace {

void check_points(std::span<const TrajectoryPoint> points) {
  if (points.size() < 2) {
    throw DomainError("point features need at least 2 points, got " + std::to_string(points.size()));
  }
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].timestamp <= points[i - 1].timestamp) {
      throw DomainError("point features need strictly increasing timestamps");
    }
  }
}

std::vector<double> durations_of(std::span<const TrajectoryPoint> points) {
  check_points(points);
  const std::size_t n = points.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    d[i] = static_cast<double>(points[i + 1].timestamp - points[i].timestamp);
  }
  d[n - 1] = d[n - 2];
  return d;
}

std::vector<double> speeds_of(std::span<const TrajectoryPoint> points, std::span<const double> durations) {
  const std::size_t n = points.size();
  std::vector<double> s(n);
  for (std::size_t i = 1; i < n; ++i) {
    s[i] = haversine_distance(points[i - 1].coordinate, points[i].coordinate) / durations[i - 1];
  }
  s[0] = s[1];
  return s;
}

std::vector<double> bearings_of(std::span<const TrajectoryPoint> points) {
  const std::size_t n = points.size();
  std::vector<double> b(n);
  for (std::size_t i = 0; i + 1 < n; ++i) b[i] = compass_bearing(points[i].coordinate, points[i + 1].coordinate);
  b[n - 1] = b[n - 2];
  return b;
}

double wrap_degrees(double delta) {
  while (delta > 180.0) delta -= 360.0;
  while (delta <= -180.0) delta += 360.0;
  return delta;
}

}  // namespace

std::string_view to_string(PointFeature f) noexcept {
  switch (f) {
    case PointFeature::duration: return "duration";
    case PointFeature::speed: return "speed";
    case PointFeature::acceleration: return "acceleration";
    case PointFeature::jerk: return "jerk";
    case PointFeature::bearing: return "bearing";
    case PointFeature::bearing_rate: return "bearing_rate";
    case PointFeature::bearing_rate_rate: return "bearing_rate_rate";
  }
  return "unknown";
}

std::vector<double> forward_rate(std::span<const double> values, std::span<const double> durations) {
  const std::size_t n = values.size();
  if (n < 2 || durations.size() != n) throw DomainError("forward_rate: need >= 2 values and matching durations");
  std::vector<double> out(n);
  for (std::size_t i = 0; i + 1 < n; ++i) out[i + 1] = (values[i + 1] - values[i]) / durations[i];
  out[0] = out[1];
  return out;
}

std::vector<double> bearing_rate(std::span<const double> bearings, std::span<const double> durations,
                                 BearingDiff diff) {
  if (diff == BearingDiff::raw) return forward_rate(bearings, durations);
  const std::size_t n = bearings.size();
  if (n < 2 || durations.size() != n) throw DomainError("bearing_rate: need >= 2 values and matching durations");
  std::vector<double> out(n);
  for (std::size_t i = 0; i + 1 < n; ++i) out[i + 1] = wrap_degrees(bearings[i + 1] - bearings[i]) / durations[i];
  out[0] = out[1];
  return out;
}

PointFeatureSeries duration_series(std::span<const TrajectoryPoint> points) {
  return {PointFeature::duration, durations_of(points)};
}

PointFeatureSeries speed_series(std::span<const TrajectoryPoint> points) {
  const auto d = durations_of(points);
  return {PointFeature::speed, speeds_of(points, d)};
}

PointFeatureSeries acceleration_series(std::span<const TrajectoryPoint> points) {
  const auto d = durations_of(points);
  return {PointFeature::acceleration, forward_rate(speeds_of(points, d), d)};
}

PointFeatureSeries jerk_series(std::span<const TrajectoryPoint> points) {
  const auto d = durations_of(points);
  return {PointFeature::jerk, forward_rate(forward_rate(speeds_of(points, d), d), d)};
}

PointFeatureSeries bearing_series(std::span<const TrajectoryPoint> points) {
  check_points(points);
  return {PointFeature::bearing, bearings_of(points)};
}

PointFeatureSeries bearing_rate_series(std::span<const TrajectoryPoint> points, BearingDiff diff) {
  const auto d = durations_of(points);
  return {PointFeature::bearing_rate, bearing_rate(bearings_of(points), d, diff)};
}

PointFeatureSeries bearing_rate_rate_series(std::span<const TrajectoryPoint> points, BearingDiff diff) {
  const auto d = durations_of(points);
  return {PointFeature::bearing_rate_rate, forward_rate(bearing_rate(bearings_of(points), d, diff), d)};
}

std::array<PointFeatureSeries, kPointFeatureCount> compute_point_features(std::span<const TrajectoryPoint> points,
                                                                         BearingDiff diff) {
  auto d = durations_of(points);
  auto speed = speeds_of(points, d);
  auto acc = forward_rate(speed, d);
  auto jerk = forward_rate(acc, d);
  auto bearing = bearings_of(points);
  auto brate = bearing_rate(bearing, d, diff);
  auto brrate = forward_rate(brate, d);
  return {{
      {PointFeature::duration, std::move(d)},
      {PointFeature::speed, std::move(speed)},
      {PointFeature::acceleration, std::move(acc)},
      {PointFeature::jerk, std::move(jerk)},
      {PointFeature::bearing, std::move(bearing)},
      {PointFeature::bearing_rate, std::move(brate)},
      {PointFeature::bearing_rate_rate, std::move(brrate)},
  }};
}

}  // namespace trajmode
