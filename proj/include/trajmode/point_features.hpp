#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "trajmode/ingest.hpp"

namespace trajmode {

/// Per-point kinematic series, in canonical feature order.
enum class PointFeature {
  duration,           // s
  speed,              // m/s
  acceleration,       // m/s^2
  jerk,               // m/s^3
  bearing,            // degrees
  bearing_rate,       // deg/s
  bearing_rate_rate,  // deg/s^2
};

inline constexpr std::size_t kPointFeatureCount = 7;
inline constexpr std::array<PointFeature, kPointFeatureCount> kPointFeatures = {
    PointFeature::duration,     PointFeature::speed,        PointFeature::acceleration,
    PointFeature::jerk,         PointFeature::bearing,      PointFeature::bearing_rate,
    PointFeature::bearing_rate_rate,
};

[[nodiscard]] std::string_view to_string(PointFeature f) noexcept;

struct PointFeatureSeries {
  PointFeature feature;
  std::vector<double> values;
};

/// How bearing differences are taken before dividing by the time step.
enum class BearingDiff {
  raw,      ///< B[i+1] - B[i] as is; 350 -> 10 gives -340.
  wrapped,  ///< difference mapped into (-180, 180]; 350 -> 10 gives +20.
};

// Every series has one value per point. A pairwise quantity over points
// (i, i+1) divides by duration[i] = t[i+1] - t[i]. Ends that have no
// computable value copy their nearest computed neighbour.
//
// All functions throw DomainError for fewer than 2 points or non-increasing
// timestamps.

[[nodiscard]] PointFeatureSeries duration_series(std::span<const TrajectoryPoint> points);
[[nodiscard]] PointFeatureSeries speed_series(std::span<const TrajectoryPoint> points);
[[nodiscard]] PointFeatureSeries acceleration_series(std::span<const TrajectoryPoint> points);
[[nodiscard]] PointFeatureSeries jerk_series(std::span<const TrajectoryPoint> points);
[[nodiscard]] PointFeatureSeries bearing_series(std::span<const TrajectoryPoint> points);
[[nodiscard]] PointFeatureSeries bearing_rate_series(std::span<const TrajectoryPoint> points,
                                                     BearingDiff diff = BearingDiff::raw);
[[nodiscard]] PointFeatureSeries bearing_rate_rate_series(std::span<const TrajectoryPoint> points,
                                                          BearingDiff diff = BearingDiff::raw);

// Building blocks exposed for reuse and testing.

/// out[i+1] = (values[i+1] - values[i]) / durations[i]; out[0] = out[1].
[[nodiscard]] std::vector<double> forward_rate(std::span<const double> values, std::span<const double> durations);
/// Bearing variant of forward_rate.
[[nodiscard]] std::vector<double> bearing_rate(std::span<const double> bearings, std::span<const double> durations,
                                               BearingDiff diff);

/// All seven series in kPointFeatures order, sharing intermediate results.
[[nodiscard]] std::array<PointFeatureSeries, kPointFeatureCount> compute_point_features(
    std::span<const TrajectoryPoint> points, BearingDiff diff = BearingDiff::raw);

}  // namespace trajmode
