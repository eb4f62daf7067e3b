#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trajmode/ingest.hpp"
#include "trajmode/traj_features.hpp"

namespace trajmode {

/// Gaussian-consistent scale factor turning a MAD into a standard deviation.
inline constexpr double kMadScale = 1.4826;

struct HampelParams {
  std::size_t window = 11;
  double n_sigmas = 3.0;
};

struct HampelResult {
  std::vector<double> values;
  /// Ascending indices whose value was replaced by a window median.
  std::vector<std::size_t> replaced;
};

/// Hampel identifier. For each index, over the centered window (truncated at
/// the series ends), x is replaced by the window median when
/// |x - median| > n_sigmas * kMadScale * MAD. A MAD of 0 makes any nonzero
/// deviation an outlier. Passes repeat until nothing changes, so the result
/// is a fixed point of the filter.
///
/// Throws ConfigError unless window is odd and >= 3 and n_sigmas > 0;
/// DomainError on non-finite input.
[[nodiscard]] HampelResult hampel_filter(std::span<const double> series, std::size_t window = 11,
                                         double n_sigmas = 3.0);

/// Savitzky-Golay smoothing: each value becomes the centre value of the
/// least-squares polynomial of degree polyorder fitted over the centred
/// window. Near the ends the window is truncated, and widened inward when it
/// would hold fewer than polyorder + 1 points.
///
/// Throws ConfigError unless window is odd, polyorder < window and
/// window <= series length.
[[nodiscard]] std::vector<double> savitzky_golay(std::span<const double> series, std::size_t window,
                                                 std::size_t polyorder);

struct SmoothingReport {
  Segment segment;
  std::size_t replaced_points = 0;
};

/// Hampel on latitude and longitude independently.
[[nodiscard]] SmoothingReport hampel_smooth(const Segment& segment, const HampelParams& params = {});
/// Savitzky-Golay on latitude and longitude independently. Segments shorter
/// than the window are returned unchanged.
[[nodiscard]] Segment savgol_smooth(const Segment& segment, std::size_t window, std::size_t polyorder);

struct SpeedBounds {
  double lower;
  double upper;
};

/// Per-label admissible range of speed_mean (m/s).
class GroundTruthBounds {
 public:
  /// Throws ConfigError unless lower < upper.
  void set(std::string label, SpeedBounds bounds);
  [[nodiscard]] std::optional<SpeedBounds> find(std::string_view label) const;
  [[nodiscard]] const std::map<std::string, SpeedBounds, std::less<>>& entries() const noexcept { return bounds_; }

  /// The published table: car, bus, bike, taxi, train, walk.
  [[nodiscard]] static GroundTruthBounds published();

 private:
  std::map<std::string, SpeedBounds, std::less<>> bounds_;
};

struct FilterOutcome {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> removed;
  /// One reason per entry of `removed`.
  std::vector<std::string> reasons;
  /// Kept rows whose label had no bounds (ground truth only).
  std::vector<std::size_t> uncovered;
};

/// Keeps a row iff lower <= speed_mean <= upper for its label. Rows whose
/// label has no bounds are kept and listed in `uncovered`. A label of
/// "walking" is looked up as "walk".
[[nodiscard]] FilterOutcome ground_truth_filter(const FeatureMatrix& m, const GroundTruthBounds& bounds,
                                                std::string_view speed_column = "speed_mean");

/// One-dimensional DBSCAN noise mask: true where a value is neither a core
/// point (>= min_pts values within eps, itself included) nor within eps of one.
[[nodiscard]] std::vector<bool> dbscan_noise_1d(std::span<const double> values, double eps, std::size_t min_pts);

struct DbscanParams {
  std::string feature = "speed_mean";
  double eps = 0.5;
  std::size_t min_pts = 5;
};

/// Removes rows that DBSCAN labels noise on one feature column.
/// Throws ConfigError for eps <= 0 or min_pts < 1, SchemaError for a missing column.
[[nodiscard]] FilterOutcome dbscan_outlier_filter(const FeatureMatrix& m, std::string_view feature, double eps,
                                                  std::size_t min_pts);

/// Removed rows in feature-matrix layout plus a trailing removal_reason column.
void write_removal_audit(std::ostream& out, const FeatureMatrix& m, const FilterOutcome& outcome);

}  // namespace trajmode
