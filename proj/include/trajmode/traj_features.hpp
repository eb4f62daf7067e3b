#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trajmode/errors.hpp"
#include "trajmode/ingest.hpp"
#include "trajmode/point_features.hpp"

namespace trajmode {

enum class Statistic { min, max, mean, median, std, p10, p25, p50, p75, p90 };

inline constexpr std::size_t kStatisticCount = 10;
inline constexpr std::size_t kTrajectoryFeatureCount = kPointFeatureCount * kStatisticCount;

[[nodiscard]] std::string_view to_string(Statistic s) noexcept;

/// The ten summary statistics of one series, indexed by Statistic.
struct Summary {
  std::array<double, kStatisticCount> values{};
  [[nodiscard]] double operator[](Statistic s) const noexcept { return values[static_cast<std::size_t>(s)]; }
};

/// Linear-interpolation percentile of an ascending range at q in [0, 1]:
/// rank position q*(n-1), v[k] + f*(v[k+1]-v[k]).
[[nodiscard]] double percentile_sorted(std::span<const double> sorted, double q);

/// Mean (arithmetic), population std, min, max, median, p10..p90.
/// Throws DomainError on empty input.
[[nodiscard]] Summary summarize(std::span<const double> series);

/// `<point_feature>_<stat>`, e.g. speed_p90.
[[nodiscard]] std::string feature_name(PointFeature f, Statistic s);
/// The 70 names in canonical order (point-feature major, statistic minor).
[[nodiscard]] const std::vector<std::string>& feature_names();

struct FeatureVector {
  std::string segment_ref;
  std::string user_id;
  std::string label;
  std::array<double, kTrajectoryFeatureCount> values{};
  /// Travelled distance of the segment; used for accuracy by distance.
  double length_m = 0.0;

  /// Throws DomainError for unknown names.
  [[nodiscard]] double value(std::string_view name) const;
};

[[nodiscard]] FeatureVector build_feature_vector(const Segment& segment, std::string segment_ref,
                                                 BearingDiff diff = BearingDiff::raw);

/// Raised when an interchange file lacks a required column.
class SchemaError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Row-major feature table with per-row label and user, the common currency
/// of noise filtering, selection, and evaluation.
struct FeatureMatrix {
  std::vector<std::string> columns;
  std::vector<double> data;
  std::vector<std::string> labels;
  std::vector<std::string> user_ids;
  /// Segment lengths in meters; empty when unknown.
  std::vector<double> distances_m;
  /// Fold index per row when the table was written after a split; empty otherwise.
  std::vector<int> folds;

  [[nodiscard]] std::size_t rows() const noexcept { return labels.size(); }
  [[nodiscard]] std::size_t cols() const noexcept { return columns.size(); }
  [[nodiscard]] double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }
  [[nodiscard]] double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  [[nodiscard]] std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data).subspan(r * cols(), cols());
  }
  [[nodiscard]] std::optional<std::size_t> column_index(std::string_view name) const;
  [[nodiscard]] std::vector<double> column(std::size_t c) const;

  [[nodiscard]] FeatureMatrix select_rows(std::span<const std::size_t> indices) const;
  /// Throws SchemaError naming the first missing column.
  [[nodiscard]] FeatureMatrix select_columns(std::span<const std::string> names) const;
};

[[nodiscard]] FeatureMatrix to_matrix(std::span<const FeatureVector> vectors);

/// Header: the 70 canonical names, then user_id,label. When present,
/// distance_m and fold follow. Extra columns are only written when populated.
void write_feature_matrix(std::ostream& out, const FeatureMatrix& m, std::span<const std::string> extra_header = {},
                          std::span<const std::vector<std::string>> extra_columns = {});

/// Reads a feature matrix. With require_canonical, every one of the 70
/// canonical names must be present (SchemaError otherwise); user_id and label
/// are always required. Unknown non-numeric columns are rejected.
[[nodiscard]] FeatureMatrix read_feature_matrix(std::istream& in, bool require_canonical = true);

/// Per-feature min-max ranges fitted on a training table.
struct MinMaxScaler {
  std::vector<std::string> columns;
  std::vector<double> lo;
  std::vector<double> hi;

  /// Throws DomainError on an empty table.
  [[nodiscard]] static MinMaxScaler fit(const FeatureMatrix& train);
  /// (x - lo) / (hi - lo); constant training columns map to 0. No clipping.
  [[nodiscard]] FeatureMatrix apply(const FeatureMatrix& m) const;
};

struct NormalizedPair {
  FeatureMatrix train;
  FeatureMatrix applied;
  MinMaxScaler scaler;
};

[[nodiscard]] NormalizedPair minmax_normalize(const FeatureMatrix& train, const FeatureMatrix& apply_to);

}  // namespace trajmode
