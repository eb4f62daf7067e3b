#pragma once

// GeoLife ingestion: PLT and labels.txt parsing, timestamp cleaning, label
// joining, and segmentation into labeled per-day sub-trajectories.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trajmode/geo.hpp"

namespace trajmode {

enum class TransportMode {
  walk,
  bike,
  bus,
  car,
  taxi,
  subway,
  train,
  driving,
  airplane,
  boat,
  run,
  motorcycle,
};

[[nodiscard]] std::string_view to_string(TransportMode mode) noexcept;
[[nodiscard]] std::optional<TransportMode> parse_transport_mode(std::string_view text) noexcept;

/// Seconds since 1970-01-01T00:00:00 of a naive (zone-less) timestamp.
using Timestamp = std::int64_t;

inline constexpr std::int64_t kSecondsPerDay = 86'400;

/// Builds a Timestamp from calendar fields; nullopt if any field is out of range.
[[nodiscard]] std::optional<Timestamp> make_timestamp(int year, unsigned month, unsigned day,
                                                      unsigned hour, unsigned minute,
                                                      unsigned second) noexcept;

/// Day number (days since 1970-01-01) in the timestamp's own clock.
[[nodiscard]] std::int64_t day_of(Timestamp t) noexcept;
[[nodiscard]] std::string format_day(std::int64_t day);
[[nodiscard]] std::string format_timestamp(Timestamp t, char date_sep, char joiner);

struct TrajectoryPoint {
  GeoCoordinate coordinate;
  Timestamp timestamp;

  friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

struct PltParseResult {
  std::vector<TrajectoryPoint> points;
  std::size_t malformed_lines = 0;
  std::vector<std::string> diagnostics;
};

/// Parses a GeoLife .plt file: 6 header lines, then
/// `latitude,longitude,0,altitude_feet,days_serial,date,time` records.
/// Malformed records are skipped and counted. Throws DataError when the
/// header is truncated.
[[nodiscard]] PltParseResult parse_plt(std::string_view content);

/// Writes points in PLT layout. Altitude is written as -777 (GeoLife's
/// "invalid" marker) since points do not carry altitude.
[[nodiscard]] std::string serialize_plt(std::span<const TrajectoryPoint> points);

struct LabelInterval {
  Timestamp start;
  Timestamp end;
  /// Raw mode string from the file, kept even when unrecognized.
  std::string mode_tag;

  [[nodiscard]] std::optional<TransportMode> mode() const noexcept {
    return parse_transport_mode(mode_tag);
  }
};

struct LabelParseResult {
  std::vector<LabelInterval> intervals;
  std::size_t rejected_rows = 0;
  std::size_t unknown_modes = 0;
  std::vector<std::string> diagnostics;
};

/// Parses labels.txt: a header line, then `start<TAB>end<TAB>mode` rows with
/// `yyyy/mm/dd hh:mm:ss` instants. Rows with start >= end are rejected.
[[nodiscard]] LabelParseResult parse_labels(std::string_view content);
[[nodiscard]] std::string serialize_labels(std::span<const LabelInterval> intervals);

/// Drops every point whose timestamp is <= the last kept timestamp.
[[nodiscard]] std::vector<TrajectoryPoint> clean_timestamps(std::span<const TrajectoryPoint> points);

struct LabeledPoint {
  TrajectoryPoint point;
  std::string label;
};

/// Attaches to each point the first interval (file order) with
/// start <= t <= end. Unlabeled points are discarded. Points must be strictly
/// increasing in time.
[[nodiscard]] std::vector<LabeledPoint> join_labels(std::span<const TrajectoryPoint> points,
                                                    std::span<const LabelInterval> intervals);

inline constexpr std::size_t kMinSegmentPoints = 10;

struct Segment {
  std::string user_id;
  std::string label;
  std::int64_t day = 0;
  std::vector<TrajectoryPoint> points;

  /// Sum of haversine distances between consecutive points.
  [[nodiscard]] double length_m() const;
};

struct SegmentationResult {
  std::vector<Segment> segments;
  std::size_t discarded_runs = 0;
  std::size_t discarded_points = 0;
};

/// Splits a labeled stream into maximal runs sharing (day, label); runs with
/// fewer than kMinSegmentPoints points are discarded.
[[nodiscard]] SegmentationResult segment(std::span<const LabeledPoint> points,
                                         const std::string& user_id);

enum class LabelScheme { identity, dabiri5, endo7 };

/// Throws ConfigError for unknown names.
[[nodiscard]] LabelScheme parse_label_scheme(std::string_view name);
[[nodiscard]] std::string_view to_string(LabelScheme scheme) noexcept;

/// Label under the scheme, or nullopt when the scheme drops it.
[[nodiscard]] std::optional<std::string> map_label(std::string_view label, LabelScheme scheme);

[[nodiscard]] std::vector<Segment> merge_labels(std::vector<Segment> segments, LabelScheme scheme);

/// Newline-delimited JSON, one segment per line:
/// {"user_id":..,"label":..,"day":"yyyy-mm-dd","points":[[lon,lat,epoch],..]}
void write_segment_store(std::ostream& out, std::span<const Segment> segments);
/// Throws DataError on malformed records.
[[nodiscard]] std::vector<Segment> read_segment_store(std::istream& in);

struct DatasetIngest {
  std::vector<Segment> segments;
  std::size_t users = 0;
  std::size_t users_without_labels = 0;
  std::size_t plt_files = 0;
  std::size_t malformed_lines = 0;
  std::size_t rejected_label_rows = 0;
  std::size_t unknown_label_modes = 0;
  std::size_t dropped_timestamps = 0;
  std::size_t unlabeled_points = 0;
  std::size_t discarded_runs = 0;
};

/// Walks a GeoLife tree (`<root>/[Data/]<user>/{labels.txt,Trajectory/*.plt}`).
/// Users and files are visited in lexicographic order. Throws DataError if the
/// root does not exist.
[[nodiscard]] DatasetIngest ingest_dataset(const std::filesystem::path& root);

/// Ingests one user's files already loaded in memory (PLT contents in
/// chronological file order).
[[nodiscard]] DatasetIngest ingest_user(const std::string& user_id,
                                        std::span<const std::string> plt_contents,
                                        std::string_view labels_content);

}  // namespace trajmode
