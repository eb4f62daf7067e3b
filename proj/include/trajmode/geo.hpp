#pragma once

namespace trajmode {

/// IUGG mean Earth radius in meters.
inline constexpr double kEarthRadiusM = 6'371'008.8;

/// A WGS84 longitude/latitude pair in degrees. Construction validates ranges.
class GeoCoordinate {
 public:
  /// Throws DomainError unless lon is in [-180, 180] and lat in [-90, 90].
  GeoCoordinate(double longitude, double latitude);

  [[nodiscard]] double longitude() const noexcept { return lon_; }
  [[nodiscard]] double latitude() const noexcept { return lat_; }

  [[nodiscard]] static bool is_valid(double longitude, double latitude) noexcept;

  friend bool operator==(const GeoCoordinate&, const GeoCoordinate&) = default;

 private:
  double lon_;
  double lat_;
};

/// Great-circle distance in meters on a sphere of radius kEarthRadiusM.
[[nodiscard]] double haversine_distance(const GeoCoordinate& a, const GeoCoordinate& b) noexcept;

/// Initial great-circle bearing from a to b in degrees, clockwise from north,
/// normalized to [0, 360). Identical points give 0.
[[nodiscard]] double compass_bearing(const GeoCoordinate& a, const GeoCoordinate& b) noexcept;

}  // namespace trajmode
