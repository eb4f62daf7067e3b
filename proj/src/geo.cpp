#include "trajmode/geo.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "trajmode/errors.hpp"

namespace trajmode {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

}  // namespace

GeoCoordinate::GeoCoordinate(double longitude, double latitude) : lon_(longitude), lat_(latitude) {
  if (!is_valid(longitude, latitude)) {
    throw DomainError("invalid coordinate: lon=" + std::to_string(longitude) +
                      " lat=" + std::to_string(latitude));
  }
}

bool GeoCoordinate::is_valid(double longitude, double latitude) noexcept {
  return std::isfinite(longitude) && std::isfinite(latitude) && longitude >= -180.0 &&
         longitude <= 180.0 && latitude >= -90.0 && latitude <= 90.0;
}

double haversine_distance(const GeoCoordinate& a, const GeoCoordinate& b) noexcept {
  const double phi1 = a.latitude() * kDegToRad;
  const double phi2 = b.latitude() * kDegToRad;
  const double dphi = phi2 - phi1;
  const double dlambda = (b.longitude() - a.longitude()) * kDegToRad;

  const double s_phi = std::sin(dphi / 2.0);
  const double s_lambda = std::sin(dlambda / 2.0);
  // h is symmetric in (a, b) bit-for-bit: the squared sines do not depend on sign.
  double h = s_phi * s_phi + std::cos(phi1) * std::cos(phi2) * s_lambda * s_lambda;
  if (h > 1.0) h = 1.0;
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

double compass_bearing(const GeoCoordinate& a, const GeoCoordinate& b) noexcept {
  if (a == b) return 0.0;
  const double phi1 = a.latitude() * kDegToRad;
  const double phi2 = b.latitude() * kDegToRad;
  const double dlambda = (b.longitude() - a.longitude()) * kDegToRad;

  const double x = std::sin(dlambda) * std::cos(phi2);
  const double y = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dlambda);
  double deg = std::atan2(x, y) * kRadToDeg;
  if (deg < 0.0) deg += 360.0;
  if (deg >= 360.0) deg = 0.0;
  return deg;
}

}  // namespace trajmode
