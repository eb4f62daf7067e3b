#include "trajmode/noise.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <Eigen/Dense>

#include "trajmode/errors.hpp"
#include "trajmode/table_io.hpp"

namespace trajmode {

namespace {

double median_inplace(std::vector<double>& v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), mid);
  return lower + 0.5 * (upper - lower);
}

// One Hampel pass over `in`; returns the number of changed values.
std::size_t hampel_pass(std::span<const double> in, std::vector<double>& out, std::size_t half, double n_sigmas,
                        std::vector<bool>& replaced) {
  const std::size_t n = in.size();
  std::vector<double> window;
  std::vector<double> dev;
  std::size_t changed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    window.assign(in.begin() + static_cast<std::ptrdiff_t>(lo), in.begin() + static_cast<std::ptrdiff_t>(hi + 1));
    const double med = median_inplace(window);
    dev.resize(window.size());
    std::ranges::transform(window, dev.begin(), [med](double x) { return std::abs(x - med); });
    const double mad = median_inplace(dev);
    if (std::abs(in[i] - med) > n_sigmas * kMadScale * mad) {
      out[i] = med;
      replaced[i] = true;
      ++changed;
    }
  }
  return changed;
}

}  // namespace

HampelResult hampel_filter(std::span<const double> series, std::size_t window, double n_sigmas) {
  if (window < 3 || window % 2 == 0) throw ConfigError("hampel window must be odd and >= 3");
  if (!(n_sigmas > 0.0)) throw ConfigError("hampel n_sigmas must be > 0");
  if (!std::ranges::all_of(series, [](double x) { return std::isfinite(x); })) {
    throw DomainError("hampel_filter: non-finite input");
  }
  const std::size_t n = series.size();
  const std::size_t half = window / 2;
  std::vector<double> current(series.begin(), series.end());
  std::vector<bool> replaced(n, false);
  // Converges in a handful of passes in practice; the cap only guards against cycling.
  const std::size_t max_passes = 4 * n + 8;
  for (std::size_t pass = 0; pass < max_passes; ++pass) {
    std::vector<double> next = current;
    if (hampel_pass(current, next, half, n_sigmas, replaced) == 0) break;
    current = std::move(next);
  }
  HampelResult result;
  result.values = std::move(current);
  for (std::size_t i = 0; i < n; ++i) {
    if (replaced[i] && result.values[i] != series[i]) result.replaced.push_back(i);
  }
  return result;
}

std::vector<double> savitzky_golay(std::span<const double> series, std::size_t window, std::size_t polyorder) {
  const std::size_t n = series.size();
  if (window % 2 == 0) throw ConfigError("savitzky-golay window must be odd");
  if (polyorder >= window) throw ConfigError("savitzky-golay polyorder must be < window");
  if (window > n) throw ConfigError("savitzky-golay window exceeds series length");

  const std::size_t half = window / 2;
  const std::size_t need = polyorder + 1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo = i >= half ? i - half : 0;
    std::size_t hi = std::min(n - 1, i + half);
    if (hi - lo + 1 < need) {
      if (lo == 0) hi = need - 1;
      else lo = n - need;
    }
    const std::size_t m = hi - lo + 1;
    const double scale = static_cast<double>(std::max(i - lo, hi - i));
    Eigen::MatrixXd vander(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(need));
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(m));
    for (std::size_t r = 0; r < m; ++r) {
      const double x = scale > 0.0 ? (static_cast<double>(lo + r) - static_cast<double>(i)) / scale : 0.0;
      double power = 1.0;
      for (std::size_t c = 0; c < need; ++c) {
        vander(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = power;
        power *= x;
      }
      rhs(static_cast<Eigen::Index>(r)) = series[lo + r];
    }
    const Eigen::VectorXd coef = vander.colPivHouseholderQr().solve(rhs);
    // Polynomial centred on i: its value at i is the constant term.
    out[i] = coef(0);
  }
  return out;
}

SmoothingReport hampel_smooth(const Segment& segment, const HampelParams& params) {
  std::vector<double> lat;
  std::vector<double> lon;
  for (const auto& p : segment.points) {
    lat.push_back(p.coordinate.latitude());
    lon.push_back(p.coordinate.longitude());
  }
  const auto flat = hampel_filter(lat, params.window, params.n_sigmas);
  const auto flon = hampel_filter(lon, params.window, params.n_sigmas);
  SmoothingReport report{segment, 0};
  for (std::size_t i = 0; i < segment.points.size(); ++i) {
    report.segment.points[i].coordinate = GeoCoordinate{flon.values[i], flat.values[i]};
  }
  std::vector<std::size_t> all;
  std::ranges::set_union(flat.replaced, flon.replaced, std::back_inserter(all));
  report.replaced_points = all.size();
  return report;
}

Segment savgol_smooth(const Segment& segment, std::size_t window, std::size_t polyorder) {
  if (segment.points.size() < window) return segment;
  std::vector<double> lat;
  std::vector<double> lon;
  for (const auto& p : segment.points) {
    lat.push_back(p.coordinate.latitude());
    lon.push_back(p.coordinate.longitude());
  }
  const auto slat = savitzky_golay(lat, window, polyorder);
  const auto slon = savitzky_golay(lon, window, polyorder);
  Segment out = segment;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    out.points[i].coordinate = GeoCoordinate{std::clamp(slon[i], -180.0, 180.0), std::clamp(slat[i], -90.0, 90.0)};
  }
  return out;
}

// --- ground truth ------------------------------------------------------------

void GroundTruthBounds::set(std::string label, SpeedBounds bounds) {
  if (!(bounds.lower < bounds.upper)) throw ConfigError("bounds for '" + label + "' need lower < upper");
  bounds_[std::move(label)] = bounds;
}

std::optional<SpeedBounds> GroundTruthBounds::find(std::string_view label) const {
  if (label == "walking") label = "walk";
  const auto it = bounds_.find(label);
  if (it == bounds_.end()) return std::nullopt;
  return it->second;
}

GroundTruthBounds GroundTruthBounds::published() {
  GroundTruthBounds b;
  b.set("car", {2.502, 20.629});
  b.set("bus", {1.278, 14.084});
  b.set("bike", {0.703, 5.832});
  b.set("taxi", {1.923, 17.214});
  b.set("train", {1.953, 52.957});
  b.set("walk", {0.379, 5.673});
  return b;
}

FilterOutcome ground_truth_filter(const FeatureMatrix& m, const GroundTruthBounds& bounds,
                                  std::string_view speed_column) {
  const auto col = m.column_index(speed_column);
  if (!col) throw SchemaError("missing column '" + std::string(speed_column) + "'");
  FilterOutcome out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto b = bounds.find(m.labels[r]);
    if (!b) {
      out.kept.push_back(r);
      out.uncovered.push_back(r);
      continue;
    }
    const double v = m.at(r, *col);
    if (v >= b->lower && v <= b->upper) {
      out.kept.push_back(r);
    } else {
      out.removed.push_back(r);
      out.reasons.push_back("ground_truth:" + std::string(speed_column) + "=" + format_double(v) +
                            " outside [" + format_double(b->lower) + ";" + format_double(b->upper) + "]");
    }
  }
  return out;
}

// --- DBSCAN ------------------------------------------------------------------

std::vector<bool> dbscan_noise_1d(std::span<const double> values, double eps, std::size_t min_pts) {
  if (!(eps > 0.0)) throw ConfigError("dbscan eps must be > 0");
  if (min_pts < 1) throw ConfigError("dbscan min_pts must be >= 1");
  const std::size_t n = values.size();
  std::vector<double> sorted(values.begin(), values.end());
  std::ranges::sort(sorted);

  // Core status per sorted position, from the count of values in [x - eps, x + eps].
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto lo = std::ranges::lower_bound(sorted, sorted[i] - eps);
    const auto hi = std::ranges::upper_bound(sorted, sorted[i] + eps);
    core[i] = static_cast<std::size_t>(hi - lo) >= min_pts;
  }
  std::vector<double> core_values;
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) core_values.push_back(sorted[i]);
  }
  std::vector<bool> noise(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = values[i];
    // Nearest core value on each side decides reachability.
    const auto it = std::ranges::lower_bound(core_values, x);
    bool reachable = false;
    if (it != core_values.end() && *it - x <= eps) reachable = true;
    if (it != core_values.begin() && x - *std::prev(it) <= eps) reachable = true;
    noise[i] = !reachable;
  }
  return noise;
}

FilterOutcome dbscan_outlier_filter(const FeatureMatrix& m, std::string_view feature, double eps,
                                    std::size_t min_pts) {
  const auto col = m.column_index(feature);
  if (!col) throw SchemaError("missing column '" + std::string(feature) + "'");
  const auto values = m.column(*col);
  const auto noise = dbscan_noise_1d(values, eps, min_pts);
  FilterOutcome out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (noise[r]) {
      out.removed.push_back(r);
      out.reasons.push_back("dbscan_noise:" + std::string(feature));
    } else {
      out.kept.push_back(r);
    }
  }
  return out;
}

void write_removal_audit(std::ostream& out, const FeatureMatrix& m, const FilterOutcome& outcome) {
  const FeatureMatrix removed = m.select_rows(outcome.removed);
  const std::vector<std::string> header = {"removal_reason"};
  const std::vector<std::vector<std::string>> cols = {outcome.reasons};
  write_feature_matrix(out, removed, header, cols);
}

}  // namespace trajmode
