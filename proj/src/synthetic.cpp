#include "trajmode/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "trajmode/errors.hpp"
#include "trajmode/random.hpp"

namespace trajmode {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Destination after moving `distance` meters along `bearing_deg` on the sphere.
GeoCoordinate destination(const GeoCoordinate& from, double bearing_deg, double distance) {
  const double delta = distance / kEarthRadiusM;
  const double theta = bearing_deg * kDegToRad;
  const double phi1 = from.latitude() * kDegToRad;
  const double lambda1 = from.longitude() * kDegToRad;
  const double phi2 = std::asin(std::sin(phi1) * std::cos(delta) + std::cos(phi1) * std::sin(delta) * std::cos(theta));
  const double lambda2 = lambda1 + std::atan2(std::sin(theta) * std::sin(delta) * std::cos(phi1),
                                              std::cos(delta) - std::sin(phi1) * std::sin(phi2));
  double lon = lambda2 / kDegToRad;
  if (lon > 180.0) lon -= 360.0;
  if (lon < -180.0) lon += 360.0;
  return {lon, phi2 / kDegToRad};
}

// GeoLife stores six decimals.
double round6(double v) { return std::round(v * 1e6) / 1e6; }

std::string user_name(std::size_t u) {
  std::string s = std::to_string(u);
  return std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

}  // namespace

std::vector<SyntheticUser> generate_dataset(const SyntheticDatasetOptions& options) {
  if (options.users == 0 || options.modes.empty() || options.segments_per_mode == 0) {
    throw ConfigError("synthetic dataset needs at least one user, mode and segment");
  }
  if (options.points_per_segment < kMinSegmentPoints) {
    throw ConfigError("synthetic segments need at least " + std::to_string(kMinSegmentPoints) + " points");
  }
  if (!(options.sampling_interval_s >= 1.0)) throw ConfigError("sampling interval must be >= 1 s");
  if (options.user_speed_bias < 0.0 || options.user_speed_bias >= 1.0) {
    throw ConfigError("user speed bias must be in [0, 1)");
  }
  for (const auto& m : options.modes) {
    if (!(m.min_speed > 0.0 && m.min_speed <= m.max_speed)) throw ConfigError("bad speed range for " + m.tag);
  }

  // 2008-04-01 00:00:00, inside GeoLife's collection period.
  const Timestamp epoch = *make_timestamp(2008, 4, 1, 0, 0, 0);
  const auto dt = static_cast<Timestamp>(std::llround(options.sampling_interval_s));
  std::vector<SyntheticUser> users;
  for (std::size_t u = 0; u < options.users; ++u) {
    Rng rng(derive_seed(options.seed, u));
    const double user_factor = 1.0 + options.user_speed_bias * (2.0 * rng.uniform01() - 1.0);
    SyntheticUser user;
    user.user_id = user_name(u);
    std::vector<LabelInterval> intervals;
    std::size_t day = 0;
    for (std::size_t rep = 0; rep < options.segments_per_mode; ++rep) {
      for (const auto& mode : options.modes) {
        const double base = rng.uniform(mode.min_speed, mode.max_speed) * user_factor;
        // Start between 08:00 and 10:00 of its own day.
        Timestamp t = epoch + static_cast<Timestamp>(day) * kSecondsPerDay + 8 * 3600 +
                      static_cast<Timestamp>(rng.uniform_index(7200));
        GeoCoordinate pos{round6(116.30 + rng.uniform(-0.05, 0.05)), round6(39.98 + rng.uniform(-0.05, 0.05))};
        double heading = rng.uniform(0.0, 360.0);
        std::vector<TrajectoryPoint> points;
        for (std::size_t i = 0; i < options.points_per_segment; ++i) {
          points.push_back({pos, t});
          const double speed = std::max(0.1, base * (1.0 + options.speed_jitter * rng.normal()));
          heading = std::fmod(heading + 8.0 * rng.normal() + 360.0, 360.0);
          const GeoCoordinate next = destination(pos, heading, speed * static_cast<double>(dt));
          pos = GeoCoordinate{round6(next.longitude()), round6(next.latitude())};
          t += dt;
        }
        intervals.push_back({points.front().timestamp, points.back().timestamp, mode.tag});
        user.plt_files.push_back(serialize_plt(points));
        ++day;
      }
    }
    user.labels = serialize_labels(intervals);
    users.push_back(std::move(user));
  }
  return users;
}

void write_geolife_tree(const std::filesystem::path& root, const std::vector<SyntheticUser>& users) {
  namespace fs = std::filesystem;
  if (fs::exists(root)) throw DataError("refusing to overwrite existing path: " + root.string());
  for (const auto& user : users) {
    const fs::path dir = root / "Data" / user.user_id;
    fs::create_directories(dir / "Trajectory");
    std::ofstream(dir / "labels.txt", std::ios::binary) << user.labels;
    for (std::size_t i = 0; i < user.plt_files.size(); ++i) {
      std::string name = std::to_string(i + 1);
      name = std::string(name.size() < 4 ? 4 - name.size() : 0, '0') + name + ".plt";
      std::ofstream(dir / "Trajectory" / name, std::ios::binary) << user.plt_files[i];
    }
  }
}

FeatureMatrix signal_noise_matrix(std::size_t rows, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix m;
  m.columns = {"x0", "x1", "x2", "n0", "n1", "n2", "n3", "n4", "n5", "n6"};
  for (std::size_t r = 0; r < rows; ++r) {
    int cls = 0;
    for (std::size_t c = 0; c < m.columns.size(); ++c) {
      const double v = rng.normal();
      m.data.push_back(v);
      if (c < 3 && v > 0.0) cls += 1 << (2 - c);
    }
    m.labels.push_back("k" + std::to_string(cls));
    m.user_ids.push_back(user_name(r % 20));
  }
  return m;
}

FeatureMatrix gaussian_blobs(std::size_t per_class, std::size_t classes, std::size_t dims, double separation,
                             std::uint64_t seed, std::size_t users) {
  if (dims == 0 || classes == 0 || users == 0) throw ConfigError("gaussian_blobs: empty shape");
  Rng rng(seed);
  FeatureMatrix m;
  for (std::size_t d = 0; d < dims; ++d) m.columns.push_back("f" + std::to_string(d));
  std::size_t row = 0;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t c = 0; c < classes; ++c) {
      for (std::size_t d = 0; d < dims; ++d) {
        const double centre = d == 0 ? separation * static_cast<double>(c) : 0.0;
        m.data.push_back(centre + rng.normal());
      }
      m.labels.push_back("c" + std::to_string(c));
      m.user_ids.push_back(user_name(row++ % users));
    }
  }
  return m;
}

FeatureMatrix user_biased_matrix(std::size_t users, std::size_t rows_per_user, std::size_t dims, double bias,
                                 std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix m;
  for (std::size_t d = 0; d < dims; ++d) m.columns.push_back("f" + std::to_string(d));
  for (std::size_t u = 0; u < users; ++u) {
    std::vector<double> offset(dims);
    for (auto& o : offset) o = bias * rng.normal();
    for (std::size_t i = 0; i < rows_per_user; ++i) {
      for (std::size_t d = 0; d < dims; ++d) m.data.push_back(offset[d] + rng.normal());
      m.labels.push_back(i % 2 == 0 ? "a" : "b");
      m.user_ids.push_back(user_name(u));
    }
  }
  return m;
}

}  // namespace trajmode
