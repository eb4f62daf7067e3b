#pragma once

// Seeded synthetic data: GeoLife-layout trajectory trees and small feature
// matrices with known structure, for tests, demos, and the bundled mini-dataset.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "trajmode/ingest.hpp"
#include "trajmode/traj_features.hpp"

namespace trajmode {

/// Base speed range (m/s) of one synthetic mode.
struct SyntheticMode {
  std::string tag;
  double min_speed;
  double max_speed;
};

struct SyntheticDatasetOptions {
  std::size_t users = 6;
  std::vector<SyntheticMode> modes = {
      {"walk", 1.0, 1.8}, {"bike", 3.5, 5.5}, {"bus", 7.0, 10.0}, {"car", 13.0, 19.0}};
  std::size_t segments_per_mode = 2;
  std::size_t points_per_segment = 40;
  double sampling_interval_s = 5.0;
  /// Relative per-point speed jitter (standard deviation).
  double speed_jitter = 0.08;
  /// Per-user multiplicative speed offset drawn from [1 - b, 1 + b].
  double user_speed_bias = 0.0;
  std::uint64_t seed = 7;
};

struct SyntheticUser {
  std::string user_id;
  /// One PLT file content per day, chronological.
  std::vector<std::string> plt_files;
  std::string labels;
};

/// Users "000", "001", ... Each segment gets its own day, so segmentation
/// recovers exactly users * modes * segments_per_mode segments.
[[nodiscard]] std::vector<SyntheticUser> generate_dataset(const SyntheticDatasetOptions& options);

/// Writes `<root>/Data/<user>/{labels.txt,Trajectory/<n>.plt}`. Throws
/// DataError if root already exists.
void write_geolife_tree(const std::filesystem::path& root, const std::vector<SyntheticUser>& users);

/// Features x0..x2 carry the class (4*[x0>0] + 2*[x1>0] + [x2>0], eight
/// classes); n0..n6 are pure noise. Every cell is standard normal.
[[nodiscard]] FeatureMatrix signal_noise_matrix(std::size_t rows, std::uint64_t seed);

/// Gaussian blobs with unit spread whose centres sit `separation` apart on
/// feature f0. Classes are "c0", "c1", ...; users cycle over `users` ids.
[[nodiscard]] FeatureMatrix gaussian_blobs(std::size_t per_class, std::size_t classes, std::size_t dims,
                                           double separation, std::uint64_t seed, std::size_t users = 10);

/// Rows grouped by user in dataset order. Each user draws one offset per
/// feature (scale `bias`), and each row adds unit noise on top.
[[nodiscard]] FeatureMatrix user_biased_matrix(std::size_t users, std::size_t rows_per_user, std::size_t dims,
                                               double bias, std::uint64_t seed);

}  // namespace trajmode
