#pragma once

// Experiment configuration and the end-to-end run: segments, features,
// selection, noise handling, and cross-validated evaluation, written as a
// self-describing run directory.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "trajmode/eval.hpp"
#include "trajmode/ingest.hpp"
#include "trajmode/noise.hpp"
#include "trajmode/point_features.hpp"
#include "trajmode/select.hpp"
#include "trajmode/traj_features.hpp"

namespace trajmode {

enum class NoiseMethod { none, hampel, ground_truth, dbscan };

/// Accepts "none", "hampel", "ground-truth"/"ground_truth", "dbscan".
[[nodiscard]] NoiseMethod parse_noise_method(std::string_view text);
[[nodiscard]] std::string_view to_string(NoiseMethod method) noexcept;

struct NoiseConfig {
  NoiseMethod method = NoiseMethod::none;
  HampelParams hampel;
  GroundTruthBounds bounds = GroundTruthBounds::published();
  DbscanParams dbscan;
  /// Ground truth also filters test rows, which reads test labels.
  bool leak_acknowledged = false;
};

struct SavgolConfig {
  std::size_t window = 7;
  std::size_t polyorder = 2;
};

enum class SelectionMethod { none, wrapper, importance, list };

struct SelectionConfig {
  SelectionMethod method = SelectionMethod::none;
  /// 0 keeps the best-scoring prefix of the trace.
  std::size_t top_k = 20;
  /// Search rounds; defaults to top_k (all features when top_k is 0).
  std::optional<std::size_t> max_rounds;
  std::vector<std::string> features;

  /// "none", "wrapper", "importance", or "list:<a>,<b>,...".
  [[nodiscard]] static SelectionConfig parse(std::string_view text);
};

struct ExperimentConfig {
  std::optional<std::filesystem::path> dataset_root;
  LabelScheme label_scheme = LabelScheme::identity;
  std::size_t k = kDefaultFolds;
  CvMode cv_mode = CvMode::random;
  std::optional<std::uint64_t> seed;
  ModelConfig model;
  NoiseConfig noise;
  std::optional<SavgolConfig> savgol;
  SelectionConfig selection;
  BearingDiff bearing_diff = BearingDiff::raw;
  std::filesystem::path output_dir = "runs";
  std::size_t n_jobs = 1;

  /// Throws ConfigError on unknown keys, wrong types, or invalid values.
  [[nodiscard]] static ExperimentConfig from_json(const nlohmann::json& doc);
  [[nodiscard]] nlohmann::json to_json() const;
  /// Checks invariants that do not touch the file system. Throws ConfigError.
  void validate() const;
  /// Propagates the experiment seed into the model.
  void apply_seed();
};

/// Label scheme, then optional Hampel and Savitzky-Golay smoothing per segment.
/// Segments whose label the scheme drops are removed.
[[nodiscard]] std::vector<Segment> prepare_segments(std::vector<Segment> segments, const ExperimentConfig& config,
                                                    std::size_t* smoothed_points = nullptr);

/// `<user>/<yyyy-mm-dd>/<label>/<ordinal>`, ordinal counting within the user.
[[nodiscard]] std::vector<std::string> segment_refs(std::span<const Segment> segments);

/// One row per segment in input order. Work is split over n_jobs threads;
/// the result does not depend on n_jobs.
[[nodiscard]] FeatureMatrix extract_features(std::span<const Segment> segments, BearingDiff diff,
                                             std::size_t n_jobs = 1);

[[nodiscard]] NoiseStep make_noise_step(const NoiseConfig& noise);

/// Runs the configured selection with cross-validation as the scorer.
/// Returns nullopt for SelectionMethod::none and list.
[[nodiscard]] std::optional<SelectionTrace> run_selection(const FeatureMatrix& data, const ExperimentConfig& config,
                                                          const FoldAssignment& folds);

/// Feature list the evaluation should use, or nullopt for all columns.
[[nodiscard]] std::optional<std::vector<std::string>> resolve_selection(const SelectionConfig& selection,
                                                                        const std::optional<SelectionTrace>& trace);

/// Creates `<parent>/run-NNNN` with the lowest unused number. Never reuses a directory.
[[nodiscard]] std::filesystem::path create_run_directory(const std::filesystem::path& parent);

struct RunResult {
  std::filesystem::path run_dir;
  EvaluationReport report;
  std::optional<SelectionTrace> trace;
  std::size_t segments = 0;
};

/// Whole pipeline. Throws ConfigError for invalid configs and DataError for
/// missing or unusable data.
[[nodiscard]] RunResult run_experiment(ExperimentConfig config);

[[nodiscard]] std::string_view version() noexcept;

}  // namespace trajmode
