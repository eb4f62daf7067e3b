#pragma once

// Cross-validation regimes, accuracy metrics, and the train/test correlation
// study comparing random and user-oriented folds.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "trajmode/classify.hpp"
#include "trajmode/noise.hpp"
#include "trajmode/select.hpp"
#include "trajmode/stats.hpp"
#include "trajmode/traj_features.hpp"

namespace trajmode {

enum class CvMode { random, user_oriented };

[[nodiscard]] std::string_view to_string(CvMode mode) noexcept;
/// Accepts "random", "user", "user_oriented". Throws ConfigError otherwise.
[[nodiscard]] CvMode parse_cv_mode(std::string_view name);

inline constexpr std::size_t kDefaultFolds = 5;

/// Immutable fold index per sample.
class FoldAssignment {
 public:
  FoldAssignment(std::size_t k, CvMode mode, std::uint64_t seed, std::vector<int> fold_of);

  [[nodiscard]] std::size_t k() const noexcept { return k_; }
  [[nodiscard]] CvMode mode() const noexcept { return mode_; }
  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] const std::vector<int>& fold_of() const noexcept { return fold_of_; }
  [[nodiscard]] std::size_t size() const noexcept { return fold_of_.size(); }

  /// Ascending sample indices of fold f / of every other fold.
  [[nodiscard]] std::vector<std::size_t> test_indices(std::size_t f) const;
  [[nodiscard]] std::vector<std::size_t> train_indices(std::size_t f) const;

 private:
  std::size_t k_;
  CvMode mode_;
  std::uint64_t seed_;
  std::vector<int> fold_of_;
};

/// random: seeded shuffle, then round-robin over folds.
/// user_oriented: users in descending sample count (ties by id) each go to the
/// currently smallest fold (ties: lowest index); samples follow their user.
/// Throws ConfigError when there are fewer samples (random) or distinct users
/// (user_oriented) than folds, or k < 2.
[[nodiscard]] FoldAssignment assign_folds(std::span<const std::string> user_ids, std::size_t k, CvMode mode,
                                          std::uint64_t seed);

/// Fraction of exact matches. Throws DomainError on length mismatch or empty input.
[[nodiscard]] double accuracy_by_segment(std::span<const std::string> predicted, std::span<const std::string> truth);
/// Distance-weighted fraction of correct segments. Throws DomainError if all
/// distances are zero, any is negative, or lengths differ.
[[nodiscard]] double accuracy_by_distance(std::span<const std::string> predicted, std::span<const std::string> truth,
                                          std::span<const double> distances_m);

struct ModelConfig {
  ModelKind kind = ModelKind::forest;
  DecisionTreeConfig tree{5, 2, 1, MaxFeatures::all, 10};
  RandomForestConfig forest{50, {std::nullopt, 2, 1, MaxFeatures::sqrt, 0}, true, 10, 1};

  [[nodiscard]] TrainedModel fit(const FeatureMatrix& train) const;
  [[nodiscard]] nlohmann::json to_json() const;
};

enum class NoiseKind { none, ground_truth, dbscan };

/// Row-level noise removal inside each fold. Ground truth compares raw
/// speed_mean to the bounds; DBSCAN runs on the train-fitted min-max scale.
struct NoiseStep {
  NoiseKind kind = NoiseKind::none;
  GroundTruthBounds bounds = GroundTruthBounds::published();
  DbscanParams dbscan;
  /// Also filter test rows. Only meaningful for ground truth, which then
  /// peeks at test labels.
  bool apply_to_test = false;

  [[nodiscard]] nlohmann::json to_json() const;
};

struct FoldResult {
  std::size_t fold = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::size_t removed_train = 0;
  std::size_t removed_test = 0;
  double accuracy_by_segment = 0.0;
  std::optional<double> accuracy_by_distance;
  /// confusion[true][predicted] over EvaluationReport::classes.
  std::vector<std::vector<std::size_t>> confusion;
};

struct EvaluationReport {
  std::vector<std::string> classes;
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  std::optional<double> mean_accuracy_by_distance;
  std::optional<double> std_accuracy_by_distance;
  std::vector<std::string> features;
  nlohmann::json config;

  [[nodiscard]] CvScore score() const;
  [[nodiscard]] nlohmann::json to_json() const;
  void write_summary_csv(std::ostream& out) const;
  void write_confusion_csv(std::ostream& out) const;
};

/// Per fold: drop noisy rows, fit min-max on the remaining train rows, apply
/// to both sides, restrict to the selected features, fit, and score the test
/// rows. Accuracy by distance is reported when the matrix carries distances.
[[nodiscard]] EvaluationReport cross_validate(const FeatureMatrix& data, const ModelConfig& model,
                                              const FoldAssignment& folds, const NoiseStep& noise = {},
                                              const std::optional<std::vector<std::string>>& selection = std::nullopt);

inline constexpr std::size_t kCorrelationGrid = 100;

/// Spearman correlation between a train-side and a test-side value sequence,
/// each kept in dataset order and resampled by linear interpolation onto a
/// common grid of `grid` relative positions. nullopt when either resampled
/// side is constant.
[[nodiscard]] std::optional<double> train_test_correlation(std::span<const double> train_values,
                                                           std::span<const double> test_values,
                                                           std::size_t grid = kCorrelationGrid);

struct CorrelationEntry {
  std::size_t fold = 0;
  std::string feature;
  double correlation = 0.0;
  bool degenerate = false;
};

struct CorrelationStudy {
  std::vector<CorrelationEntry> random_entries;
  std::vector<CorrelationEntry> user_entries;
  double random_mean = 0.0;
  double user_mean = 0.0;
  TestResult mann_whitney;

  [[nodiscard]] std::vector<double> random_column() const;
  [[nodiscard]] std::vector<double> user_column() const;
  [[nodiscard]] nlohmann::json to_json() const;
  /// Columns: fold,feature,random,user,random_degenerate,user_degenerate.
  void write_csv(std::ostream& out) const;
};

/// Runs both regimes with the same k and seed and compares the pooled
/// (fold, feature) correlation columns with a two-sided Mann-Whitney U test.
[[nodiscard]] CorrelationStudy fold_correlation_study(const FeatureMatrix& data, std::size_t k, std::uint64_t seed);

}  // namespace trajmode
