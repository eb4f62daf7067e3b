#pragma once

// CART decision tree and random forest with Gini impurity.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "trajmode/traj_features.hpp"

namespace trajmode {

/// 1 - sum p_k^2. Throws DomainError if all counts are zero or any is negative.
[[nodiscard]] double gini_impurity(std::span<const double> class_counts);

enum class MaxFeatures { all, sqrt };

struct DecisionTreeConfig {
  std::optional<std::size_t> max_depth;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  MaxFeatures max_features = MaxFeatures::all;
  std::uint64_t rng_seed = 0;

  /// Throws ConfigError on violated invariants.
  void validate() const;
};

struct RandomForestConfig {
  std::size_t n_estimators = 50;
  DecisionTreeConfig tree{std::nullopt, 2, 1, MaxFeatures::sqrt, 0};
  bool bootstrap = true;
  std::uint64_t rng_seed = 0;
  /// Worker threads for tree fitting; results do not depend on it.
  std::size_t n_jobs = 1;

  void validate() const;
};

/// Flat binary tree. Internal nodes send x[feature] <= threshold left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  /// Class fractions at a leaf (empty for internal nodes).
  std::vector<double> distribution;

  [[nodiscard]] bool is_leaf() const noexcept { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;

  /// Majority class index at the reached leaf; ties go to the lowest index.
  [[nodiscard]] std::size_t predict_class(std::span<const double> row) const;
  [[nodiscard]] std::size_t depth() const;
  [[nodiscard]] std::size_t leaf_count() const;
};

enum class ModelKind { tree, forest };

struct VotedPrediction {
  std::vector<std::string> labels;
  /// Per row, fraction of trees voting for each class (model.classes order).
  std::vector<std::vector<double>> vote_fractions;
};

/// Immutable fitted model; safe for concurrent prediction.
class TrainedModel {
 public:
  static constexpr int kFormatVersion = 1;

  TrainedModel(ModelKind kind, std::vector<std::string> classes, std::vector<std::string> features,
               std::vector<Tree> trees, std::vector<double> importances);

  [[nodiscard]] ModelKind kind() const noexcept { return kind_; }
  /// Lexicographically sorted class names.
  [[nodiscard]] const std::vector<std::string>& classes() const noexcept { return classes_; }
  [[nodiscard]] const std::vector<std::string>& features() const noexcept { return features_; }
  [[nodiscard]] const std::vector<Tree>& trees() const noexcept { return trees_; }
  /// Aligned with features(); sums to 1, or all zero when no tree has a split.
  [[nodiscard]] const std::vector<double>& importances() const noexcept { return importances_; }
  [[nodiscard]] std::map<std::string, double> importance_map() const;

  /// Columns are matched by name; throws SchemaError if any training column is missing.
  [[nodiscard]] std::vector<std::string> predict(const FeatureMatrix& x) const;
  /// Majority vote over trees; ties go to the lexicographically smallest class.
  [[nodiscard]] VotedPrediction predict_with_votes(const FeatureMatrix& x) const;

  [[nodiscard]] nlohmann::json to_json() const;
  /// Throws DataError on malformed or wrong-version documents.
  [[nodiscard]] static TrainedModel from_json(const nlohmann::json& doc);

 private:
  ModelKind kind_;
  std::vector<std::string> classes_;
  std::vector<std::string> features_;
  std::vector<Tree> trees_;
  std::vector<double> importances_;
};

/// Greedy CART on all rows of x (labels from x.labels). Thresholds are
/// midpoints between consecutive distinct values; ties prefer the lowest
/// feature index, then the lowest threshold. Throws DomainError when empty.
[[nodiscard]] TrainedModel fit_tree(const FeatureMatrix& x, const DecisionTreeConfig& cfg);

/// Bagged trees; tree i draws its bootstrap sample and split candidates from
/// Rng(derive_seed(cfg.rng_seed, i)).
[[nodiscard]] TrainedModel fit_forest(const FeatureMatrix& x, const RandomForestConfig& cfg);

}  // namespace trajmode
