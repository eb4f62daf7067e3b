#include "trajmode/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "trajmode/errors.hpp"
#include "trajmode/random.hpp"

namespace trajmode {

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double score = -1.0;  // sum cL^2/nL + sum cR^2/nR; larger is better
};

// Grows one tree over a (possibly repeated) list of row indices.
class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const std::size_t> y, std::size_t n_classes,
              const DecisionTreeConfig& cfg, Rng* rng)
      : x_(x), y_(y), n_classes_(n_classes), cfg_(cfg), rng_(rng), importance_(x.cols(), 0.0) {
    if (cfg.max_features == MaxFeatures::sqrt) {
      max_features_ = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(x.cols()))));
    } else {
      max_features_ = x.cols();
    }
  }

  Tree build(std::vector<std::size_t> samples) {
    root_size_ = static_cast<double>(samples.size());
    grow(samples, 0);
    return std::move(tree_);
  }

  // Per-tree importances normalized to sum 1 (all zero for a single leaf).
  std::vector<double> importances() const {
    std::vector<double> imp = importance_;
    const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
    if (total > 0.0) {
      for (auto& v : imp) v /= total;
    }
    return imp;
  }

 private:
  std::vector<double> counts_of(std::span<const std::size_t> samples) const {
    std::vector<double> counts(n_classes_, 0.0);
    for (const auto s : samples) counts[y_[s]] += 1.0;
    return counts;
  }

  int make_leaf(const std::vector<double>& counts, double total) {
    TreeNode leaf;
    leaf.distribution.resize(n_classes_);
    for (std::size_t k = 0; k < n_classes_; ++k) leaf.distribution[k] = counts[k] / total;
    tree_.nodes.push_back(std::move(leaf));
    return static_cast<int>(tree_.nodes.size() - 1);
  }

  std::vector<std::size_t> candidate_order() {
    std::vector<std::size_t> order(x_.cols());
    std::iota(order.begin(), order.end(), 0);
    if (max_features_ < order.size() && rng_ != nullptr) rng_->shuffle(std::span(order));
    return order;
  }

  // Best split of one feature, or score -1 if none satisfies the leaf constraint.
  Split best_for_feature(std::size_t f, std::span<const std::size_t> samples, std::vector<std::size_t>& scratch,
                         const std::vector<double>& total_counts) const {
    scratch.assign(samples.begin(), samples.end());
    std::ranges::sort(scratch, [&](std::size_t a, std::size_t b) { return x_.at(a, f) < x_.at(b, f); });
    const std::size_t n = scratch.size();
    std::vector<double> left(n_classes_, 0.0);
    double sum_left_sq = 0.0;
    double sum_right_sq = 0.0;
    for (const double c : total_counts) sum_right_sq += c * c;
    std::vector<double> right = total_counts;

    Split best;
    best.feature = static_cast<int>(f);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const std::size_t k = y_[scratch[i]];
      sum_left_sq += 2.0 * left[k] + 1.0;
      left[k] += 1.0;
      sum_right_sq -= 2.0 * right[k] - 1.0;
      right[k] -= 1.0;
      const double a = x_.at(scratch[i], f);
      const double b = x_.at(scratch[i + 1], f);
      if (!(a < b)) continue;
      const std::size_t n_left = i + 1;
      const std::size_t n_right = n - n_left;
      if (n_left < cfg_.min_samples_leaf || n_right < cfg_.min_samples_leaf) continue;
      const double score = sum_left_sq / static_cast<double>(n_left) + sum_right_sq / static_cast<double>(n_right);
      if (score > best.score) {
        double thr = a + (b - a) / 2.0;
        if (!(thr < b)) thr = a;
        best.score = score;
        best.threshold = thr;
      }
    }
    return best;
  }

  int grow(std::vector<std::size_t>& samples, std::size_t depth) {
    const auto counts = counts_of(samples);
    const double total = static_cast<double>(samples.size());
    const double impurity = gini_impurity(counts);
    const bool depth_reached = cfg_.max_depth && depth >= *cfg_.max_depth;
    if (impurity <= 0.0 || depth_reached || samples.size() < cfg_.min_samples_split ||
        samples.size() < 2 * cfg_.min_samples_leaf) {
      return make_leaf(counts, total);
    }

    const auto order = candidate_order();
    Split best;
    std::vector<std::size_t> scratch;
    // Evaluate max_features candidates at a time; keep drawing when none splits.
    for (std::size_t start = 0; start < order.size() && best.score < 0.0; start += max_features_) {
      const std::size_t stop = std::min(order.size(), start + max_features_);
      std::vector<std::size_t> chunk(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(stop));
      std::ranges::sort(chunk);
      for (const std::size_t f : chunk) {
        const Split s = best_for_feature(f, samples, scratch, counts);
        if (s.score > best.score) best = s;
      }
    }
    if (best.score < 0.0) return make_leaf(counts, total);

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (const auto s : samples) {
      (x_.at(s, static_cast<std::size_t>(best.feature)) <= best.threshold ? left : right).push_back(s);
    }
    // Weighted impurity decrease: (n_t/N) * (gini_t - weighted child gini).
    const double child_impurity = 1.0 - best.score / total;
    importance_[static_cast<std::size_t>(best.feature)] += (total / root_size_) * (impurity - child_impurity);

    samples.clear();
    samples.shrink_to_fit();
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{best.feature, best.threshold, -1, -1, {}});
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    tree_.nodes[static_cast<std::size_t>(id)].left = l;
    tree_.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  const FeatureMatrix& x_;
  std::span<const std::size_t> y_;
  std::size_t n_classes_;
  const DecisionTreeConfig& cfg_;
  Rng* rng_;
  std::size_t max_features_ = 0;
  double root_size_ = 1.0;
  std::vector<double> importance_;
  Tree tree_;
};

struct EncodedLabels {
  std::vector<std::string> classes;
  std::vector<std::size_t> y;
};

EncodedLabels encode_labels(const FeatureMatrix& x) {
  EncodedLabels enc;
  enc.classes = x.labels;
  std::ranges::sort(enc.classes);
  enc.classes.erase(std::unique(enc.classes.begin(), enc.classes.end()), enc.classes.end());
  enc.y.reserve(x.rows());
  for (const auto& label : x.labels) {
    enc.y.push_back(static_cast<std::size_t>(std::ranges::lower_bound(enc.classes, label) - enc.classes.begin()));
  }
  return enc;
}

void check_trainable(const FeatureMatrix& x) {
  if (x.rows() == 0) throw DomainError("cannot fit a model on an empty table");
  if (x.cols() == 0) throw DomainError("cannot fit a model without features");
  for (const double v : x.data) {
    if (!std::isfinite(v)) throw DomainError("training data contains non-finite values");
  }
}

std::size_t argmax_lowest(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (v[k] > v[best]) best = k;
  }
  return best;
}

}  // namespace

double gini_impurity(std::span<const double> class_counts) {
  double total = 0.0;
  for (const double c : class_counts) {
    if (c < 0.0) throw DomainError("gini_impurity: negative count");
    total += c;
  }
  if (total <= 0.0) throw DomainError("gini_impurity: all counts are zero");
  double sum_sq = 0.0;
  for (const double c : class_counts) sum_sq += (c / total) * (c / total);
  return std::max(0.0, 1.0 - sum_sq);
}

void DecisionTreeConfig::validate() const {
  if (min_samples_split < 2) throw ConfigError("min_samples_split must be >= 2");
  if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
  if (max_depth && *max_depth < 1) throw ConfigError("max_depth must be positive");
}

void RandomForestConfig::validate() const {
  if (n_estimators < 1) throw ConfigError("n_estimators must be >= 1");
  tree.validate();
}

std::size_t Tree::predict_class(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return argmax_lowest(nodes[i].distribution);
}

std::size_t Tree::depth() const {
  std::vector<std::pair<std::size_t, std::size_t>> stack = {{0, 0}};
  std::size_t deepest = 0;
  while (!stack.empty()) {
    const auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes[i].is_leaf()) {
      stack.emplace_back(static_cast<std::size_t>(nodes[i].left), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes[i].right), d + 1);
    }
  }
  return deepest;
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(std::ranges::count_if(nodes, [](const TreeNode& n) { return n.is_leaf(); }));
}

TrainedModel::TrainedModel(ModelKind kind, std::vector<std::string> classes, std::vector<std::string> features,
                           std::vector<Tree> trees, std::vector<double> importances)
    : kind_(kind),
      classes_(std::move(classes)),
      features_(std::move(features)),
      trees_(std::move(trees)),
      importances_(std::move(importances)) {}

std::map<std::string, double> TrainedModel::importance_map() const {
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < features_.size(); ++i) out[features_[i]] = importances_[i];
  return out;
}

std::vector<std::string> TrainedModel::predict(const FeatureMatrix& x) const {
  return predict_with_votes(x).labels;
}

VotedPrediction TrainedModel::predict_with_votes(const FeatureMatrix& x) const {
  const FeatureMatrix aligned = x.select_columns(features_);
  VotedPrediction out;
  out.labels.reserve(aligned.rows());
  out.vote_fractions.reserve(aligned.rows());
  const double n_trees = static_cast<double>(trees_.size());
  std::vector<double> votes(classes_.size());
  for (std::size_t r = 0; r < aligned.rows(); ++r) {
    std::ranges::fill(votes, 0.0);
    const auto row = aligned.row(r);
    for (const auto& t : trees_) votes[t.predict_class(row)] += 1.0;
    out.labels.push_back(classes_[argmax_lowest(votes)]);
    std::vector<double> frac(votes.size());
    std::ranges::transform(votes, frac.begin(), [n_trees](double v) { return v / n_trees; });
    out.vote_fractions.push_back(std::move(frac));
  }
  return out;
}

nlohmann::json TrainedModel::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      if (n.is_leaf()) {
        nodes.push_back({{"leaf", n.distribution}});
      } else {
        nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
      }
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  return {
      {"format", "trajmode-model"},
      {"version", kFormatVersion},
      {"kind", kind_ == ModelKind::tree ? "tree" : "forest"},
      {"classes", classes_},
      {"features", features_},
      {"importances", importances_},
      {"trees", std::move(trees)},
  };
}

TrainedModel TrainedModel::from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format") != "trajmode-model") throw DataError("not a trajmode model document");
    if (doc.at("version").get<int>() != kFormatVersion) {
      throw DataError("unsupported model version " + doc.at("version").dump());
    }
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind != "tree" && kind != "forest") throw DataError("unknown model kind '" + kind + "'");
    auto classes = doc.at("classes").get<std::vector<std::string>>();
    auto features = doc.at("features").get<std::vector<std::string>>();
    auto importances = doc.at("importances").get<std::vector<double>>();
    std::vector<Tree> trees;
    for (const auto& jt : doc.at("trees")) {
      Tree t;
      for (const auto& jn : jt.at("nodes")) {
        TreeNode n;
        if (jn.contains("leaf")) {
          n.distribution = jn.at("leaf").get<std::vector<double>>();
          if (n.distribution.size() != classes.size()) throw DataError("leaf distribution size mismatch");
        } else {
          n.feature = jn.at("feature").get<int>();
          n.threshold = jn.at("threshold").get<double>();
          n.left = jn.at("left").get<int>();
          n.right = jn.at("right").get<int>();
        }
        t.nodes.push_back(std::move(n));
      }
      const auto count = static_cast<int>(t.nodes.size());
      for (const auto& n : t.nodes) {
        if (!n.is_leaf() && (n.feature >= static_cast<int>(features.size()) || n.left <= 0 || n.right <= 0 ||
                             n.left >= count || n.right >= count)) {
          throw DataError("tree node references out of range");
        }
      }
      if (t.nodes.empty()) throw DataError("empty tree");
      trees.push_back(std::move(t));
    }
    if (trees.empty()) throw DataError("model has no trees");
    if (importances.size() != features.size()) throw DataError("importance size mismatch");
    return TrainedModel(kind == "tree" ? ModelKind::tree : ModelKind::forest, std::move(classes), std::move(features),
                        std::move(trees), std::move(importances));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model document: ") + e.what());
  }
}

TrainedModel fit_tree(const FeatureMatrix& x, const DecisionTreeConfig& cfg) {
  cfg.validate();
  check_trainable(x);
  const auto enc = encode_labels(x);
  Rng rng(cfg.rng_seed);
  TreeBuilder builder(x, enc.y, enc.classes.size(), cfg, &rng);
  std::vector<std::size_t> samples(x.rows());
  std::iota(samples.begin(), samples.end(), 0);
  std::vector<Tree> trees;
  trees.push_back(builder.build(std::move(samples)));
  return TrainedModel(ModelKind::tree, enc.classes, x.columns, std::move(trees), builder.importances());
}

TrainedModel fit_forest(const FeatureMatrix& x, const RandomForestConfig& cfg) {
  cfg.validate();
  check_trainable(x);
  const auto enc = encode_labels(x);
  const std::size_t n = x.rows();
  std::vector<Tree> trees(cfg.n_estimators);
  std::vector<std::vector<double>> per_tree_importance(cfg.n_estimators);

  auto fit_one = [&](std::size_t t) {
    Rng rng(derive_seed(cfg.rng_seed, t));
    std::vector<std::size_t> samples(n);
    if (cfg.bootstrap) {
      for (auto& s : samples) s = rng.uniform_index(n);
    } else {
      std::iota(samples.begin(), samples.end(), 0);
    }
    TreeBuilder builder(x, enc.y, enc.classes.size(), cfg.tree, &rng);
    trees[t] = builder.build(std::move(samples));
    per_tree_importance[t] = builder.importances();
  };

  const std::size_t jobs = std::clamp<std::size_t>(cfg.n_jobs, 1, cfg.n_estimators);
  if (jobs == 1) {
    for (std::size_t t = 0; t < cfg.n_estimators; ++t) fit_one(t);
  } else {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t t = w; t < cfg.n_estimators; t += jobs) fit_one(t);
      });
    }
  }

  // Reduce in tree-index order so the sum is independent of scheduling.
  std::vector<double> importance(x.cols(), 0.0);
  for (const auto& imp : per_tree_importance) {
    for (std::size_t f = 0; f < imp.size(); ++f) importance[f] += imp[f];
  }
  const double total = std::accumulate(importance.begin(), importance.end(), 0.0);
  if (total > 0.0) {
    for (auto& v : importance) v /= total;
  }
  return TrainedModel(ModelKind::forest, enc.classes, x.columns, std::move(trees), std::move(importance));
}

}  // namespace trajmode
