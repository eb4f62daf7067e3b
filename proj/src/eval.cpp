#include "trajmode/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "trajmode/errors.hpp"
#include "trajmode/random.hpp"
#include "trajmode/table_io.hpp"

namespace trajmode {

namespace {

std::pair<double, double> mean_and_std(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (const double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / n)};
}

std::vector<double> resample_positions(std::span<const double> values, std::size_t grid) {
  std::vector<double> out(grid);
  const double last = static_cast<double>(values.size() - 1);
  for (std::size_t j = 0; j < grid; ++j) {
    const double pos = grid == 1 ? 0.0 : last * static_cast<double>(j) / static_cast<double>(grid - 1);
    const auto k = static_cast<std::size_t>(std::floor(pos));
    if (k + 1 >= values.size()) {
      out[j] = values.back();
      continue;
    }
    const double f = pos - static_cast<double>(k);
    out[j] = values[k] + f * (values[k + 1] - values[k]);
  }
  return out;
}

std::vector<CorrelationEntry> regime_correlations(const FeatureMatrix& data, const FoldAssignment& folds) {
  std::vector<CorrelationEntry> entries;
  for (std::size_t f = 0; f < folds.k(); ++f) {
    const auto train = folds.train_indices(f);
    const auto test = folds.test_indices(f);
    std::vector<double> a(train.size());
    std::vector<double> b(test.size());
    for (std::size_t c = 0; c < data.cols(); ++c) {
      for (std::size_t i = 0; i < train.size(); ++i) a[i] = data.at(train[i], c);
      for (std::size_t i = 0; i < test.size(); ++i) b[i] = data.at(test[i], c);
      const auto rho = train_test_correlation(a, b);
      entries.push_back({f, data.columns[c], rho.value_or(0.0), !rho.has_value()});
    }
  }
  return entries;
}

double mean_of(const std::vector<CorrelationEntry>& entries) {
  if (entries.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : entries) sum += e.correlation;
  return sum / static_cast<double>(entries.size());
}

}  // namespace

std::string_view to_string(CvMode mode) noexcept {
  return mode == CvMode::random ? "random" : "user_oriented";
}

CvMode parse_cv_mode(std::string_view name) {
  if (name == "random") return CvMode::random;
  if (name == "user" || name == "user_oriented" || name == "user-oriented") return CvMode::user_oriented;
  throw ConfigError("unknown cv mode '" + std::string(name) + "' (expected random or user)");
}

FoldAssignment::FoldAssignment(std::size_t k, CvMode mode, std::uint64_t seed, std::vector<int> fold_of)
    : k_(k), mode_(mode), seed_(seed), fold_of_(std::move(fold_of)) {}

std::vector<std::size_t> FoldAssignment::test_indices(std::size_t f) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of_.size(); ++i) {
    if (static_cast<std::size_t>(fold_of_[i]) == f) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::train_indices(std::size_t f) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of_.size(); ++i) {
    if (static_cast<std::size_t>(fold_of_[i]) != f) out.push_back(i);
  }
  return out;
}

FoldAssignment assign_folds(std::span<const std::string> user_ids, std::size_t k, CvMode mode, std::uint64_t seed) {
  if (k < 2) throw ConfigError("cross-validation needs k >= 2");
  const std::size_t n = user_ids.size();
  std::vector<int> fold_of(n, -1);
  if (mode == CvMode::random) {
    if (n < k) {
      throw ConfigError("too few samples: " + std::to_string(n) + " samples for k=" + std::to_string(k));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(std::span(order));
    for (std::size_t pos = 0; pos < n; ++pos) fold_of[order[pos]] = static_cast<int>(pos % k);
    return FoldAssignment(k, mode, seed, std::move(fold_of));
  }

  std::map<std::string, std::size_t> counts;
  for (const auto& u : user_ids) ++counts[u];
  if (counts.size() < k) {
    throw ConfigError("too few users: " + std::to_string(counts.size()) + " distinct users for k=" +
                      std::to_string(k));
  }
  std::vector<std::pair<std::string, std::size_t>> users(counts.begin(), counts.end());
  std::ranges::stable_sort(users, [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::size_t> load(k, 0);
  std::map<std::string, int> fold_of_user;
  for (const auto& [user, count] : users) {
    const auto smallest = static_cast<std::size_t>(std::ranges::min_element(load) - load.begin());
    load[smallest] += count;
    fold_of_user[user] = static_cast<int>(smallest);
  }
  for (std::size_t i = 0; i < n; ++i) fold_of[i] = fold_of_user.at(user_ids[i]);
  return FoldAssignment(k, mode, seed, std::move(fold_of));
}

double accuracy_by_segment(std::span<const std::string> predicted, std::span<const std::string> truth) {
  if (predicted.size() != truth.size()) throw DomainError("accuracy_by_segment: length mismatch");
  if (truth.empty()) throw DomainError("accuracy_by_segment: empty input");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

double accuracy_by_distance(std::span<const std::string> predicted, std::span<const std::string> truth,
                            std::span<const double> distances_m) {
  if (predicted.size() != truth.size() || distances_m.size() != truth.size()) {
    throw DomainError("accuracy_by_distance: length mismatch");
  }
  double total = 0.0;
  double correct = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!(distances_m[i] >= 0.0)) throw DomainError("accuracy_by_distance: negative distance");
    total += distances_m[i];
    if (predicted[i] == truth[i]) correct += distances_m[i];
  }
  if (!(total > 0.0)) throw DomainError("accuracy_by_distance: all distances are zero");
  return correct / total;
}

TrainedModel ModelConfig::fit(const FeatureMatrix& train) const {
  return kind == ModelKind::tree ? fit_tree(train, tree) : fit_forest(train, forest);
}

nlohmann::json ModelConfig::to_json() const {
  auto tree_json = [](const DecisionTreeConfig& t) {
    nlohmann::json j = {
        {"criterion", "gini"},
        {"min_samples_split", t.min_samples_split},
        {"min_samples_leaf", t.min_samples_leaf},
        {"max_features", t.max_features == MaxFeatures::all ? "all" : "sqrt"},
    };
    j["max_depth"] = t.max_depth ? nlohmann::json(*t.max_depth) : nlohmann::json(nullptr);
    return j;
  };
  if (kind == ModelKind::tree) {
    auto j = tree_json(tree);
    j["kind"] = "tree";
    j["seed"] = tree.rng_seed;
    return j;
  }
  return {{"kind", "forest"},
          {"n_estimators", forest.n_estimators},
          {"bootstrap", forest.bootstrap},
          {"seed", forest.rng_seed},
          {"tree", tree_json(forest.tree)}};
}

nlohmann::json NoiseStep::to_json() const {
  switch (kind) {
    case NoiseKind::none: return {{"kind", "none"}};
    case NoiseKind::ground_truth: {
      nlohmann::json b = nlohmann::json::object();
      for (const auto& [label, sb] : bounds.entries()) b[label] = {sb.lower, sb.upper};
      return {{"kind", "ground_truth"}, {"bounds", b}, {"apply_to_test", apply_to_test}};
    }
    case NoiseKind::dbscan:
      return {{"kind", "dbscan"},
              {"feature", dbscan.feature},
              {"eps", dbscan.eps},
              {"min_pts", dbscan.min_pts},
              {"apply_to_test", apply_to_test}};
  }
  return {};
}

CvScore EvaluationReport::score() const {
  CvScore s;
  s.mean = mean_accuracy;
  for (const auto& f : folds) s.per_fold.push_back(f.accuracy_by_segment);
  return s;
}

nlohmann::json EvaluationReport::to_json() const {
  nlohmann::json jf = nlohmann::json::array();
  for (const auto& f : folds) {
    jf.push_back({
        {"fold", f.fold},
        {"train_size", f.train_size},
        {"test_size", f.test_size},
        {"removed_train", f.removed_train},
        {"removed_test", f.removed_test},
        {"accuracy_by_segment", f.accuracy_by_segment},
        {"accuracy_by_distance", f.accuracy_by_distance ? nlohmann::json(*f.accuracy_by_distance) : nlohmann::json()},
        {"confusion", f.confusion},
    });
  }
  return {
      {"classes", classes},
      {"features", features},
      {"folds", std::move(jf)},
      {"mean_accuracy_by_segment", mean_accuracy},
      {"std_accuracy_by_segment", std_accuracy},
      {"mean_accuracy_by_distance",
       mean_accuracy_by_distance ? nlohmann::json(*mean_accuracy_by_distance) : nlohmann::json()},
      {"std_accuracy_by_distance",
       std_accuracy_by_distance ? nlohmann::json(*std_accuracy_by_distance) : nlohmann::json()},
      {"config", config},
  };
}

void EvaluationReport::write_summary_csv(std::ostream& out) const {
  write_csv_row(out, std::vector<std::string>{"fold", "train_size", "test_size", "removed_train", "removed_test",
                                              "accuracy_by_segment", "accuracy_by_distance"});
  for (const auto& f : folds) {
    write_csv_row(out, std::vector<std::string>{
                           std::to_string(f.fold + 1), std::to_string(f.train_size), std::to_string(f.test_size),
                           std::to_string(f.removed_train), std::to_string(f.removed_test),
                           format_double(f.accuracy_by_segment),
                           f.accuracy_by_distance ? format_double(*f.accuracy_by_distance) : ""});
  }
  write_csv_row(out, std::vector<std::string>{"mean", "", "", "", "", format_double(mean_accuracy),
                                              mean_accuracy_by_distance ? format_double(*mean_accuracy_by_distance)
                                                                        : ""});
  write_csv_row(out, std::vector<std::string>{"std", "", "", "", "", format_double(std_accuracy),
                                              std_accuracy_by_distance ? format_double(*std_accuracy_by_distance)
                                                                       : ""});
}

void EvaluationReport::write_confusion_csv(std::ostream& out) const {
  std::vector<std::string> header = {"fold", "true_label"};
  header.insert(header.end(), classes.begin(), classes.end());
  write_csv_row(out, header);
  for (const auto& f : folds) {
    for (std::size_t t = 0; t < classes.size(); ++t) {
      std::vector<std::string> row = {std::to_string(f.fold + 1), classes[t]};
      for (const auto c : f.confusion[t]) row.push_back(std::to_string(c));
      write_csv_row(out, row);
    }
  }
}

EvaluationReport cross_validate(const FeatureMatrix& data, const ModelConfig& model, const FoldAssignment& folds,
                                const NoiseStep& noise, const std::optional<std::vector<std::string>>& selection) {
  if (folds.size() != data.rows()) throw DomainError("fold assignment does not match the table");
  const FeatureMatrix table = selection ? data.select_columns(*selection) : data;
  // Ground truth always needs raw speed_mean, which selection may have dropped.
  const bool ground_truth = noise.kind == NoiseKind::ground_truth;
  const bool dbscan = noise.kind == NoiseKind::dbscan;
  std::optional<std::size_t> speed_col;
  if (ground_truth) {
    speed_col = data.column_index("speed_mean");
    if (!speed_col) throw SchemaError("missing column 'speed_mean'");
  }

  EvaluationReport report;
  report.features = table.columns;
  report.classes = data.labels;
  std::ranges::sort(report.classes);
  report.classes.erase(std::unique(report.classes.begin(), report.classes.end()), report.classes.end());
  report.config = {{"model", model.to_json()},
                   {"noise", noise.to_json()},
                   {"cv", {{"k", folds.k()}, {"mode", to_string(folds.mode())}, {"seed", folds.seed()}}}};

  const bool with_distance = !data.distances_m.empty();
  std::vector<double> acc;
  std::vector<double> acc_d;
  for (std::size_t f = 0; f < folds.k(); ++f) {
    auto train_idx = folds.train_indices(f);
    auto test_idx = folds.test_indices(f);
    FoldResult fr;
    fr.fold = f;

    auto remove_rows = [&](std::vector<std::size_t>& idx, const FilterOutcome& outcome) {
      std::vector<std::size_t> kept;
      kept.reserve(outcome.kept.size());
      for (const auto k : outcome.kept) kept.push_back(idx[k]);
      const std::size_t removed = idx.size() - kept.size();
      idx = std::move(kept);
      return removed;
    };

    if (ground_truth) {
      const FeatureMatrix speed = data.select_columns(std::vector<std::string>{"speed_mean"});
      fr.removed_train = remove_rows(train_idx, ground_truth_filter(speed.select_rows(train_idx), noise.bounds));
      if (noise.apply_to_test) {
        fr.removed_test = remove_rows(test_idx, ground_truth_filter(speed.select_rows(test_idx), noise.bounds));
      }
    } else if (dbscan) {
      const FeatureMatrix col = data.select_columns(std::vector<std::string>{noise.dbscan.feature});
      const auto scaler = MinMaxScaler::fit(col.select_rows(train_idx));
      const auto scaled_train = scaler.apply(col.select_rows(train_idx));
      fr.removed_train = remove_rows(
          train_idx, dbscan_outlier_filter(scaled_train, noise.dbscan.feature, noise.dbscan.eps, noise.dbscan.min_pts));
      if (noise.apply_to_test) {
        const auto scaled_test = scaler.apply(col.select_rows(test_idx));
        fr.removed_test = remove_rows(test_idx, dbscan_outlier_filter(scaled_test, noise.dbscan.feature,
                                                                      noise.dbscan.eps, noise.dbscan.min_pts));
      }
    }
    if (train_idx.empty()) throw DataError("fold " + std::to_string(f + 1) + ": no training rows left after noise removal");
    if (test_idx.empty()) throw DataError("fold " + std::to_string(f + 1) + ": no test rows left");

    const auto normalized = minmax_normalize(table.select_rows(train_idx), table.select_rows(test_idx));
    const TrainedModel fitted = model.fit(normalized.train);
    const auto predicted = fitted.predict(normalized.applied);
    const auto& truth = normalized.applied.labels;

    fr.train_size = train_idx.size();
    fr.test_size = test_idx.size();
    fr.accuracy_by_segment = accuracy_by_segment(predicted, truth);
    if (with_distance) {
      const auto& d = normalized.applied.distances_m;
      if (std::any_of(d.begin(), d.end(), [](double v) { return v > 0.0; })) {
        fr.accuracy_by_distance = accuracy_by_distance(predicted, truth, d);
      }
    }
    fr.confusion.assign(report.classes.size(), std::vector<std::size_t>(report.classes.size(), 0));
    auto class_index = [&](const std::string& c) {
      return static_cast<std::size_t>(std::ranges::lower_bound(report.classes, c) - report.classes.begin());
    };
    for (std::size_t i = 0; i < truth.size(); ++i) ++fr.confusion[class_index(truth[i])][class_index(predicted[i])];
    acc.push_back(fr.accuracy_by_segment);
    if (fr.accuracy_by_distance) acc_d.push_back(*fr.accuracy_by_distance);
    report.folds.push_back(std::move(fr));
  }
  std::tie(report.mean_accuracy, report.std_accuracy) = mean_and_std(acc);
  if (!acc_d.empty() && acc_d.size() == acc.size()) {
    const auto [m, s] = mean_and_std(acc_d);
    report.mean_accuracy_by_distance = m;
    report.std_accuracy_by_distance = s;
  }
  return report;
}

std::optional<double> train_test_correlation(std::span<const double> train_values,
                                             std::span<const double> test_values, std::size_t grid) {
  if (train_values.empty() || test_values.empty()) throw DomainError("train_test_correlation: empty side");
  if (grid < 2) throw DomainError("train_test_correlation: grid must have >= 2 points");
  const auto a = resample_positions(train_values, grid);
  const auto b = resample_positions(test_values, grid);
  return spearman_correlation(a, b);
}

std::vector<double> CorrelationStudy::random_column() const {
  std::vector<double> out;
  for (const auto& e : random_entries) out.push_back(e.correlation);
  return out;
}

std::vector<double> CorrelationStudy::user_column() const {
  std::vector<double> out;
  for (const auto& e : user_entries) out.push_back(e.correlation);
  return out;
}

nlohmann::json CorrelationStudy::to_json() const {
  auto degenerate = [](const std::vector<CorrelationEntry>& v) {
    return std::ranges::count_if(v, [](const CorrelationEntry& e) { return e.degenerate; });
  };
  return {
      {"random", {{"mean", random_mean}, {"count", random_entries.size()}, {"degenerate", degenerate(random_entries)}}},
      {"user_oriented", {{"mean", user_mean}, {"count", user_entries.size()}, {"degenerate", degenerate(user_entries)}}},
      {"mann_whitney", mann_whitney.to_json()},
      {"grid_points", kCorrelationGrid},
  };
}

void CorrelationStudy::write_csv(std::ostream& out) const {
  write_csv_row(out, std::vector<std::string>{"fold", "feature", "random", "user", "random_degenerate",
                                              "user_degenerate"});
  for (std::size_t i = 0; i < random_entries.size() && i < user_entries.size(); ++i) {
    const auto& r = random_entries[i];
    const auto& u = user_entries[i];
    write_csv_row(out, std::vector<std::string>{std::to_string(r.fold + 1), r.feature, format_double(r.correlation),
                                                format_double(u.correlation), r.degenerate ? "1" : "0",
                                                u.degenerate ? "1" : "0"});
  }
}

CorrelationStudy fold_correlation_study(const FeatureMatrix& data, std::size_t k, std::uint64_t seed) {
  const auto random_folds = assign_folds(data.user_ids, k, CvMode::random, seed);
  const auto user_folds = assign_folds(data.user_ids, k, CvMode::user_oriented, seed);
  CorrelationStudy study;
  study.random_entries = regime_correlations(data, random_folds);
  study.user_entries = regime_correlations(data, user_folds);
  study.random_mean = mean_of(study.random_entries);
  study.user_mean = mean_of(study.user_entries);
  study.mann_whitney = mann_whitney_u(study.random_column(), study.user_column(), Alternative::two_sided);
  return study;
}

}  // namespace trajmode
