#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "trajmode/errors.hpp"
#include "trajmode/eval.hpp"
#include "trajmode/random.hpp"
#include "trajmode/synthetic.hpp"

using namespace trajmode;

namespace {

std::vector<std::string> users_with_counts(const std::vector<std::pair<std::string, int>>& counts) {
  std::vector<std::string> out;
  for (const auto& [u, c] : counts) out.insert(out.end(), static_cast<std::size_t>(c), u);
  return out;
}

std::vector<std::size_t> fold_sizes(const FoldAssignment& f) {
  std::vector<std::size_t> sizes(f.k(), 0);
  for (int x : f.fold_of()) ++sizes[static_cast<std::size_t>(x)];
  return sizes;
}

ModelConfig tree_model() {
  ModelConfig m;
  m.kind = ModelKind::tree;
  return m;
}

}  // namespace

TEST(AssignFolds, Examples) {
  const auto five = assign_folds(users_with_counts({{"a", 3}, {"b", 3}, {"c", 3}, {"d", 3}, {"e", 3}}), 5,
                                 CvMode::user_oriented, 1);
  std::map<int, std::set<std::string>> per_fold;
  const auto ids = users_with_counts({{"a", 3}, {"b", 3}, {"c", 3}, {"d", 3}, {"e", 3}});
  for (std::size_t i = 0; i < ids.size(); ++i) per_fold[five.fold_of()[i]].insert(ids[i]);
  for (const auto& [f, us] : per_fold) EXPECT_EQ(us.size(), 1u);
  EXPECT_EQ(per_fold.size(), 5u);

  const auto random = assign_folds(std::vector<std::string>(10, "u"), 5, CvMode::random, 1);
  EXPECT_EQ(fold_sizes(random), (std::vector<std::size_t>(5, 2)));

  const auto greedy = assign_folds(users_with_counts({{"a", 8}, {"b", 4}, {"c", 3}, {"d", 3}, {"e", 2}}), 2,
                                   CvMode::user_oriented, 1);
  EXPECT_EQ(fold_sizes(greedy), (std::vector<std::size_t>{10, 10}));
}

TEST(AssignFolds, Errors) {
  EXPECT_THROW((void)assign_folds(std::vector<std::string>(3, "u"), 5, CvMode::random, 1), ConfigError);
  EXPECT_THROW((void)assign_folds(users_with_counts({{"a", 5}, {"b", 5}, {"c", 5}}), 5, CvMode::user_oriented, 1),
               ConfigError);
  EXPECT_THROW((void)assign_folds(std::vector<std::string>(10, "u"), 1, CvMode::random, 1), ConfigError);
  EXPECT_EQ(parse_cv_mode("user"), CvMode::user_oriented);
  EXPECT_THROW((void)parse_cv_mode("grouped"), ConfigError);
}

TEST(AssignFolds, PartitionAndDisjointUsers) {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const std::size_t users = 5 + rng.uniform_index(20);
    std::vector<std::string> ids;
    for (std::size_t u = 0; u < users; ++u) ids.insert(ids.end(), 1 + rng.uniform_index(15), "u" + std::to_string(u));
    rng.shuffle(std::span<std::string>(ids));
    const std::size_t k = 2 + rng.uniform_index(4);

    const auto user = assign_folds(ids, k, CvMode::user_oriented, t);
    std::map<std::string, std::set<int>> folds_of_user;
    for (std::size_t i = 0; i < ids.size(); ++i) folds_of_user[ids[i]].insert(user.fold_of()[i]);
    for (const auto& [u, fs] : folds_of_user) EXPECT_EQ(fs.size(), 1u) << u;

    const auto random = assign_folds(ids, k, CvMode::random, t);
    const auto sizes = fold_sizes(random);
    EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()), 1u);
    std::vector<std::size_t> all;
    for (std::size_t f = 0; f < k; ++f) {
      const auto test = random.test_indices(f);
      const auto train = random.train_indices(f);
      EXPECT_EQ(test.size() + train.size(), ids.size());
      all.insert(all.end(), test.begin(), test.end());
    }
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expect(ids.size());
    std::iota(expect.begin(), expect.end(), 0);
    EXPECT_EQ(all, expect);
  }
}

TEST(Accuracy, BySegment) {
  const std::vector<std::string> t = {"a", "b", "c", "d"};
  EXPECT_EQ(accuracy_by_segment(t, t), 1.0);
  EXPECT_EQ(accuracy_by_segment(std::vector<std::string>{"x", "x", "x", "x"}, t), 0.0);
  EXPECT_EQ(accuracy_by_segment(std::vector<std::string>{"a", "b", "c", "x"}, t), 0.75);
  EXPECT_THROW((void)accuracy_by_segment(std::vector<std::string>{"a"}, t), DomainError);
  EXPECT_THROW((void)accuracy_by_segment(std::vector<std::string>{}, std::vector<std::string>{}), DomainError);
}

TEST(Accuracy, ByDistance) {
  const std::vector<std::string> t = {"a", "b"};
  EXPECT_EQ(accuracy_by_distance(t, t, std::vector<double>{3, 4}), 1.0);
  EXPECT_DOUBLE_EQ(accuracy_by_distance(std::vector<std::string>{"a", "x"}, t, std::vector<double>{90, 10}), 0.9);
  EXPECT_EQ(accuracy_by_distance(std::vector<std::string>{"a", "x"}, t, std::vector<double>{1, 1}), 0.5);
  EXPECT_THROW((void)accuracy_by_distance(t, t, std::vector<double>{0, 0}), DomainError);
  EXPECT_THROW((void)accuracy_by_distance(t, t, std::vector<double>{-1, 2}), DomainError);

  Rng rng(3);
  std::vector<std::string> pred, truth;
  for (int i = 0; i < 50; ++i) {
    truth.push_back(rng.uniform01() < 0.5 ? "a" : "b");
    pred.push_back(rng.uniform01() < 0.5 ? "a" : "b");
  }
  EXPECT_DOUBLE_EQ(accuracy_by_distance(pred, truth, std::vector<double>(50, 7.5)), accuracy_by_segment(pred, truth));
}

TEST(CrossValidate, SeparableDataScoresPerfectly) {
  const auto m = gaussian_blobs(50, 3, 4, 25.0, 5);
  for (CvMode mode : {CvMode::random, CvMode::user_oriented}) {
    const auto folds = assign_folds(m.user_ids, 5, mode, 10);
    const auto report = cross_validate(m, {}, folds);
    EXPECT_EQ(report.mean_accuracy, 1.0);
    std::size_t tested = 0;
    for (const auto& f : report.folds) {
      tested += f.test_size;
      std::size_t row_total = 0;
      for (const auto& row : f.confusion) row_total += std::accumulate(row.begin(), row.end(), std::size_t{0});
      EXPECT_EQ(row_total, f.test_size);
    }
    EXPECT_EQ(tested, m.rows());
  }
}

TEST(CrossValidate, ShuffledLabelsNearChance) {
  double total = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto m = gaussian_blobs(100, 2, 4, 0.0, seed);
    Rng rng(seed + 1000);
    rng.shuffle(std::span<std::string>(m.labels));
    const auto report = cross_validate(m, {}, assign_folds(m.user_ids, 5, CvMode::random, seed));
    EXPECT_NEAR(report.mean_accuracy, 0.5, 0.1) << "seed " << seed;
    total += report.mean_accuracy;
  }
  EXPECT_NEAR(total / 10.0, 0.5, 0.05);
}

TEST(CrossValidate, DeterministicReports) {
  const auto m = gaussian_blobs(30, 3, 5, 1.0, 6);
  const auto folds = assign_folds(m.user_ids, 5, CvMode::random, 10);
  std::ostringstream a, b;
  a << cross_validate(m, {}, folds).to_json().dump();
  b << cross_validate(m, {}, folds).to_json().dump();
  EXPECT_EQ(a.str(), b.str());
}

TEST(CrossValidate, SelectionAndDistanceAndNoise) {
  auto m = gaussian_blobs(40, 2, 4, 10.0, 7);
  m.distances_m.assign(m.rows(), 100.0);
  const auto folds = assign_folds(m.user_ids, 4, CvMode::random, 2);
  const auto report = cross_validate(m, tree_model(), folds, {}, std::vector<std::string>{"f0"});
  EXPECT_EQ(report.features, (std::vector<std::string>{"f0"}));
  ASSERT_TRUE(report.mean_accuracy_by_distance.has_value());
  EXPECT_DOUBLE_EQ(*report.mean_accuracy_by_distance, report.mean_accuracy);
  EXPECT_THROW((void)cross_validate(m, tree_model(), folds, {}, std::vector<std::string>{"nope"}), SchemaError);

  // One extreme row on f0 is the only DBSCAN noise point.
  m.at(0, 0) = 1e6;
  NoiseStep dbscan;
  dbscan.kind = NoiseKind::dbscan;
  dbscan.dbscan = {"f0", 0.2, 3};
  const auto cleaned = cross_validate(m, tree_model(), folds, dbscan);
  std::size_t removed = 0;
  for (const auto& f : cleaned.folds) {
    removed += f.removed_train;
    EXPECT_EQ(f.removed_test, 0u);
  }
  EXPECT_EQ(removed, folds.k() - 1);
}

TEST(CrossValidate, GroundTruthOnlyFiltersTestWhenAcknowledged) {
  FeatureMatrix m;
  m.columns = {"speed_mean"};
  Rng rng(4);
  for (int i = 0; i < 60; ++i) {
    const bool walk = i % 2 == 0;
    m.data.push_back(walk ? 1.0 + rng.uniform01() : 8.0 + rng.uniform01());
    m.labels.push_back(walk ? "walk" : "bus");
    m.user_ids.push_back("u" + std::to_string(i % 6));
  }
  m.data[0] = 30.0;  // a walk row far above its bound
  const auto folds = assign_folds(m.user_ids, 3, CvMode::random, 1);
  NoiseStep gt;
  gt.kind = NoiseKind::ground_truth;
  std::size_t removed_test = 0;
  for (const auto& f : cross_validate(m, tree_model(), folds, gt).folds) removed_test += f.removed_test;
  EXPECT_EQ(removed_test, 0u);
  gt.apply_to_test = true;
  removed_test = 0;
  for (const auto& f : cross_validate(m, tree_model(), folds, gt).folds) removed_test += f.removed_test;
  EXPECT_EQ(removed_test, 1u);
}

TEST(ReportFiles, SummaryAndConfusionLayout) {
  const auto m = gaussian_blobs(20, 2, 3, 20.0, 8);
  const auto report = cross_validate(m, {}, assign_folds(m.user_ids, 5, CvMode::random, 1));
  std::ostringstream summary, confusion;
  report.write_summary_csv(summary);
  report.write_confusion_csv(confusion);
  std::istringstream s(summary.str());
  std::string line;
  std::size_t lines = 0;
  while (std::getline(s, line)) ++lines;
  EXPECT_EQ(lines, 1u + 5u + 2u);
  EXPECT_NE(confusion.str().find("c0"), std::string::npos);
  const auto doc = report.to_json();
  EXPECT_EQ(doc.at("folds").size(), 5u);
}

TEST(TrainTestCorrelation, Examples) {
  Rng rng(9);
  std::vector<double> train(80), mirrored;
  for (auto& x : train) x = rng.normal();
  for (double x : train) mirrored.push_back(-x);
  EXPECT_NEAR(*train_test_correlation(train, train), 1.0, 1e-12);
  EXPECT_NEAR(*train_test_correlation(train, mirrored), -1.0, 1e-12);
  EXPECT_FALSE(train_test_correlation(std::vector<double>(10, 2.0), train).has_value());
}

TEST(FoldCorrelationStudy, UserBiasedDataFavoursRandomFolds) {
  const auto m = user_biased_matrix(20, 15, 10, 2.0, 3);
  const auto study = fold_correlation_study(m, 5, 3);
  EXPECT_EQ(study.random_entries.size(), 5u * 10u);
  EXPECT_EQ(study.user_entries.size(), 5u * 10u);
  EXPECT_GT(study.random_mean, study.user_mean);
  EXPECT_LT(study.mann_whitney.p_value, 0.05);
  std::ostringstream csv;
  study.write_csv(csv);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "fold,feature,random,user,random_degenerate,user_degenerate");
}

TEST(FoldCorrelationStudy, ConstantFeatureIsFlagged) {
  auto m = user_biased_matrix(10, 6, 2, 1.0, 1);
  for (std::size_t r = 0; r < m.rows(); ++r) m.at(r, 1) = 4.0;
  const auto study = fold_correlation_study(m, 5, 1);
  for (const auto& e : study.random_entries) {
    if (e.feature == m.columns[1]) {
      EXPECT_TRUE(e.degenerate);
      EXPECT_EQ(e.correlation, 0.0);
    }
  }
}
