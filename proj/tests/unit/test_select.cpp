#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "trajmode/errors.hpp"
#include "trajmode/eval.hpp"
#include "trajmode/select.hpp"
#include "trajmode/synthetic.hpp"

using namespace trajmode;

namespace {

/// Scores a subset by a fixed per-feature value plus a small size penalty.
SubsetScorer additive(std::map<std::string, double> value) {
  return [value](std::span<const std::string> fs) {
    double s = 0;
    for (const auto& f : fs) s += value.at(f);
    s /= static_cast<double>(fs.size());
    return CvScore{s, {s, s}};
  };
}

SubsetScorer cv_scorer(const FeatureMatrix& m, const FoldAssignment& folds) {
  ModelConfig model;
  model.kind = ModelKind::tree;
  return [&m, &folds, model](std::span<const std::string> fs) {
    return cross_validate(m, model, folds, {}, std::vector<std::string>(fs.begin(), fs.end())).score();
  };
}

}  // namespace

TEST(Wrapper, PicksInformativeFeatureFirst) {
  const std::vector<std::string> fs = {"f0", "f1", "f2"};
  const auto trace = wrapper_search(fs, additive({{"f0", 0.9}, {"f1", 0.5}, {"f2", 0.5}}));
  ASSERT_EQ(trace.steps.size(), 3u);
  EXPECT_EQ(trace.steps[0].feature, "f0");
  EXPECT_DOUBLE_EQ(trace.steps[0].cv_mean, 0.9);
  EXPECT_EQ(trace.best_prefix_size, 1u);
  EXPECT_EQ(trace.selected(), (std::vector<std::string>{"f0", "f1", "f2"}));
}

TEST(Wrapper, SingleFeatureAndLexicographicTies) {
  const std::vector<std::string> one = {"only"};
  EXPECT_EQ(wrapper_search(one, additive({{"only", 0.3}})).steps.size(), 1u);

  const std::vector<std::string> fs = {"c", "a", "b"};
  const SubsetScorer constant = [](std::span<const std::string>) { return CvScore{0.5, {0.5}}; };
  const auto trace = wrapper_search(fs, constant);
  EXPECT_EQ(trace.selected(), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(trace.best_prefix_size, 1u);
}

TEST(Wrapper, RejectsEmptyOrDuplicatePool) {
  const SubsetScorer constant = [](std::span<const std::string>) { return CvScore{0.5, {0.5}}; };
  EXPECT_THROW((void)wrapper_search(std::vector<std::string>{}, constant), DomainError);
  EXPECT_THROW((void)wrapper_search(std::vector<std::string>{"a", "a"}, constant), DomainError);
}

TEST(Wrapper, MaxRoundsAndParallelAgree) {
  const auto m = signal_noise_matrix(200, 3);
  const auto folds = assign_folds(m.user_ids, 5, CvMode::random, 3);
  const auto scorer = cv_scorer(m, folds);
  const auto serial = wrapper_search(m.columns, scorer, {2, 1});
  const auto parallel = wrapper_search(m.columns, scorer, {2, 4});
  ASSERT_EQ(serial.steps.size(), 2u);
  ASSERT_EQ(parallel.steps.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(serial.steps[i].feature, parallel.steps[i].feature);
    EXPECT_EQ(serial.steps[i].per_fold, parallel.steps[i].per_fold);
  }
}

TEST(Wrapper, EachRoundIsTheBestCandidate) {
  // Exhaustive re-scoring on tiny instances.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto m = signal_noise_matrix(120, seed);
    const std::vector<std::string> cols = {"x0", "x1", "n0", "n1", "n2"};
    m = m.select_columns(cols);
    const auto folds = assign_folds(m.user_ids, 3, CvMode::random, seed);
    const auto scorer = cv_scorer(m, folds);
    const auto trace = wrapper_search(m.columns, scorer);
    ASSERT_EQ(trace.steps.size(), cols.size());
    std::vector<std::string> chosen;
    std::set<std::string> seen;
    for (const auto& step : trace.steps) {
      EXPECT_TRUE(seen.insert(step.feature).second);
      for (const auto& f : cols) {
        if (seen.count(f) && f != step.feature) continue;
        if (f == step.feature) continue;
        auto candidate = chosen;
        candidate.push_back(f);
        EXPECT_GE(step.cv_mean, scorer(candidate).mean) << "seed " << seed << " candidate " << f;
      }
      chosen.push_back(step.feature);
      EXPECT_EQ(scorer(chosen).mean, step.cv_mean);
    }
  }
}

TEST(Importance, OrderAndTies) {
  std::vector<std::string> evaluated;
  const SubsetScorer record = [&evaluated](std::span<const std::string> fs) {
    std::string joined;
    for (const auto& f : fs) joined += f;
    evaluated.push_back(joined);
    return CvScore{static_cast<double>(fs.size()), {}};
  };
  const std::vector<std::string> fs = {"c", "b", "a"};
  (void)importance_ranked_selection(fs, {{"a", 0.5}, {"b", 0.3}, {"c", 0.2}}, record);
  EXPECT_EQ(evaluated, (std::vector<std::string>{"a", "ab", "abc"}));

  const auto tied = importance_ranked_selection(fs, {{"a", 0.1}, {"b", 0.1}, {"c", 0.1}}, record);
  EXPECT_EQ(tied.selected(), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(tied.best_prefix_size, 3u);

  EXPECT_THROW((void)importance_ranked_selection(fs, {{"a", 0.1}}, record), DomainError);
}

TEST(Importance, BestPrefixDropsNoise) {
  const auto m = signal_noise_matrix(400, 17);
  const auto folds = assign_folds(m.user_ids, 5, CvMode::random, 17);
  const auto importance = fit_forest(m, {}).importance_map();
  const auto trace = importance_ranked_selection(m.columns, importance, cv_scorer(m, folds));
  EXPECT_LT(trace.best_prefix_size, m.cols());
  const auto best = top_k(trace, trace.best_prefix_size);
  for (const char* s : {"x0", "x1", "x2"}) EXPECT_NE(std::find(best.begin(), best.end(), s), best.end()) << s;
}

TEST(TopK, Bounds) {
  const std::vector<std::string> fs = {"a", "b", "c"};
  const auto trace = wrapper_search(fs, additive({{"a", 0.1}, {"b", 0.2}, {"c", 0.3}}));
  EXPECT_EQ(top_k(trace, 3), trace.selected());
  EXPECT_EQ(top_k(trace, 1), (std::vector<std::string>{"c"}));
  EXPECT_THROW((void)top_k(trace, 0), DomainError);
  EXPECT_THROW((void)top_k(trace, 4), DomainError);
}

TEST(TraceCsv, Layout) {
  SelectionTrace t;
  t.steps = {{"a", 0.5, {0.4, 0.6}}, {"b", 0.75, {0.5, 1.0}}};
  t.best_prefix_size = 2;
  std::ostringstream out;
  write_trace_csv(out, t);
  EXPECT_EQ(out.str(), "round,feature,cv_mean,fold_1,fold_2\n1,a,0.5,0.4,0.6\n2,b,0.75,0.5,1\n");
}
