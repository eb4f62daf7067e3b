#include "trajmode/select.hpp"

#include <algorithm>
#include <ostream>
#include <set>
#include <thread>

#include "trajmode/errors.hpp"
#include "trajmode/table_io.hpp"

namespace trajmode {

namespace {

void check_pool(std::span<const std::string> features) {
  if (features.empty()) throw DomainError("feature selection needs at least one feature");
  const std::set<std::string> unique(features.begin(), features.end());
  if (unique.size() != features.size()) throw DomainError("feature selection: duplicate feature names");
}

std::size_t best_prefix(const std::vector<SelectionStep>& steps) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < steps.size(); ++i) {
    if (steps[i].cv_mean > steps[best].cv_mean) best = i;
  }
  return steps.empty() ? 0 : best + 1;
}

}  // namespace

std::vector<std::string> SelectionTrace::selected() const {
  std::vector<std::string> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.feature);
  return out;
}

nlohmann::json SelectionTrace::to_json() const {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& s : steps) {
    rounds.push_back({{"feature", s.feature}, {"cv_mean", s.cv_mean}, {"per_fold", s.per_fold}});
  }
  return {{"steps", std::move(rounds)}, {"best_prefix_size", best_prefix_size}};
}

SelectionTrace wrapper_search(std::span<const std::string> features, const SubsetScorer& scorer,
                              const WrapperOptions& options) {
  check_pool(features);
  std::vector<std::string> pool(features.begin(), features.end());
  std::ranges::sort(pool);
  const std::size_t rounds = std::min(pool.size(), options.max_rounds.value_or(pool.size()));

  SelectionTrace trace;
  std::vector<std::string> selected;
  for (std::size_t round = 0; round < rounds; ++round) {
    std::vector<CvScore> scores(pool.size());
    auto score_one = [&](std::size_t i) {
      std::vector<std::string> subset = selected;
      subset.push_back(pool[i]);
      scores[i] = scorer(subset);
    };
    const std::size_t jobs = std::clamp<std::size_t>(options.n_jobs, 1, pool.size());
    if (jobs == 1) {
      for (std::size_t i = 0; i < pool.size(); ++i) score_one(i);
    } else {
      std::vector<std::jthread> workers;
      for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&, w] {
          for (std::size_t i = w; i < pool.size(); i += jobs) score_one(i);
        });
      }
    }
    // Pool is sorted, so strict > keeps the lexicographically smallest on ties.
    std::size_t best = 0;
    for (std::size_t i = 1; i < pool.size(); ++i) {
      if (scores[i].mean > scores[best].mean) best = i;
    }
    trace.steps.push_back({pool[best], scores[best].mean, scores[best].per_fold});
    selected.push_back(pool[best]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(best));
  }
  trace.best_prefix_size = best_prefix(trace.steps);
  return trace;
}

SelectionTrace importance_ranked_selection(std::span<const std::string> features,
                                           const std::map<std::string, double>& importance,
                                           const SubsetScorer& scorer) {
  check_pool(features);
  std::vector<std::string> order(features.begin(), features.end());
  for (const auto& f : order) {
    if (!importance.contains(f)) throw DomainError("no importance for feature '" + f + "'");
  }
  std::ranges::sort(order, [&](const std::string& a, const std::string& b) {
    const double ia = importance.at(a);
    const double ib = importance.at(b);
    if (ia != ib) return ia > ib;
    return a < b;
  });
  SelectionTrace trace;
  std::vector<std::string> prefix;
  for (const auto& f : order) {
    prefix.push_back(f);
    const CvScore s = scorer(prefix);
    trace.steps.push_back({f, s.mean, s.per_fold});
  }
  trace.best_prefix_size = best_prefix(trace.steps);
  return trace;
}

std::vector<std::string> top_k(const SelectionTrace& trace, std::size_t k) {
  if (k < 1 || k > trace.steps.size()) {
    throw DomainError("top_k: k=" + std::to_string(k) + " outside [1, " + std::to_string(trace.steps.size()) + "]");
  }
  auto names = trace.selected();
  names.resize(k);
  return names;
}

void write_trace_csv(std::ostream& out, const SelectionTrace& trace) {
  std::size_t folds = 0;
  for (const auto& s : trace.steps) folds = std::max(folds, s.per_fold.size());
  std::vector<std::string> header = {"round", "feature", "cv_mean"};
  for (std::size_t f = 1; f <= folds; ++f) header.push_back("fold_" + std::to_string(f));
  write_csv_row(out, header);
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = trace.steps[i];
    std::vector<std::string> row = {std::to_string(i + 1), s.feature, format_double(s.cv_mean)};
    for (std::size_t f = 0; f < folds; ++f) row.push_back(f < s.per_fold.size() ? format_double(s.per_fold[f]) : "");
    write_csv_row(out, row);
  }
}

}  // namespace trajmode
