#pragma once

// Wrapper forward selection and importance-ranked incremental selection,
// both scored by a caller-supplied cross-validation closure.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace trajmode {

struct CvScore {
  double mean = 0.0;
  std::vector<double> per_fold;
};

/// Scores a feature subset (given in selection order). Must be deterministic
/// and, when used with n_jobs > 1, safe to call concurrently.
using SubsetScorer = std::function<CvScore(std::span<const std::string> features)>;

struct SelectionStep {
  std::string feature;
  double cv_mean = 0.0;
  std::vector<double> per_fold;
};

struct SelectionTrace {
  std::vector<SelectionStep> steps;
  /// Prefix length with the highest cv_mean; ties favour the shorter prefix.
  std::size_t best_prefix_size = 0;

  [[nodiscard]] std::vector<std::string> selected() const;
  [[nodiscard]] nlohmann::json to_json() const;
};

struct WrapperOptions {
  /// Stop after this many rounds instead of exhausting the pool.
  std::optional<std::size_t> max_rounds;
  std::size_t n_jobs = 1;
};

/// Greedy forward search: each round scores selected + {f} for every
/// remaining f, appends the best (ties: lexicographically smallest name), and
/// repeats until the pool is empty. Throws DomainError on an empty pool or
/// duplicate names.
[[nodiscard]] SelectionTrace wrapper_search(std::span<const std::string> features, const SubsetScorer& scorer,
                                            const WrapperOptions& options = {});

/// Appends features in descending importance (ties: name order) and scores
/// every prefix. Throws DomainError if a feature has no importance.
[[nodiscard]] SelectionTrace importance_ranked_selection(std::span<const std::string> features,
                                                         const std::map<std::string, double>& importance,
                                                         const SubsetScorer& scorer);

/// First k selected names. Throws DomainError unless 1 <= k <= trace length.
[[nodiscard]] std::vector<std::string> top_k(const SelectionTrace& trace, std::size_t k);

/// Columns: round,feature,cv_mean,fold_1..fold_k.
void write_trace_csv(std::ostream& out, const SelectionTrace& trace);

}  // namespace trajmode
