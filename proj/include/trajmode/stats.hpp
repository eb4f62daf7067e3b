#pragma once

// Nonparametric tests: Mann-Whitney U, Wilcoxon signed-rank and rank-sum,
// Kruskal-Wallis, one-sample Kolmogorov-Smirnov. Plus the distribution
// helpers they need.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace trajmode {

enum class Alternative { two_sided, less, greater };

enum class TestMethod { mann_whitney_u, wilcoxon_signed_rank, wilcoxon_rank_sum, kruskal_wallis, ks_one_sample };

/// How to obtain a p-value for tests that have both an exact and an
/// asymptotic route. `automatic` enumerates when the sample is small
/// (n <= kExactLimit) and tie-free.
enum class PValueMethod { automatic, exact, asymptotic };

inline constexpr std::size_t kExactLimit = 12;

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  TestMethod method = TestMethod::mann_whitney_u;
  Alternative alternative = Alternative::two_sided;
  bool exact = false;
  /// Set when the test had no information (all differences zero, all values tied).
  bool degenerate = false;

  [[nodiscard]] nlohmann::json to_json() const;
};

[[nodiscard]] std::string_view to_string(Alternative a) noexcept;
[[nodiscard]] std::string_view to_string(TestMethod m) noexcept;
/// Throws ConfigError for unknown names.
[[nodiscard]] Alternative parse_alternative(std::string_view name);

/// 1-based ranks; ties share the mean of their rank span.
[[nodiscard]] std::vector<double> rank_with_ties(std::span<const double> values);

[[nodiscard]] double normal_cdf(double z) noexcept;
[[nodiscard]] double normal_sf(double z) noexcept;
/// Regularized lower incomplete gamma P(a, x) (series below a+1, continued fraction above).
[[nodiscard]] double regularized_gamma_p(double a, double x);
[[nodiscard]] double chi_square_cdf(double x, double dof);
[[nodiscard]] double chi_square_sf(double x, double dof);
/// Survival function of the Kolmogorov distribution, Q(lambda) = P(K > lambda).
[[nodiscard]] double kolmogorov_sf(double lambda) noexcept;

/// U statistic of x (R_x - n_x(n_x+1)/2). Exact by enumeration when
/// n_x + n_y <= 12 without ties; otherwise normal approximation with tie and
/// continuity correction. Throws DomainError if either sample is empty.
[[nodiscard]] TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y,
                                        Alternative alternative = Alternative::two_sided,
                                        PValueMethod method = PValueMethod::automatic);

/// Signed-rank test on paired differences. Zero differences are dropped
/// before ranking; if nothing remains the result is degenerate with p = 1.
/// Two-sided statistic is min(W+, W-); one-sided statistic is W+. Exact by
/// enumerating the 2^n sign patterns when n <= 12.
[[nodiscard]] TestResult wilcoxon_signed_rank(std::span<const double> diffs,
                                              Alternative alternative = Alternative::two_sided,
                                              PValueMethod method = PValueMethod::automatic);
/// One-sample form: differences sample[i] - mu.
[[nodiscard]] TestResult wilcoxon_signed_rank(std::span<const double> sample, double mu,
                                              Alternative alternative = Alternative::two_sided,
                                              PValueMethod method = PValueMethod::automatic);

/// Rank-sum z statistic of x. Uses the same tie and continuity correction as
/// the asymptotic Mann-Whitney route, so both agree on p.
[[nodiscard]] TestResult wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y,
                                           Alternative alternative = Alternative::two_sided);

/// Tie-corrected H with a chi-square(g - 1) p-value. Throws DomainError for
/// fewer than 2 groups, an empty group, or fewer than 3 values in total.
[[nodiscard]] TestResult kruskal_wallis(std::span<const std::vector<double>> groups);

/// D = sup |F_n - F| with the asymptotic Kolmogorov p-value at sqrt(n) * D.
[[nodiscard]] TestResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf);

/// Pearson correlation of tie-averaged ranks; nullopt when either side is constant.
[[nodiscard]] std::optional<double> spearman_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace trajmode
