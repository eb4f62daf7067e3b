#include "trajmode/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "trajmode/errors.hpp"

namespace trajmode {

namespace {

double clamp_p(double p) { return std::clamp(p, 0.0, 1.0); }

// Sum over tie groups of t^3 - t.
double tie_term(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::ranges::sort(sorted);
  double term = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    term += t * t * t - t;
    i = j;
  }
  return term;
}

// Continuity-corrected normal p-value of a statistic with mean mu and sd sigma.
double normal_p(double stat, double mu, double sigma, Alternative alt) {
  if (!(sigma > 0.0)) return 1.0;
  switch (alt) {
    case Alternative::two_sided: {
      const double z = (std::abs(stat - mu) - 0.5) / sigma;
      return clamp_p(2.0 * normal_sf(z));
    }
    case Alternative::less:
      return clamp_p(normal_cdf((stat - mu + 0.5) / sigma));
    case Alternative::greater:
      return clamp_p(normal_sf((stat - mu - 0.5) / sigma));
  }
  return 1.0;
}

// p-value from an exact null distribution given as (count <= obs, count >= obs, total).
double exact_p(double le, double ge, double total, Alternative alt) {
  switch (alt) {
    case Alternative::two_sided: return clamp_p(2.0 * std::min(le, ge) / total);
    case Alternative::less: return clamp_p(le / total);
    case Alternative::greater: return clamp_p(ge / total);
  }
  return 1.0;
}

void check_finite(std::span<const double> v, const char* what) {
  for (const double x : v) {
    if (!std::isfinite(x)) throw DomainError(std::string(what) + ": non-finite value");
  }
}

double gamma_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 10'000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-17) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized gamma Q(a, x) by modified Lentz continued fraction.
double gamma_continued_fraction(double a, double x) {
  constexpr double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10'000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-17) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

nlohmann::json TestResult::to_json() const {
  return {
      {"method", to_string(method)},   {"statistic", statistic}, {"p_value", p_value},
      {"alternative", to_string(alternative)}, {"exact", exact}, {"degenerate", degenerate},
  };
}

std::string_view to_string(Alternative a) noexcept {
  switch (a) {
    case Alternative::two_sided: return "two-sided";
    case Alternative::less: return "less";
    case Alternative::greater: return "greater";
  }
  return "two-sided";
}

std::string_view to_string(TestMethod m) noexcept {
  switch (m) {
    case TestMethod::mann_whitney_u: return "mann_whitney_u";
    case TestMethod::wilcoxon_signed_rank: return "wilcoxon_signed_rank";
    case TestMethod::wilcoxon_rank_sum: return "wilcoxon_rank_sum";
    case TestMethod::kruskal_wallis: return "kruskal_wallis";
    case TestMethod::ks_one_sample: return "ks_one_sample";
  }
  return "unknown";
}

Alternative parse_alternative(std::string_view name) {
  if (name == "two-sided" || name == "two_sided") return Alternative::two_sided;
  if (name == "less") return Alternative::less;
  if (name == "greater") return Alternative::greater;
  throw ConfigError("unknown alternative '" + std::string(name) + "'");
}

std::vector<double> rank_with_ties(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 hold ranks i+1..j; their mean is (i + 1 + j) / 2.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_sf(double z) noexcept { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw DomainError("regularized_gamma_p: a must be > 0");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return std::clamp(gamma_series(a, x), 0.0, 1.0);
  return std::clamp(1.0 - gamma_continued_fraction(a, x), 0.0, 1.0);
}

double chi_square_cdf(double x, double dof) { return regularized_gamma_p(dof / 2.0, x / 2.0); }

double chi_square_sf(double x, double dof) {
  if (!(dof > 0.0)) throw DomainError("chi_square_sf: dof must be > 0");
  if (x <= 0.0) return 1.0;
  const double a = dof / 2.0;
  const double h = x / 2.0;
  // Use the continued fraction directly in the upper tail to keep precision.
  if (h < a + 1.0) return std::clamp(1.0 - gamma_series(a, h), 0.0, 1.0);
  return std::clamp(gamma_continued_fraction(a, h), 0.0, 1.0);
}

double kolmogorov_sf(double lambda) noexcept {
  constexpr int kTerms = 100;
  if (!(lambda > 0.0)) return 1.0;
  if (lambda < 1.0) {
    // Jacobi theta form of the same distribution; converges fast for small lambda.
    const double factor = std::sqrt(2.0 * std::numbers::pi) / lambda;
    const double w = std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double cdf = 0.0;
    for (int k = 1; k <= kTerms; ++k) {
      const double odd = 2.0 * k - 1.0;
      cdf += std::exp(-odd * odd * w);
    }
    return clamp_p(1.0 - factor * cdf);
  }
  double sum = 0.0;
  for (int k = 1; k <= kTerms; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
  }
  return clamp_p(2.0 * sum);
}

TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y, Alternative alternative,
                          PValueMethod method) {
  if (x.empty() || y.empty()) throw DomainError("mann_whitney_u: both samples must be non-empty");
  check_finite(x, "mann_whitney_u");
  check_finite(y, "mann_whitney_u");
  const std::size_t nx = x.size();
  const std::size_t ny = y.size();
  const std::size_t n = nx + ny;
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto ranks = rank_with_ties(pooled);
  const double r_x = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(nx), 0.0);
  const double offset = static_cast<double>(nx) * static_cast<double>(nx + 1) / 2.0;
  const double u = r_x - offset;
  const double ties = tie_term(pooled);

  TestResult res;
  res.statistic = u;
  res.method = TestMethod::mann_whitney_u;
  res.alternative = alternative;

  const bool use_exact = method == PValueMethod::exact ||
                         (method == PValueMethod::automatic && n <= kExactLimit && ties == 0.0);
  if (use_exact) {
    if (n > 20) throw ConfigError("mann_whitney_u: exact enumeration limited to 20 pooled values");
    // Every size-nx subset of pooled ranks is equally likely under the null.
    double le = 0.0;
    double ge = 0.0;
    double total = 0.0;
    const std::uint32_t limit = 1U << n;
    for (std::uint32_t mask = 0; mask < limit; ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != nx) continue;
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (1U << i)) sum += ranks[i];
      }
      const double uu = sum - offset;
      total += 1.0;
      if (uu <= u) le += 1.0;
      if (uu >= u) ge += 1.0;
    }
    res.p_value = exact_p(le, ge, total, alternative);
    res.exact = true;
    return res;
  }

  const double dnx = static_cast<double>(nx);
  const double dny = static_cast<double>(ny);
  const double dn = static_cast<double>(n);
  const double mu = dnx * dny / 2.0;
  const double var = dnx * dny / 12.0 * ((dn + 1.0) - ties / (dn * (dn - 1.0)));
  res.degenerate = !(var > 0.0);
  res.p_value = normal_p(u, mu, std::sqrt(std::max(var, 0.0)), alternative);
  return res;
}

TestResult wilcoxon_signed_rank(std::span<const double> diffs, Alternative alternative, PValueMethod method) {
  check_finite(diffs, "wilcoxon_signed_rank");
  std::vector<double> nonzero;
  for (const double d : diffs) {
    if (d != 0.0) nonzero.push_back(d);
  }
  TestResult res;
  res.method = TestMethod::wilcoxon_signed_rank;
  res.alternative = alternative;
  if (nonzero.empty()) {
    res.degenerate = true;
    res.p_value = 1.0;
    return res;
  }
  const std::size_t n = nonzero.size();
  std::vector<double> magnitudes(n);
  std::ranges::transform(nonzero, magnitudes.begin(), [](double d) { return std::abs(d); });
  const auto ranks = rank_with_ties(magnitudes);
  double w_plus = 0.0;
  double w_minus = 0.0;
  for (std::size_t i = 0; i < n; ++i) (nonzero[i] > 0.0 ? w_plus : w_minus) += ranks[i];
  res.statistic = alternative == Alternative::two_sided ? std::min(w_plus, w_minus) : w_plus;
  const double ties = tie_term(magnitudes);

  const bool use_exact = method == PValueMethod::exact || (method == PValueMethod::automatic && n <= kExactLimit);
  if (use_exact) {
    if (n > 24) throw ConfigError("wilcoxon_signed_rank: exact enumeration limited to 24 differences");
    double le = 0.0;
    double ge = 0.0;
    const std::uint32_t limit = 1U << n;
    for (std::uint32_t mask = 0; mask < limit; ++mask) {
      double w = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (1U << i)) w += ranks[i];
      }
      if (w <= w_plus) le += 1.0;
      if (w >= w_plus) ge += 1.0;
    }
    res.p_value = exact_p(le, ge, static_cast<double>(limit), alternative);
    res.exact = true;
    return res;
  }
  const double dn = static_cast<double>(n);
  const double mu = dn * (dn + 1.0) / 4.0;
  const double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 - ties / 48.0;
  res.p_value = normal_p(w_plus, mu, std::sqrt(std::max(var, 0.0)), alternative);
  return res;
}

TestResult wilcoxon_signed_rank(std::span<const double> sample, double mu, Alternative alternative,
                                PValueMethod method) {
  std::vector<double> diffs(sample.size());
  std::ranges::transform(sample, diffs.begin(), [mu](double v) { return v - mu; });
  return wilcoxon_signed_rank(diffs, alternative, method);
}

TestResult wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y, Alternative alternative) {
  if (x.empty() || y.empty()) throw DomainError("wilcoxon_rank_sum: both samples must be non-empty");
  check_finite(x, "wilcoxon_rank_sum");
  check_finite(y, "wilcoxon_rank_sum");
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto ranks = rank_with_ties(pooled);
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  const double n = nx + ny;
  const double r_x = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(x.size()), 0.0);
  const double expected = nx * (n + 1.0) / 2.0;
  const double var = nx * ny / 12.0 * ((n + 1.0) - tie_term(pooled) / (n * (n - 1.0)));

  TestResult res;
  res.method = TestMethod::wilcoxon_rank_sum;
  res.alternative = alternative;
  if (!(var > 0.0)) {
    res.degenerate = true;
    res.p_value = 1.0;
    return res;
  }
  const double sigma = std::sqrt(var);
  const double d = r_x - expected;
  const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
  res.statistic = sign * std::max(std::abs(d) - 0.5, 0.0) / sigma;
  res.p_value = normal_p(r_x, expected, sigma, alternative);
  return res;
}

TestResult kruskal_wallis(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw DomainError("kruskal_wallis: need at least 2 groups");
  std::vector<double> pooled;
  for (const auto& g : groups) {
    if (g.empty()) throw DomainError("kruskal_wallis: empty group");
    check_finite(g, "kruskal_wallis");
    pooled.insert(pooled.end(), g.begin(), g.end());
  }
  const double n = static_cast<double>(pooled.size());
  if (pooled.size() < 3) throw DomainError("kruskal_wallis: need at least 3 values in total");
  const auto ranks = rank_with_ties(pooled);

  TestResult res;
  res.method = TestMethod::kruskal_wallis;
  const double correction = 1.0 - tie_term(pooled) / (n * n * n - n);
  if (!(correction > 0.0)) {
    res.degenerate = true;
    res.statistic = 0.0;
    res.p_value = 1.0;
    return res;
  }
  double sum = 0.0;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    const double r = std::accumulate(ranks.begin() + static_cast<std::ptrdiff_t>(offset),
                                     ranks.begin() + static_cast<std::ptrdiff_t>(offset + g.size()), 0.0);
    sum += r * r / static_cast<double>(g.size());
    offset += g.size();
  }
  const double h = (12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0)) / correction;
  res.statistic = std::max(h, 0.0);
  res.p_value = chi_square_sf(res.statistic, static_cast<double>(groups.size() - 1));
  return res;
}

TestResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw DomainError("ks_one_sample: empty sample");
  check_finite(sample, "ks_one_sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::ranges::sort(sorted);
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    // Step over tied values so F_n jumps once per distinct value.
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double f = cdf(sorted[i]);
    const double below = static_cast<double>(i) / n;
    const double at = static_cast<double>(j) / n;
    d = std::max({d, std::abs(at - f), std::abs(f - below)});
    i = j;
  }
  TestResult res;
  res.method = TestMethod::ks_one_sample;
  res.statistic = d;
  res.p_value = kolmogorov_sf(std::sqrt(n) * d);
  return res;
}

std::optional<double> spearman_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("spearman_correlation: length mismatch");
  if (x.size() < 2) return std::nullopt;
  const auto rx = rank_with_ties(x);
  const auto ry = rank_with_ties(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double a = rx[i] - mean;
    const double b = ry[i] - mean;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace trajmode
