#include "trajmode/traj_features.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "trajmode/table_io.hpp"

namespace trajmode {

namespace {

constexpr std::array<Statistic, kStatisticCount> kStatistics = {
    Statistic::min, Statistic::max, Statistic::mean, Statistic::median, Statistic::std,
    Statistic::p10, Statistic::p25, Statistic::p50,  Statistic::p75,    Statistic::p90,
};

// Neumaier-compensated sum.
double compensated_sum(std::span<const double> xs) {
  double sum = 0.0;
  double c = 0.0;
  for (const double x : xs) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      c += (sum - t) + x;
    } else {
      c += (x - t) + sum;
    }
    sum = t;
  }
  return sum + c;
}

}  // namespace

std::string_view to_string(Statistic s) noexcept {
  switch (s) {
    case Statistic::min: return "min";
    case Statistic::max: return "max";
    case Statistic::mean: return "mean";
    case Statistic::median: return "median";
    case Statistic::std: return "std";
    case Statistic::p10: return "p10";
    case Statistic::p25: return "p25";
    case Statistic::p50: return "p50";
    case Statistic::p75: return "p75";
    case Statistic::p90: return "p90";
  }
  return "unknown";
}

double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DomainError("percentile of empty series");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto k = static_cast<std::size_t>(std::floor(pos));
  if (k + 1 >= sorted.size()) return sorted.back();
  const double f = pos - static_cast<double>(k);
  const double lo = sorted[k];
  const double hi = sorted[k + 1];
  return std::clamp(lo + f * (hi - lo), lo, hi);
}

Summary summarize(std::span<const double> series) {
  if (series.empty()) throw DomainError("summarize: empty series");
  std::vector<double> sorted(series.begin(), series.end());
  std::ranges::sort(sorted);
  const double n = static_cast<double>(sorted.size());
  const double lo = sorted.front();
  const double hi = sorted.back();

  double mean = lo;
  double sd = 0.0;
  if (lo != hi) {
    mean = std::clamp(compensated_sum(series) / n, lo, hi);
    std::vector<double> sq(series.size());
    std::ranges::transform(series, sq.begin(), [mean](double x) { return (x - mean) * (x - mean); });
    sd = std::sqrt(compensated_sum(sq) / n);
  }

  Summary s;
  auto set = [&s](Statistic st, double v) { s.values[static_cast<std::size_t>(st)] = v; };
  set(Statistic::min, lo);
  set(Statistic::max, hi);
  set(Statistic::mean, mean);
  set(Statistic::std, sd);
  // Textbook median, so it is exact rather than interpolated to within an ulp.
  const std::size_t mid = sorted.size() / 2;
  const double median = sorted.size() % 2 == 1 ? sorted[mid] : std::midpoint(sorted[mid - 1], sorted[mid]);
  set(Statistic::median, median);
  set(Statistic::p50, median);
  set(Statistic::p10, percentile_sorted(sorted, 0.10));
  set(Statistic::p25, percentile_sorted(sorted, 0.25));
  set(Statistic::p75, percentile_sorted(sorted, 0.75));
  set(Statistic::p90, percentile_sorted(sorted, 0.90));
  return s;
}

std::string feature_name(PointFeature f, Statistic s) {
  std::string name(to_string(f));
  name += '_';
  name += to_string(s);
  return name;
}

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    out.reserve(kTrajectoryFeatureCount);
    for (const auto f : kPointFeatures) {
      for (const auto s : kStatistics) out.push_back(feature_name(f, s));
    }
    return out;
  }();
  return names;
}

double FeatureVector::value(std::string_view name) const {
  const auto& names = feature_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return values[i];
  }
  throw DomainError("unknown feature '" + std::string(name) + "'");
}

FeatureVector build_feature_vector(const Segment& segment, std::string segment_ref, BearingDiff diff) {
  FeatureVector fv;
  fv.segment_ref = std::move(segment_ref);
  fv.user_id = segment.user_id;
  fv.label = segment.label;
  fv.length_m = segment.length_m();
  const auto series = compute_point_features(segment.points, diff);
  for (std::size_t f = 0; f < kPointFeatureCount; ++f) {
    const Summary s = summarize(series[f].values);
    std::ranges::copy(s.values, fv.values.begin() + static_cast<std::ptrdiff_t>(f * kStatisticCount));
  }
  return fv;
}

// --- FeatureMatrix -----------------------------------------------------------

std::optional<std::size_t> FeatureMatrix::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  return std::nullopt;
}

std::vector<double> FeatureMatrix::column(std::size_t c) const {
  std::vector<double> out(rows());
  for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, c);
  return out;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
  FeatureMatrix out;
  out.columns = columns;
  out.data.reserve(indices.size() * cols());
  for (const std::size_t r : indices) {
    const auto src = row(r);
    out.data.insert(out.data.end(), src.begin(), src.end());
    out.labels.push_back(labels[r]);
    out.user_ids.push_back(user_ids[r]);
    if (!distances_m.empty()) out.distances_m.push_back(distances_m[r]);
    if (!folds.empty()) out.folds.push_back(folds[r]);
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::string> names) const {
  std::vector<std::size_t> idx;
  idx.reserve(names.size());
  for (const auto& name : names) {
    const auto c = column_index(name);
    if (!c) throw SchemaError("missing column '" + name + "'");
    idx.push_back(*c);
  }
  FeatureMatrix out;
  out.columns.assign(names.begin(), names.end());
  out.labels = labels;
  out.user_ids = user_ids;
  out.distances_m = distances_m;
  out.folds = folds;
  out.data.reserve(rows() * idx.size());
  for (std::size_t r = 0; r < rows(); ++r) {
    for (const std::size_t c : idx) out.data.push_back(at(r, c));
  }
  return out;
}

FeatureMatrix to_matrix(std::span<const FeatureVector> vectors) {
  FeatureMatrix m;
  m.columns = feature_names();
  m.data.reserve(vectors.size() * kTrajectoryFeatureCount);
  for (const auto& v : vectors) {
    m.data.insert(m.data.end(), v.values.begin(), v.values.end());
    m.labels.push_back(v.label);
    m.user_ids.push_back(v.user_id);
    m.distances_m.push_back(v.length_m);
  }
  return m;
}

void write_feature_matrix(std::ostream& out, const FeatureMatrix& m, std::span<const std::string> extra_header,
                          std::span<const std::vector<std::string>> extra_columns) {
  std::vector<std::string> header = m.columns;
  header.emplace_back("user_id");
  header.emplace_back("label");
  if (!m.distances_m.empty()) header.emplace_back("distance_m");
  if (!m.folds.empty()) header.emplace_back("fold");
  header.insert(header.end(), extra_header.begin(), extra_header.end());
  write_csv_row(out, header);

  std::vector<std::string> fields;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    fields.clear();
    for (const double v : m.row(r)) fields.push_back(format_double(v));
    fields.push_back(m.user_ids[r]);
    fields.push_back(m.labels[r]);
    if (!m.distances_m.empty()) fields.push_back(format_double(m.distances_m[r]));
    if (!m.folds.empty()) fields.push_back(std::to_string(m.folds[r]));
    for (const auto& col : extra_columns) fields.push_back(col[r]);
    write_csv_row(out, fields);
  }
}

FeatureMatrix read_feature_matrix(std::istream& in, bool require_canonical) {
  const CsvTable table = read_csv(in);
  const auto user_col = table.column("user_id");
  const auto label_col = table.column("label");
  if (!user_col) throw SchemaError("missing column 'user_id'");
  if (!label_col) throw SchemaError("missing column 'label'");
  if (require_canonical) {
    for (const auto& name : feature_names()) {
      if (!table.column(name)) throw SchemaError("missing column '" + name + "'");
    }
  }
  const auto dist_col = table.column("distance_m");
  const auto fold_col = table.column("fold");
  static const std::unordered_set<std::string> kTextColumns = {"removal_reason", "segment_ref"};

  FeatureMatrix m;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == *user_col || c == *label_col || c == dist_col || c == fold_col) continue;
    if (kTextColumns.contains(table.header[c])) continue;
    feature_cols.push_back(c);
    m.columns.push_back(table.header[c]);
  }
  m.data.reserve(table.rows.size() * feature_cols.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    for (const std::size_t c : feature_cols) {
      const auto v = parse_double(row[c]);
      if (!v || !std::isfinite(*v)) {
        throw DataError("row " + std::to_string(r + 1) + ", column '" + table.header[c] + "': not a finite number");
      }
      m.data.push_back(*v);
    }
    m.user_ids.push_back(row[*user_col]);
    m.labels.push_back(row[*label_col]);
    if (dist_col) {
      const auto v = parse_double(row[*dist_col]);
      if (!v) throw DataError("row " + std::to_string(r + 1) + ": bad distance_m");
      m.distances_m.push_back(*v);
    }
    if (fold_col) {
      const auto v = parse_int(row[*fold_col]);
      if (!v) throw DataError("row " + std::to_string(r + 1) + ": bad fold");
      m.folds.push_back(static_cast<int>(*v));
    }
  }
  return m;
}

// --- normalization -----------------------------------------------------------

MinMaxScaler MinMaxScaler::fit(const FeatureMatrix& train) {
  if (train.rows() == 0) throw DomainError("min-max fit on empty table");
  MinMaxScaler s;
  s.columns = train.columns;
  s.lo.assign(train.cols(), 0.0);
  s.hi.assign(train.cols(), 0.0);
  for (std::size_t c = 0; c < train.cols(); ++c) {
    double lo = train.at(0, c);
    double hi = lo;
    for (std::size_t r = 1; r < train.rows(); ++r) {
      lo = std::min(lo, train.at(r, c));
      hi = std::max(hi, train.at(r, c));
    }
    s.lo[c] = lo;
    s.hi[c] = hi;
  }
  return s;
}

FeatureMatrix MinMaxScaler::apply(const FeatureMatrix& m) const {
  if (m.columns != columns) throw SchemaError("min-max apply: column mismatch with fitted table");
  FeatureMatrix out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      const double span = hi[c] - lo[c];
      out.at(r, c) = span > 0.0 ? (m.at(r, c) - lo[c]) / span : 0.0;
    }
  }
  return out;
}

NormalizedPair minmax_normalize(const FeatureMatrix& train, const FeatureMatrix& apply_to) {
  NormalizedPair p;
  p.scaler = MinMaxScaler::fit(train);
  p.train = p.scaler.apply(train);
  p.applied = p.scaler.apply(apply_to);
  return p;
}

}  // namespace trajmode
