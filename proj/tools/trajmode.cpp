// trajmode command-line driver. Exit codes: 0 ok, 1 usage or configuration
// error, 2 missing or malformed data.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "trajmode/errors.hpp"
#include "trajmode/eval.hpp"
#include "trajmode/ingest.hpp"
#include "trajmode/noise.hpp"
#include "trajmode/pipeline.hpp"
#include "trajmode/select.hpp"
#include "trajmode/stats.hpp"
#include "trajmode/synthetic.hpp"
#include "trajmode/table_io.hpp"
#include "trajmode/traj_features.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace trajmode;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;

const char* kLeakMessage =
    "ground-truth cleaning reads every row's label. This matrix carries a fold column, so a train/test split "
    "exists and cleaning test rows would leak their labels into the evaluation. Clean before splitting, or pass "
    "--i-know-this-leaks to proceed anyway.";

void require_new(const fs::path& path) {
  if (fs::exists(path)) throw ConfigError("refusing to overwrite existing " + path.string());
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const fs::path& path) {
  require_new(path);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const json& doc) { open_output(path) << doc.dump(2) << "\n"; }

FeatureMatrix load_matrix(const fs::path& path) {
  auto in = open_input(path);
  return read_feature_matrix(in);
}

std::optional<fs::path> data_root(const std::string& flag) {
  if (!flag.empty()) return fs::path(flag);
  if (const char* env = std::getenv("TRAJMODE_DATA"); env && *env) return fs::path(env);
  return std::nullopt;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  for (const auto part : split(text, ',')) {
    const auto v = parse_double(trim(part));
    if (!v) throw ConfigError("not a number: '" + std::string(part) + "'");
    out.push_back(*v);
  }
  return out;
}

// Options shared by the stages that cross-validate.
struct CvOptions {
  std::size_t k = kDefaultFolds;
  std::string cv_mode = "random";
  std::optional<std::uint64_t> seed;
  std::string model = "forest";
  std::size_t n_estimators = 50;
  std::string noise = "none";
  bool leaks = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--k", k, "Number of folds")->capture_default_str();
    cmd->add_option("--cv-mode", cv_mode, "random or user")->capture_default_str();
    cmd->add_option("--seed", seed, "Seed for folds and model (required)");
    cmd->add_option("--model", model, "forest or tree")->capture_default_str();
    cmd->add_option("--n-estimators", n_estimators, "Trees in the forest")->capture_default_str();
    cmd->add_option("--noise", noise, "none, ground-truth or dbscan (row removal inside folds)")
        ->capture_default_str();
    cmd->add_flag("--i-know-this-leaks", leaks, "Let ground-truth cleaning also drop test rows");
  }

  ExperimentConfig config() const {
    ExperimentConfig c;
    c.k = k;
    c.cv_mode = parse_cv_mode(cv_mode);
    c.seed = seed;
    if (model == "tree") {
      c.model.kind = ModelKind::tree;
    } else if (model != "forest") {
      throw ConfigError("--model must be forest or tree");
    }
    c.model.forest.n_estimators = n_estimators;
    c.noise.method = parse_noise_method(noise);
    if (c.noise.method == NoiseMethod::hampel) {
      throw ConfigError("hampel smooths points; use it with 'features --noise hampel'");
    }
    c.noise.leak_acknowledged = leaks;
    c.apply_seed();
    c.validate();
    return c;
  }
};

int cmd_ingest(const std::string& data, const std::string& scheme, const fs::path& out) {
  const auto root = data_root(data);
  if (!root) throw DataError("no dataset root (--data or TRAJMODE_DATA)");
  const LabelScheme s = parse_label_scheme(scheme);
  require_new(out);
  auto result = ingest_dataset(*root);
  const auto segments = merge_labels(std::move(result.segments), s);
  auto stream = open_output(out);
  write_segment_store(stream, segments);
  std::cerr << "ingested " << result.users << " users, " << result.plt_files << " plt files, " << segments.size()
            << " segments (" << result.malformed_lines << " malformed lines, " << result.discarded_runs
            << " short runs discarded)\n";
  return 0;
}

int cmd_features(const fs::path& in, const fs::path& out, const std::string& noise, std::size_t window,
                 double sigmas, const std::vector<std::size_t>& savgol, const std::string& bearing, std::size_t jobs) {
  ExperimentConfig c;
  c.noise.method = parse_noise_method(noise);
  if (c.noise.method != NoiseMethod::none && c.noise.method != NoiseMethod::hampel) {
    throw ConfigError("features only supports --noise none or hampel; row removal belongs to 'clean'");
  }
  c.noise.hampel = {window, sigmas};
  if (!savgol.empty()) {
    if (savgol.size() != 2) throw ConfigError("--savgol takes WINDOW,POLYORDER");
    c.savgol = SavgolConfig{savgol[0], savgol[1]};
  }
  if (bearing == "wrapped") {
    c.bearing_diff = BearingDiff::wrapped;
  } else if (bearing != "raw") {
    throw ConfigError("--bearing-diff must be raw or wrapped");
  }
  c.seed = 0;
  c.n_jobs = jobs;
  c.validate();
  require_new(out);
  auto stream = open_input(in);
  std::size_t replaced = 0;
  // The scheme was applied at ingest; identity keeps labels as stored.
  const auto segments = prepare_segments(read_segment_store(stream), c, &replaced);
  const FeatureMatrix m = extract_features(segments, c.bearing_diff, c.n_jobs);
  auto os = open_output(out);
  const std::vector<std::string> header = {"segment_ref"};
  const std::vector<std::vector<std::string>> cols = {segment_refs(segments)};
  write_feature_matrix(os, m, header, cols);
  std::cerr << "wrote " << m.rows() << " x " << m.cols() << " feature matrix";
  if (c.noise.method == NoiseMethod::hampel) std::cerr << " (" << replaced << " points replaced by hampel)";
  std::cerr << "\n";
  return 0;
}

int cmd_clean(const fs::path& in, const fs::path& out, const std::string& method, const std::string& audit,
              bool leaks, const std::string& feature, double eps, std::size_t min_pts) {
  const NoiseMethod m = parse_noise_method(method);
  require_new(out);
  if (!audit.empty()) require_new(audit);
  const FeatureMatrix matrix = load_matrix(in);
  FilterOutcome outcome;
  if (m == NoiseMethod::ground_truth) {
    if (!matrix.folds.empty() && !leaks) throw ConfigError(kLeakMessage);
    outcome = ground_truth_filter(matrix, GroundTruthBounds::published());
  } else if (m == NoiseMethod::dbscan) {
    // eps is measured on the min-max scale of the column.
    const FeatureMatrix col = matrix.select_columns(std::vector<std::string>{feature});
    outcome = dbscan_outlier_filter(MinMaxScaler::fit(col).apply(col), feature, eps, min_pts);
  } else {
    throw ConfigError("clean --method must be ground-truth or dbscan");
  }
  auto os = open_output(out);
  write_feature_matrix(os, matrix.select_rows(outcome.kept));
  if (!audit.empty()) {
    auto as = open_output(audit);
    write_removal_audit(as, matrix, outcome);
  }
  std::cerr << "kept " << outcome.kept.size() << ", removed " << outcome.removed.size();
  if (!outcome.uncovered.empty()) std::cerr << " (" << outcome.uncovered.size() << " rows had no bounds)";
  std::cerr << "\n";
  return 0;
}

int cmd_select(const fs::path& in, const fs::path& out, const CvOptions& cv, const std::string& method,
               std::size_t top, std::optional<std::size_t> rounds, const std::string& trace_csv, std::size_t jobs) {
  ExperimentConfig c = cv.config();
  c.selection = SelectionConfig::parse(method);
  if (c.selection.method != SelectionMethod::wrapper && c.selection.method != SelectionMethod::importance) {
    throw ConfigError("select --method must be wrapper or importance");
  }
  c.selection.top_k = top;
  c.selection.max_rounds = rounds;
  c.n_jobs = jobs;
  c.validate();
  require_new(out);
  if (!trace_csv.empty()) require_new(trace_csv);
  const FeatureMatrix m = load_matrix(in);
  const auto folds = assign_folds(m.user_ids, c.k, c.cv_mode, *c.seed);
  const auto trace = run_selection(m, c, folds);
  const auto selected = resolve_selection(c.selection, trace);
  json doc = {{"method", method}, {"top_k", top}, {"selected", *selected}, {"trace", trace->to_json()},
              {"config", c.to_json()}};
  write_json(out, doc);
  if (!trace_csv.empty()) {
    auto os = open_output(trace_csv);
    write_trace_csv(os, *trace);
  }
  for (std::size_t i = 0; i < selected->size(); ++i) std::cout << (i ? "," : "") << (*selected)[i];
  std::cout << "\n";
  return 0;
}

std::vector<std::string> selection_from_file(const fs::path& path) {
  auto in = open_input(path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("malformed selection file " + path.string() + ": " + e.what());
  }
  if (!doc.contains("selected") || !doc["selected"].is_array()) {
    throw DataError("selection file " + path.string() + " has no 'selected' list");
  }
  return doc["selected"].get<std::vector<std::string>>();
}

int cmd_evaluate(const fs::path& in, const fs::path& out, const CvOptions& cv, const std::string& select,
                 const std::string& selection_file) {
  ExperimentConfig c = cv.config();
  c.selection = SelectionConfig::parse(select);
  if (c.selection.method == SelectionMethod::wrapper || c.selection.method == SelectionMethod::importance) {
    throw ConfigError("evaluate takes a fixed list; run 'select' first or use 'run'");
  }
  if (!selection_file.empty()) {
    c.selection.method = SelectionMethod::list;
    c.selection.features = selection_from_file(selection_file);
  }
  c.validate();
  require_new(out);
  const FeatureMatrix m = load_matrix(in);
  const auto folds = assign_folds(m.user_ids, c.k, c.cv_mode, *c.seed);
  const auto report = cross_validate(m, c.model, folds, make_noise_step(c.noise), resolve_selection(c.selection, {}));
  fs::create_directories(out);
  write_json(out / "report.json", report.to_json());
  {
    auto os = open_output(out / "summary.csv");
    report.write_summary_csv(os);
  }
  {
    auto os = open_output(out / "confusion.csv");
    report.write_confusion_csv(os);
  }
  {
    FeatureMatrix with_folds = m;
    with_folds.folds.clear();
    for (const int f : folds.fold_of()) with_folds.folds.push_back(f + 1);
    auto os = open_output(out / "folds.csv");
    write_feature_matrix(os, with_folds);
  }
  std::cout << "mean A_s " << format_double(report.mean_accuracy) << " (std " << format_double(report.std_accuracy)
            << ")";
  if (report.mean_accuracy_by_distance) std::cout << ", mean A_d " << format_double(*report.mean_accuracy_by_distance);
  std::cout << "\n";
  return 0;
}

int cmd_compare_cv(const fs::path& in, const fs::path& out, std::size_t k, std::optional<std::uint64_t> seed) {
  if (!seed) throw ConfigError("a seed is required (--seed)");
  require_new(out);
  const FeatureMatrix m = load_matrix(in);
  const auto study = fold_correlation_study(m, k, *seed);
  fs::create_directories(out);
  json doc = study.to_json();
  doc["k"] = k;
  doc["seed"] = *seed;
  write_json(out / "compare_cv.json", doc);
  auto os = open_output(out / "correlations.csv");
  study.write_csv(os);
  std::cout << "random mean " << format_double(study.random_mean) << ", user_oriented mean "
            << format_double(study.user_mean) << ", mann-whitney U " << format_double(study.mann_whitney.statistic)
            << " p " << format_double(study.mann_whitney.p_value) << "\n";
  return 0;
}

struct StatsOptions {
  std::string test;
  std::string in;
  std::string column;
  std::string group_column = "label";
  std::vector<std::string> groups;
  std::string x;
  std::string y;
  std::string alternative = "two-sided";
  std::string method = "auto";
  double mu = 0.0;
  double sigma = 1.0;
  std::string out;
};

int cmd_stats(const StatsOptions& o) {
  const Alternative alt = parse_alternative(o.alternative);
  PValueMethod pm = PValueMethod::automatic;
  if (o.method == "exact") {
    pm = PValueMethod::exact;
  } else if (o.method == "asymptotic") {
    pm = PValueMethod::asymptotic;
  } else if (o.method != "auto") {
    throw ConfigError("--method must be auto, exact or asymptotic");
  }

  // Samples come either inline (--x/--y) or from a column split by a group column.
  std::vector<std::vector<double>> samples;
  std::vector<std::string> names;
  if (!o.x.empty()) {
    samples.push_back(parse_values(o.x));
    names.emplace_back("x");
    if (!o.y.empty()) {
      samples.push_back(parse_values(o.y));
      names.emplace_back("y");
    }
  } else {
    if (o.in.empty() || o.column.empty()) throw ConfigError("stats needs --x/--y or --in with --column");
    auto in = open_input(o.in);
    const CsvTable t = read_csv(in);
    const auto col = t.column(o.column);
    if (!col) throw SchemaError("missing column '" + o.column + "'");
    const bool one_sample = o.test == "wilcoxon" || o.test == "ks";
    std::map<std::string, std::vector<double>> by_group;
    for (const auto& row : t.rows) {
      const auto v = parse_double(row[*col]);
      if (!v) throw DataError("column '" + o.column + "' holds a non-number: " + row[*col]);
      std::string key = "all";
      if (!one_sample) {
        const auto g = t.column(o.group_column);
        if (!g) throw SchemaError("missing column '" + o.group_column + "'");
        key = row[*g];
      }
      by_group[key].push_back(*v);
    }
    if (!o.groups.empty()) {
      for (const auto& g : o.groups) {
        if (!by_group.contains(g)) throw DataError("group '" + g + "' not found in column " + o.group_column);
        samples.push_back(by_group[g]);
        names.push_back(g);
      }
    } else {
      for (auto& [g, v] : by_group) {
        samples.push_back(std::move(v));
        names.push_back(g);
      }
    }
  }

  auto need = [&](std::size_t n) {
    if (samples.size() != n) {
      throw ConfigError(o.test + " needs exactly " + std::to_string(n) + " sample(s), got " +
                        std::to_string(samples.size()) + " (use --groups to choose)");
    }
  };
  TestResult r;
  if (o.test == "mann-whitney") {
    need(2);
    r = mann_whitney_u(samples[0], samples[1], alt, pm);
  } else if (o.test == "rank-sum") {
    need(2);
    r = wilcoxon_rank_sum(samples[0], samples[1], alt);
  } else if (o.test == "wilcoxon") {
    if (samples.size() == 2) {
      if (samples[0].size() != samples[1].size()) throw DataError("paired samples differ in length");
      std::vector<double> d(samples[0].size());
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = samples[0][i] - samples[1][i];
      r = wilcoxon_signed_rank(d, alt, pm);
    } else {
      need(1);
      r = wilcoxon_signed_rank(samples[0], o.mu, alt, pm);
    }
  } else if (o.test == "kruskal") {
    r = kruskal_wallis(samples);
  } else if (o.test == "ks") {
    need(1);
    if (!(o.sigma > 0.0)) throw ConfigError("--sigma must be > 0");
    const double mu = o.mu;
    const double sigma = o.sigma;
    r = ks_one_sample(samples[0], [mu, sigma](double v) { return normal_cdf((v - mu) / sigma); });
  } else {
    throw ConfigError("unknown test '" + o.test + "' (mann-whitney, rank-sum, wilcoxon, kruskal, ks)");
  }
  json doc = r.to_json();
  doc["samples"] = names;
  if (!o.out.empty()) write_json(o.out, doc);
  std::cout << doc.dump(2) << "\n";
  return 0;
}

struct RunOverrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
  std::string cv_mode;
  std::string label_scheme;
  std::string noise;
  std::string select;
  bool leaks = false;
  std::string out;
  std::string data;
  std::optional<std::size_t> jobs;
};

int cmd_run(const RunOverrides& o) {
  json doc = json::object();
  if (!o.config.empty()) {
    auto in = open_input(o.config);
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config " + o.config + " is not valid JSON: " + e.what());
    }
  }
  ExperimentConfig c = ExperimentConfig::from_json(doc);
  if (o.seed) {
    c.seed = o.seed;
    c.apply_seed();
  }
  if (o.k) c.k = *o.k;
  if (!o.cv_mode.empty()) c.cv_mode = parse_cv_mode(o.cv_mode);
  if (!o.label_scheme.empty()) c.label_scheme = parse_label_scheme(o.label_scheme);
  if (!o.noise.empty()) c.noise.method = parse_noise_method(o.noise);
  if (!o.select.empty()) {
    const auto s = SelectionConfig::parse(o.select);
    c.selection.method = s.method;
    c.selection.features = s.features;
  }
  if (o.leaks) c.noise.leak_acknowledged = true;
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.jobs) c.n_jobs = *o.jobs;
  if (const auto root = data_root(o.data)) {
    if (!o.data.empty() || !c.dataset_root) c.dataset_root = root;
  }
  const RunResult r = run_experiment(c);
  std::cout << r.run_dir.string() << ": " << r.segments << " segments, mean A_s "
            << format_double(r.report.mean_accuracy) << " (std " << format_double(r.report.std_accuracy) << ")\n";
  return 0;
}

int cmd_synth(const fs::path& out, std::size_t users, std::size_t per_mode, std::size_t points, double bias,
              std::uint64_t seed, const std::vector<std::string>& modes) {
  SyntheticDatasetOptions opt;
  if (!modes.empty()) {
    std::vector<SyntheticMode> chosen;
    for (const auto& m : modes) {
      const auto it = std::find_if(opt.modes.begin(), opt.modes.end(), [&](const SyntheticMode& sm) { return sm.tag == m; });
      if (it == opt.modes.end()) throw ConfigError("unknown synthetic mode '" + m + "' (walk, bike, bus, car)");
      chosen.push_back(*it);
    }
    opt.modes = std::move(chosen);
  }
  opt.users = users;
  opt.segments_per_mode = per_mode;
  opt.points_per_segment = points;
  opt.user_speed_bias = bias;
  opt.seed = seed;
  if (fs::exists(out)) throw ConfigError("refusing to overwrite existing " + out.string());
  write_geolife_tree(out, generate_dataset(opt));
  std::cerr << "wrote " << users << " users to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transportation-mode detection from GPS trajectories"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);
  int code = 0;

  // ingest
  std::string data;
  std::string scheme = "identity";
  std::string out;
  auto* ingest = app.add_subcommand("ingest", "Parse a GeoLife tree into a segment store (JSONL)");
  ingest->add_option("--data", data, "Dataset root (falls back to TRAJMODE_DATA)");
  ingest->add_option("--label-scheme", scheme, "identity, dabiri5 or endo7")->capture_default_str();
  ingest->add_option("--out", out, "Segment store to create")->required();

  // features
  std::string in;
  std::string feat_noise = "none";
  std::size_t hampel_window = 11;
  double hampel_sigmas = 3.0;
  std::vector<std::size_t> savgol;
  std::string bearing = "raw";
  std::size_t jobs = 1;
  auto* features = app.add_subcommand("features", "Compute the 70 trajectory features per segment");
  features->add_option("--in", in, "Segment store")->required();
  features->add_option("--out", out, "Feature matrix CSV to create")->required();
  features->add_option("--noise", feat_noise, "none or hampel (point smoothing)")->capture_default_str();
  features->add_option("--hampel-window", hampel_window)->capture_default_str();
  features->add_option("--hampel-sigmas", hampel_sigmas)->capture_default_str();
  features->add_option("--savgol", savgol, "Savitzky-Golay WINDOW,POLYORDER")->delimiter(',');
  features->add_option("--bearing-diff", bearing, "raw or wrapped")->capture_default_str();
  features->add_option("--n-jobs", jobs)->capture_default_str();

  // clean
  std::string method;
  std::string audit;
  bool leaks = false;
  std::string feature = "speed_mean";
  double eps = 0.5;
  std::size_t min_pts = 5;
  auto* clean = app.add_subcommand("clean", "Remove noisy rows from a feature matrix");
  clean->add_option("--in", in, "Feature matrix")->required();
  clean->add_option("--out", out, "Cleaned matrix to create")->required();
  clean->add_option("--method", method, "ground-truth or dbscan")->required();
  clean->add_option("--audit", audit, "CSV of removed rows with reasons");
  clean->add_flag("--i-know-this-leaks", leaks, "Allow ground-truth cleaning after a split");
  clean->add_option("--feature", feature, "DBSCAN feature")->capture_default_str();
  clean->add_option("--eps", eps, "DBSCAN radius on the min-max scale")->capture_default_str();
  clean->add_option("--min-pts", min_pts)->capture_default_str();

  // select
  CvOptions select_cv;
  std::size_t top = 20;
  std::optional<std::size_t> rounds;
  std::string trace_csv;
  auto* select = app.add_subcommand("select", "Wrapper or importance-ranked feature selection");
  select->add_option("--in", in, "Feature matrix")->required();
  select->add_option("--out", out, "Selection JSON to create")->required();
  select->add_option("--method", method, "wrapper or importance")->required();
  select->add_option("--top-k", top, "Features to keep")->capture_default_str();
  select->add_option("--max-rounds", rounds, "Search rounds (default: top-k)");
  select->add_option("--trace-csv", trace_csv, "Per-round trace CSV to create");
  select->add_option("--n-jobs", jobs)->capture_default_str();
  select_cv.add_to(select);

  // evaluate
  CvOptions eval_cv;
  std::string select_spec = "none";
  std::string selection_file;
  auto* evaluate = app.add_subcommand("evaluate", "Cross-validate a classifier on a feature matrix");
  evaluate->add_option("--in", in, "Feature matrix")->required();
  evaluate->add_option("--out", out, "Report directory to create")->required();
  evaluate->add_option("--select", select_spec, "none or list:<names>")->capture_default_str();
  evaluate->add_option("--selection", selection_file, "Selection JSON written by 'select'");
  eval_cv.add_to(evaluate);

  // compare-cv
  std::size_t k = kDefaultFolds;
  std::optional<std::uint64_t> seed;
  auto* compare = app.add_subcommand("compare-cv", "Train/test feature correlation under random vs user folds");
  compare->add_option("--in", in, "Feature matrix")->required();
  compare->add_option("--out", out, "Output directory to create")->required();
  compare->add_option("--k", k)->capture_default_str();
  compare->add_option("--seed", seed, "Fold seed (required)");

  // stats
  StatsOptions so;
  auto* stats = app.add_subcommand("stats", "Nonparametric tests on CSV columns or inline values");
  stats->add_option("--test", so.test, "mann-whitney, rank-sum, wilcoxon, kruskal, ks")->required();
  stats->add_option("--in", so.in, "CSV input");
  stats->add_option("--column", so.column, "Value column");
  stats->add_option("--group-column", so.group_column)->capture_default_str();
  stats->add_option("--groups", so.groups, "Groups to compare, in order")->delimiter(',');
  stats->add_option("--x", so.x, "Inline sample, comma separated");
  stats->add_option("--y", so.y, "Second inline sample");
  stats->add_option("--alternative", so.alternative, "two-sided, less, greater")->capture_default_str();
  stats->add_option("--method", so.method, "auto, exact, asymptotic")->capture_default_str();
  stats->add_option("--mu", so.mu, "Wilcoxon location or KS normal mean")->capture_default_str();
  stats->add_option("--sigma", so.sigma, "KS normal standard deviation")->capture_default_str();
  stats->add_option("--out", so.out, "JSON file to create");

  // run
  RunOverrides ro;
  auto* run = app.add_subcommand("run", "Full experiment into a new run directory");
  run->add_option("--config", ro.config, "Experiment config JSON");
  run->add_option("--seed", ro.seed);
  run->add_option("--k", ro.k);
  run->add_option("--cv-mode", ro.cv_mode, "random or user");
  run->add_option("--label-scheme", ro.label_scheme, "identity, dabiri5 or endo7");
  run->add_option("--noise", ro.noise, "none, hampel, ground-truth or dbscan");
  run->add_option("--select", ro.select, "none, wrapper, importance or list:<names>");
  run->add_flag("--i-know-this-leaks", ro.leaks, "Ground-truth cleaning also drops test rows");
  run->add_option("--out", ro.out, "Parent directory for run-NNNN");
  run->add_option("--data", ro.data, "Dataset root (falls back to TRAJMODE_DATA)");
  run->add_option("--n-jobs", ro.jobs);

  // synth
  std::size_t users = 6;
  std::size_t per_mode = 2;
  std::size_t points = 40;
  double bias = 0.0;
  std::uint64_t synth_seed = 7;
  std::vector<std::string> synth_modes;
  auto* synth = app.add_subcommand("synth", "Write a synthetic GeoLife-layout dataset");
  synth->add_option("--out", out, "Dataset root to create")->required();
  synth->add_option("--users", users)->capture_default_str();
  synth->add_option("--segments-per-mode", per_mode)->capture_default_str();
  synth->add_option("--points", points, "Points per segment")->capture_default_str();
  synth->add_option("--user-bias", bias, "Per-user relative speed offset")->capture_default_str();
  synth->add_option("--seed", synth_seed)->capture_default_str();
  synth->add_option("--modes", synth_modes, "Subset of walk,bike,bus,car")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*ingest) code = cmd_ingest(data, scheme, out);
    if (*features) code = cmd_features(in, out, feat_noise, hampel_window, hampel_sigmas, savgol, bearing, jobs);
    if (*clean) code = cmd_clean(in, out, method, audit, leaks, feature, eps, min_pts);
    if (*select) code = cmd_select(in, out, select_cv, method, top, rounds, trace_csv, jobs);
    if (*evaluate) code = cmd_evaluate(in, out, eval_cv, select_spec, selection_file);
    if (*compare) code = cmd_compare_cv(in, out, k, seed);
    if (*stats) code = cmd_stats(so);
    if (*run) code = cmd_run(ro);
    if (*synth) code = cmd_synth(out, users, per_mode, points, bias, synth_seed, synth_modes);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DomainError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return code;
}
