#include "trajmode/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include "trajmode/errors.hpp"
#include "trajmode/table_io.hpp"

namespace trajmode {

namespace {

using nlohmann::json;

// Rejects keys outside `allowed` so typos fail loudly.
void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

template <typename T>
std::optional<T> get_opt(const json& obj, const char* key, std::string_view where) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(where) + "." + key + " has the wrong type");
  }
}

std::size_t get_count(const json& obj, const char* key, std::string_view where, std::size_t fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number_integer() || it->get<long long>() < 0) {
    throw ConfigError(std::string(where) + "." + key + " must be a non-negative integer");
  }
  return it->get<std::size_t>();
}

DecisionTreeConfig parse_tree(const json& j, DecisionTreeConfig cfg, std::string_view where) {
  if (const auto it = j.find("max_depth"); it != j.end()) {
    if (it->is_null()) {
      cfg.max_depth.reset();
    } else {
      cfg.max_depth = get_count(j, "max_depth", where, 0);
    }
  }
  cfg.min_samples_split = get_count(j, "min_samples_split", where, cfg.min_samples_split);
  cfg.min_samples_leaf = get_count(j, "min_samples_leaf", where, cfg.min_samples_leaf);
  if (const auto mf = get_opt<std::string>(j, "max_features", where)) {
    if (*mf == "all") {
      cfg.max_features = MaxFeatures::all;
    } else if (*mf == "sqrt") {
      cfg.max_features = MaxFeatures::sqrt;
    } else {
      throw ConfigError("max_features must be 'all' or 'sqrt'");
    }
  }
  return cfg;
}

ModelConfig parse_model(const json& j) {
  check_keys(j, "model",
             {"kind", "n_estimators", "bootstrap", "max_depth", "min_samples_split", "min_samples_leaf",
              "max_features", "seed"});
  ModelConfig m;
  const auto kind = get_opt<std::string>(j, "kind", "model").value_or("forest");
  if (kind == "forest") {
    m.kind = ModelKind::forest;
  } else if (kind == "tree") {
    m.kind = ModelKind::tree;
  } else {
    throw ConfigError("model.kind must be 'forest' or 'tree'");
  }
  m.forest.n_estimators = get_count(j, "n_estimators", "model", m.forest.n_estimators);
  m.forest.bootstrap = get_opt<bool>(j, "bootstrap", "model").value_or(m.forest.bootstrap);
  m.forest.tree = parse_tree(j, m.forest.tree, "model");
  m.tree = parse_tree(j, m.tree, "model");
  if (const auto s = get_opt<std::uint64_t>(j, "seed", "model")) {
    m.forest.rng_seed = *s;
    m.tree.rng_seed = *s;
  }
  return m;
}

NoiseConfig parse_noise(const json& j) {
  check_keys(j, "noise", {"method", "window", "n_sigmas", "bounds", "feature", "eps", "min_pts", "leak_acknowledged"});
  NoiseConfig n;
  n.method = parse_noise_method(get_opt<std::string>(j, "method", "noise").value_or("none"));
  n.hampel.window = get_count(j, "window", "noise", n.hampel.window);
  n.hampel.n_sigmas = get_opt<double>(j, "n_sigmas", "noise").value_or(n.hampel.n_sigmas);
  if (const auto it = j.find("bounds"); it != j.end()) {
    if (!it->is_object()) throw ConfigError("noise.bounds must map label -> [lower, upper]");
    GroundTruthBounds b;
    for (const auto& [label, pair] : it->items()) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
        throw ConfigError("noise.bounds." + label + " must be [lower, upper]");
      }
      b.set(label, {pair[0].get<double>(), pair[1].get<double>()});
    }
    n.bounds = std::move(b);
  }
  n.dbscan.feature = get_opt<std::string>(j, "feature", "noise").value_or(n.dbscan.feature);
  n.dbscan.eps = get_opt<double>(j, "eps", "noise").value_or(n.dbscan.eps);
  n.dbscan.min_pts = get_count(j, "min_pts", "noise", n.dbscan.min_pts);
  n.leak_acknowledged = get_opt<bool>(j, "leak_acknowledged", "noise").value_or(false);
  return n;
}

SelectionConfig parse_selection(const json& j) {
  check_keys(j, "selection", {"method", "top_k", "max_rounds", "features"});
  const auto method = get_opt<std::string>(j, "method", "selection").value_or("none");
  // In a document the names live in "features", so a bare "list" is allowed.
  SelectionConfig s;
  if (method == "list") {
    s.method = SelectionMethod::list;
  } else {
    s = SelectionConfig::parse(method);
  }
  s.top_k = get_count(j, "top_k", "selection", s.top_k);
  if (j.contains("max_rounds") && !j["max_rounds"].is_null()) s.max_rounds = get_count(j, "max_rounds", "selection", 0);
  if (const auto f = get_opt<std::vector<std::string>>(j, "features", "selection")) {
    if (s.method == SelectionMethod::none) s.method = SelectionMethod::list;
    s.features = *f;
  }
  if (s.method == SelectionMethod::list && s.features.empty()) {
    throw ConfigError("selection method 'list' needs a non-empty 'features' array");
  }
  return s;
}

std::string_view selection_name(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::none: return "none";
    case SelectionMethod::wrapper: return "wrapper";
    case SelectionMethod::importance: return "importance";
    case SelectionMethod::list: return "list";
  }
  return "none";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

template <typename Fn>
void write_stream(const std::filesystem::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  fn(out);
}

}  // namespace

std::string_view version() noexcept { return TRAJMODE_VERSION; }

NoiseMethod parse_noise_method(std::string_view text) {
  if (text == "none") return NoiseMethod::none;
  if (text == "hampel") return NoiseMethod::hampel;
  if (text == "ground-truth" || text == "ground_truth") return NoiseMethod::ground_truth;
  if (text == "dbscan") return NoiseMethod::dbscan;
  throw ConfigError("unknown noise method '" + std::string(text) + "' (expected none, hampel, ground-truth, dbscan)");
}

std::string_view to_string(NoiseMethod method) noexcept {
  switch (method) {
    case NoiseMethod::none: return "none";
    case NoiseMethod::hampel: return "hampel";
    case NoiseMethod::ground_truth: return "ground_truth";
    case NoiseMethod::dbscan: return "dbscan";
  }
  return "none";
}

SelectionConfig SelectionConfig::parse(std::string_view text) {
  SelectionConfig s;
  if (text == "none") return s;
  if (text == "wrapper") {
    s.method = SelectionMethod::wrapper;
  } else if (text == "importance" || text == "importance_ranked") {
    s.method = SelectionMethod::importance;
  } else if (text.starts_with("list:")) {
    s.method = SelectionMethod::list;
    for (const auto part : split(text.substr(5), ',')) {
      const auto name = trim(part);
      if (!name.empty()) s.features.emplace_back(name);
    }
    if (s.features.empty()) throw ConfigError("list selection needs at least one feature name");
  } else {
    throw ConfigError("unknown selection '" + std::string(text) +
                      "' (expected none, wrapper, importance, list:<names>)");
  }
  return s;
}

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  check_keys(doc, "config",
             {"dataset_root", "label_scheme", "cv", "seed", "model", "noise", "savgol", "selection", "bearing_diff",
              "output_dir", "n_jobs"});
  ExperimentConfig c;
  if (const auto root = get_opt<std::string>(doc, "dataset_root", "config")) c.dataset_root = *root;
  if (const auto s = get_opt<std::string>(doc, "label_scheme", "config")) c.label_scheme = parse_label_scheme(*s);
  c.seed = get_opt<std::uint64_t>(doc, "seed", "config");
  if (const auto it = doc.find("cv"); it != doc.end()) {
    check_keys(*it, "cv", {"k", "mode", "seed"});
    c.k = get_count(*it, "k", "cv", c.k);
    if (const auto m = get_opt<std::string>(*it, "mode", "cv")) c.cv_mode = parse_cv_mode(*m);
    if (const auto s = get_opt<std::uint64_t>(*it, "seed", "cv")) {
      if (c.seed && *c.seed != *s) throw ConfigError("cv.seed conflicts with seed");
      c.seed = s;
    }
  }
  const bool model_seeded = doc.contains("model") && doc["model"].contains("seed");
  if (doc.contains("model")) c.model = parse_model(doc["model"]);
  if (doc.contains("noise")) c.noise = parse_noise(doc["noise"]);
  if (const auto it = doc.find("savgol"); it != doc.end() && !it->is_null()) {
    check_keys(*it, "savgol", {"window", "polyorder"});
    SavgolConfig sg;
    sg.window = get_count(*it, "window", "savgol", sg.window);
    sg.polyorder = get_count(*it, "polyorder", "savgol", sg.polyorder);
    c.savgol = sg;
  }
  if (doc.contains("selection")) c.selection = parse_selection(doc["selection"]);
  if (const auto b = get_opt<std::string>(doc, "bearing_diff", "config")) {
    if (*b == "raw") {
      c.bearing_diff = BearingDiff::raw;
    } else if (*b == "wrapped") {
      c.bearing_diff = BearingDiff::wrapped;
    } else {
      throw ConfigError("bearing_diff must be 'raw' or 'wrapped'");
    }
  }
  if (const auto o = get_opt<std::string>(doc, "output_dir", "config")) c.output_dir = *o;
  c.n_jobs = get_count(doc, "n_jobs", "config", c.n_jobs);
  if (!model_seeded) c.apply_seed();
  return c;
}

void ExperimentConfig::apply_seed() {
  if (!seed) return;
  model.forest.rng_seed = *seed;
  model.tree.rng_seed = *seed;
}

json ExperimentConfig::to_json() const {
  json j;
  j["dataset_root"] = dataset_root ? json(dataset_root->string()) : json(nullptr);
  j["label_scheme"] = to_string(label_scheme);
  j["seed"] = seed ? json(*seed) : json(nullptr);
  j["cv"] = {{"k", k}, {"mode", to_string(cv_mode)}};
  const auto& t = model.kind == ModelKind::forest ? model.forest.tree : model.tree;
  j["model"] = {
      {"kind", model.kind == ModelKind::forest ? "forest" : "tree"},
      {"n_estimators", model.forest.n_estimators},
      {"bootstrap", model.forest.bootstrap},
      {"max_depth", t.max_depth ? json(*t.max_depth) : json(nullptr)},
      {"min_samples_split", t.min_samples_split},
      {"min_samples_leaf", t.min_samples_leaf},
      {"max_features", t.max_features == MaxFeatures::all ? "all" : "sqrt"},
      {"seed", model.kind == ModelKind::forest ? model.forest.rng_seed : model.tree.rng_seed},
  };
  json bounds = json::object();
  for (const auto& [label, b] : noise.bounds.entries()) bounds[label] = {b.lower, b.upper};
  j["noise"] = {
      {"method", to_string(noise.method)},
      {"window", noise.hampel.window},
      {"n_sigmas", noise.hampel.n_sigmas},
      {"bounds", bounds},
      {"feature", noise.dbscan.feature},
      {"eps", noise.dbscan.eps},
      {"min_pts", noise.dbscan.min_pts},
      {"leak_acknowledged", noise.leak_acknowledged},
  };
  j["savgol"] = savgol ? json{{"window", savgol->window}, {"polyorder", savgol->polyorder}} : json(nullptr);
  j["selection"] = {
      {"method", selection_name(selection.method)},
      {"top_k", selection.top_k},
      {"max_rounds", selection.max_rounds ? json(*selection.max_rounds) : json(nullptr)},
  };
  if (selection.method == SelectionMethod::list) j["selection"]["features"] = selection.features;
  j["bearing_diff"] = bearing_diff == BearingDiff::raw ? "raw" : "wrapped";
  j["output_dir"] = output_dir.string();
  j["n_jobs"] = n_jobs;
  return j;
}

void ExperimentConfig::validate() const {
  if (!seed) throw ConfigError("a seed is required (config 'seed' or --seed)");
  if (k < 2) throw ConfigError("cv.k must be >= 2");
  if (n_jobs < 1) throw ConfigError("n_jobs must be >= 1");
  model.forest.validate();
  model.tree.validate();
  if (noise.method == NoiseMethod::hampel && (noise.hampel.window < 3 || noise.hampel.window % 2 == 0)) {
    throw ConfigError("hampel window must be odd and >= 3");
  }
  if (noise.method == NoiseMethod::dbscan && (!(noise.dbscan.eps > 0.0) || noise.dbscan.min_pts < 1)) {
    throw ConfigError("dbscan needs eps > 0 and min_pts >= 1");
  }
  if (noise.leak_acknowledged && noise.method != NoiseMethod::ground_truth) {
    throw ConfigError("the leak acknowledgment only applies to ground-truth noise removal");
  }
  if (savgol && (savgol->window % 2 == 0 || savgol->polyorder >= savgol->window)) {
    throw ConfigError("savgol needs an odd window and polyorder < window");
  }
  if (selection.method == SelectionMethod::list) {
    std::set<std::string> seen;
    for (const auto& f : selection.features) {
      if (!seen.insert(f).second) throw ConfigError("duplicate feature in selection list: " + f);
    }
  }
}

std::vector<Segment> prepare_segments(std::vector<Segment> segments, const ExperimentConfig& config,
                                      std::size_t* smoothed_points) {
  std::vector<Segment> out = merge_labels(std::move(segments), config.label_scheme);
  std::size_t replaced = 0;
  for (auto& s : out) {
    if (config.noise.method == NoiseMethod::hampel) {
      auto r = hampel_smooth(s, config.noise.hampel);
      replaced += r.replaced_points;
      s = std::move(r.segment);
    }
    if (config.savgol) s = savgol_smooth(s, config.savgol->window, config.savgol->polyorder);
  }
  if (smoothed_points) *smoothed_points = replaced;
  return out;
}

std::vector<std::string> segment_refs(std::span<const Segment> segments) {
  std::vector<std::string> refs;
  std::map<std::string, std::size_t> ordinal;
  for (const auto& s : segments) {
    refs.push_back(s.user_id + "/" + format_day(s.day) + "/" + s.label + "/" + std::to_string(ordinal[s.user_id]++));
  }
  return refs;
}

FeatureMatrix extract_features(std::span<const Segment> segments, BearingDiff diff, std::size_t n_jobs) {
  std::vector<FeatureVector> vectors(segments.size());
  const auto refs = segment_refs(segments);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) vectors[i] = build_feature_vector(segments[i], refs[i], diff);
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(n_jobs, segments.size()));
  if (jobs == 1) {
    work(0, segments.size());
  } else {
    std::vector<std::exception_ptr> errors(jobs);
    {
      std::vector<std::jthread> threads;
      const std::size_t chunk = (segments.size() + jobs - 1) / jobs;
      for (std::size_t j = 0; j < jobs; ++j) {
        threads.emplace_back([&, j] {
          try {
            work(j * chunk, std::min(segments.size(), (j + 1) * chunk));
          } catch (...) {
            errors[j] = std::current_exception();
          }
        });
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return to_matrix(vectors);
}

NoiseStep make_noise_step(const NoiseConfig& noise) {
  NoiseStep step;
  step.bounds = noise.bounds;
  step.dbscan = noise.dbscan;
  switch (noise.method) {
    case NoiseMethod::none:
    case NoiseMethod::hampel: step.kind = NoiseKind::none; break;
    case NoiseMethod::ground_truth:
      step.kind = NoiseKind::ground_truth;
      step.apply_to_test = noise.leak_acknowledged;
      break;
    case NoiseMethod::dbscan: step.kind = NoiseKind::dbscan; break;
  }
  return step;
}

std::optional<SelectionTrace> run_selection(const FeatureMatrix& data, const ExperimentConfig& config,
                                            const FoldAssignment& folds) {
  const auto& sel = config.selection;
  if (sel.method != SelectionMethod::wrapper && sel.method != SelectionMethod::importance) return std::nullopt;
  const NoiseStep noise = make_noise_step(config.noise);
  const SubsetScorer scorer = [&](std::span<const std::string> features) {
    return cross_validate(data, config.model, folds, noise, std::vector<std::string>(features.begin(), features.end()))
        .score();
  };
  if (sel.method == SelectionMethod::wrapper) {
    WrapperOptions options;
    options.max_rounds = sel.max_rounds;
    if (!options.max_rounds && sel.top_k > 0) options.max_rounds = sel.top_k;
    options.n_jobs = config.n_jobs;
    return wrapper_search(data.columns, scorer, options);
  }
  const TrainedModel full = config.model.fit(MinMaxScaler::fit(data).apply(data));
  auto importance = full.importance_map();
  std::vector<std::string> ranked = data.columns;
  std::ranges::stable_sort(ranked, [&](const std::string& a, const std::string& b) {
    return importance.at(a) != importance.at(b) ? importance.at(a) > importance.at(b) : a < b;
  });
  const std::size_t rounds = sel.max_rounds.value_or(sel.top_k == 0 ? ranked.size() : sel.top_k);
  ranked.resize(std::min(ranked.size(), std::max<std::size_t>(rounds, 1)));
  return importance_ranked_selection(ranked, importance, scorer);
}

std::optional<std::vector<std::string>> resolve_selection(const SelectionConfig& selection,
                                                          const std::optional<SelectionTrace>& trace) {
  switch (selection.method) {
    case SelectionMethod::none: return std::nullopt;
    case SelectionMethod::list: return selection.features;
    case SelectionMethod::wrapper:
    case SelectionMethod::importance:
      if (!trace) throw DomainError("selection trace missing");
      if (selection.top_k == 0) return top_k(*trace, trace->best_prefix_size);
      return top_k(*trace, std::min(selection.top_k, trace->steps.size()));
  }
  return std::nullopt;
}

std::filesystem::path create_run_directory(const std::filesystem::path& parent) {
  namespace fs = std::filesystem;
  fs::create_directories(parent);
  for (int n = 1; n <= 9999; ++n) {
    char name[16];
    std::snprintf(name, sizeof name, "run-%04d", n);
    const fs::path dir = parent / name;
    // create_directory is atomic: false means another run owns the name.
    if (fs::create_directory(dir)) return dir;
  }
  throw DataError("no free run directory under " + parent.string());
}

RunResult run_experiment(ExperimentConfig config) {
  namespace fs = std::filesystem;
  config.validate();
  if (!config.dataset_root) throw DataError("no dataset root (config 'dataset_root', --data, or TRAJMODE_DATA)");
  if (!fs::is_directory(*config.dataset_root)) {
    throw DataError("dataset root not found: " + config.dataset_root->string());
  }

  DatasetIngest ingest = ingest_dataset(*config.dataset_root);
  std::size_t smoothed = 0;
  const std::vector<Segment> segments = prepare_segments(std::move(ingest.segments), config, &smoothed);
  if (segments.empty()) throw DataError("no labeled segments found under " + config.dataset_root->string());
  const FeatureMatrix features = extract_features(segments, config.bearing_diff, config.n_jobs);
  // Fold assignment fails fast on too few users before any expensive work.
  const FoldAssignment folds = assign_folds(features.user_ids, config.k, config.cv_mode, *config.seed);

  RunResult result;
  result.segments = segments.size();
  result.trace = run_selection(features, config, folds);
  const auto selected = resolve_selection(config.selection, result.trace);
  result.report = cross_validate(features, config.model, folds, make_noise_step(config.noise), selected);
  result.report.config["experiment"] = config.to_json();

  result.run_dir = create_run_directory(config.output_dir);
  const fs::path& dir = result.run_dir;
  std::vector<std::string> outputs;
  auto record = [&](const std::string& name) {
    outputs.push_back(name);
    return dir / name;
  };

  write_text(record("config.json"), config.to_json().dump(2) + "\n");
  write_stream(record("segments.jsonl"), [&](std::ostream& out) { write_segment_store(out, segments); });
  write_stream(record("features.csv"), [&](std::ostream& out) {
    const std::vector<std::string> header = {"segment_ref"};
    const std::vector<std::vector<std::string>> cols = {segment_refs(segments)};
    write_feature_matrix(out, features, header, cols);
  });
  if (result.trace) {
    write_stream(record("selection_trace.csv"), [&](std::ostream& out) { write_trace_csv(out, *result.trace); });
    write_text(record("selection.json"), result.trace->to_json().dump(2) + "\n");
  }
  write_text(record("report.json"), result.report.to_json().dump(2) + "\n");
  write_stream(record("summary.csv"), [&](std::ostream& out) { result.report.write_summary_csv(out); });
  write_stream(record("confusion.csv"), [&](std::ostream& out) { result.report.write_confusion_csv(out); });

  const json ingest_json = {
      {"users", ingest.users},
      {"users_without_labels", ingest.users_without_labels},
      {"plt_files", ingest.plt_files},
      {"malformed_lines", ingest.malformed_lines},
      {"rejected_label_rows", ingest.rejected_label_rows},
      {"unknown_label_modes", ingest.unknown_label_modes},
      {"dropped_timestamps", ingest.dropped_timestamps},
      {"unlabeled_points", ingest.unlabeled_points},
      {"discarded_runs", ingest.discarded_runs},
      {"segments", segments.size()},
      {"hampel_replaced_points", smoothed},
  };
  outputs.emplace_back("manifest.json");
  const json manifest = {
      {"tool", "trajmode"},
      {"version", version()},
      {"command", "run"},
      {"config", config.to_json()},
      {"ingest", ingest_json},
      {"outputs", outputs},
  };
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

}  // namespace trajmode
