#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "trajmode/errors.hpp"
#include "trajmode/pipeline.hpp"
#include "trajmode/synthetic.hpp"

using namespace trajmode;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(ExperimentConfig, ParsesAndEchoes) {
  const auto doc = nlohmann::json::parse(R"({
    "dataset_root": "data/x",
    "label_scheme": "dabiri5",
    "cv": {"k": 4, "mode": "user", "seed": 3},
    "model": {"kind": "tree", "max_depth": 7},
    "noise": {"method": "dbscan", "eps": 0.3, "min_pts": 4},
    "selection": {"method": "list", "features": ["speed_mean", "speed_p90"]},
    "bearing_diff": "wrapped",
    "output_dir": "out"
  })");
  auto cfg = ExperimentConfig::from_json(doc);
  EXPECT_EQ(cfg.label_scheme, LabelScheme::dabiri5);
  EXPECT_EQ(cfg.k, 4u);
  EXPECT_EQ(cfg.cv_mode, CvMode::user_oriented);
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_EQ(cfg.model.kind, ModelKind::tree);
  EXPECT_EQ(cfg.model.tree.max_depth, 7u);
  EXPECT_EQ(cfg.noise.method, NoiseMethod::dbscan);
  EXPECT_DOUBLE_EQ(cfg.noise.dbscan.eps, 0.3);
  EXPECT_EQ(cfg.selection.features.size(), 2u);
  EXPECT_EQ(cfg.bearing_diff, BearingDiff::wrapped);
  cfg.validate();
  const auto again = ExperimentConfig::from_json(cfg.to_json());
  EXPECT_EQ(again.to_json(), cfg.to_json());
}

TEST(ExperimentConfig, RejectsInvalidDocuments) {
  EXPECT_THROW((void)ExperimentConfig::from_json(nlohmann::json::parse(R"({"colour": 1})")), ConfigError);
  EXPECT_THROW((void)ExperimentConfig::from_json(nlohmann::json::parse(R"({"cv": {"k": "five"}})")), ConfigError);
  EXPECT_THROW((void)ExperimentConfig::from_json(nlohmann::json::parse(R"({"label_scheme": "x"})")), ConfigError);

  ExperimentConfig no_seed;
  EXPECT_THROW(no_seed.validate(), ConfigError);

  ExperimentConfig leaky;
  leaky.seed = 1;
  leaky.noise.method = NoiseMethod::dbscan;
  leaky.noise.leak_acknowledged = true;
  EXPECT_THROW(leaky.validate(), ConfigError);
}

TEST(SelectionConfig, Parse) {
  EXPECT_EQ(SelectionConfig::parse("none").method, SelectionMethod::none);
  EXPECT_EQ(SelectionConfig::parse("wrapper").method, SelectionMethod::wrapper);
  EXPECT_EQ(SelectionConfig::parse("importance").method, SelectionMethod::importance);
  const auto list = SelectionConfig::parse("list:a,b");
  EXPECT_EQ(list.method, SelectionMethod::list);
  EXPECT_EQ(list.features, (std::vector<std::string>{"a", "b"}));
  EXPECT_THROW((void)SelectionConfig::parse("list:"), ConfigError);
  EXPECT_THROW((void)SelectionConfig::parse("greedy"), ConfigError);
  EXPECT_EQ(parse_noise_method("ground-truth"), NoiseMethod::ground_truth);
  EXPECT_THROW((void)parse_noise_method("kalman"), ConfigError);
}

TEST(ExtractFeatures, ThreadCountDoesNotMatter) {
  SyntheticDatasetOptions opt;
  opt.users = 2;
  std::vector<Segment> segments;
  for (const auto& u : generate_dataset(opt)) {
    auto ing = ingest_user(u.user_id, u.plt_files, u.labels);
    segments.insert(segments.end(), ing.segments.begin(), ing.segments.end());
  }
  const auto one = extract_features(segments, BearingDiff::raw, 1);
  const auto four = extract_features(segments, BearingDiff::raw, 4);
  EXPECT_EQ(one.data, four.data);
  EXPECT_EQ(one.labels, four.labels);
  EXPECT_EQ(one.cols(), 70u);
  const auto refs = segment_refs(segments);
  EXPECT_EQ(refs.front(), "000/2008-04-01/walk/0");
}

TEST(RunDirectory, NeverReused) {
  const auto parent = fresh_dir("trajmode_rundir_test");
  const auto a = create_run_directory(parent);
  const auto b = create_run_directory(parent);
  EXPECT_EQ(a.filename(), "run-0001");
  EXPECT_EQ(b.filename(), "run-0002");
  fs::remove_all(parent);
}

TEST(RunExperiment, EndToEndDeterministic) {
  const auto root = fresh_dir("trajmode_run_data");
  write_geolife_tree(root, generate_dataset({}));
  const auto out = fresh_dir("trajmode_run_out");
  ExperimentConfig cfg;
  cfg.dataset_root = root;
  cfg.seed = 10;
  cfg.output_dir = out;
  const auto first = run_experiment(cfg);
  const auto second = run_experiment(cfg);
  EXPECT_EQ(first.report.mean_accuracy, 1.0);
  EXPECT_EQ(first.segments, 6u * 4u * 2u);
  EXPECT_NE(first.run_dir, second.run_dir);
  for (const char* f : {"report.json", "summary.csv", "confusion.csv", "features.csv", "config.json"}) {
    EXPECT_EQ(slurp(first.run_dir / f), slurp(second.run_dir / f)) << f;
  }
  const auto manifest = nlohmann::json::parse(slurp(first.run_dir / "manifest.json"));
  EXPECT_EQ(manifest.at("version"), std::string(version()));
  EXPECT_EQ(ExperimentConfig::from_json(manifest.at("config")).to_json(), cfg.to_json());

  cfg.cv_mode = CvMode::user_oriented;
  SyntheticDatasetOptions three;
  three.users = 3;
  const auto small = fresh_dir("trajmode_run_small");
  write_geolife_tree(small, generate_dataset(three));
  cfg.dataset_root = small;
  EXPECT_THROW((void)run_experiment(cfg), ConfigError);

  cfg.dataset_root = root / "missing";
  EXPECT_THROW((void)run_experiment(cfg), DataError);
  for (const auto& p : {root, out, small}) fs::remove_all(p);
}
