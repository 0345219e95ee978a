#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dvae/bo/search.hpp"
#include "dvae/core/parallel.hpp"
#include "dvae/core/rng.hpp"
#include "dvae/dag/generators.hpp"
#include "dvae/dag/io.hpp"
#include "dvae/model/dvae.hpp"
#include "dvae/vae/train.hpp"

namespace dvae::experiments {

namespace fs = std::filesystem;

/// Held for the lifetime of a command; a second writer fails fast.
class OutputLock {
 public:
  explicit OutputLock(const fs::path& out_dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  fs::path path_;
};

/// manifest.json of a run. Written once before the work starts and again,
/// with outputs and timings, when it finishes.
class RunManifest {
 public:
  RunManifest(std::string command, nlohmann::json config, std::uint64_t seed, fs::path out_dir);
  void add_output(const fs::path& path);
  void mark(const std::string& phase);
  void write() const;
  void finish();

 private:
  std::string command_;
  nlohmann::json config_;
  std::uint64_t seed_;
  fs::path out_dir_;
  std::vector<std::string> outputs_;
  nlohmann::json timings_ = nlohmann::json::object();
  std::chrono::steady_clock::time_point start_;
  std::chrono::steady_clock::time_point last_;
  bool finished_ = false;
};

struct Common {
  std::uint64_t seed = 1;
  fs::path out_dir = "out";
  Execution exec = Execution::parallel;
  /// Echo progress to stderr.
  bool verbose = false;
};

std::string code_version();

/// Domain-space dataset converted to model space for the model.
std::vector<dag::Dag> to_model_space(const std::vector<dag::ScoredDag>& items, const dag::Vocab& vocab);
/// Accepts a bare model document or a training checkpoint.
std::unique_ptr<model::DVae> load_model(const fs::path& path);
/// BIC against the committed data (bayes-net) or the proxy score
/// (neural-arch); nullopt for invalid dags.
bo::Oracle default_oracle(dag::Domain domain, const std::optional<fs::path>& bn_data = std::nullopt);

struct GenDataOptions {
  dag::Domain domain = dag::Domain::bayes_net;
  std::size_t count = 2000;
  /// Neural-arch operation layers.
  std::size_t layers = 6;
  double skip_prob = dag::kDefaultSkipProb;
  /// Bayes-net edge probability; 0 selects 2 / (k - 1).
  double edge_prob = 0.0;
  double train_fraction = 0.9;
};
/// train.jsonl / test.jsonl of distinct valid dags with scores, plus the
/// vocabulary and (bayes-net) the scoring data.
void cmd_gen_data(const Common& common, const GenDataOptions& options);

struct TrainOptions {
  fs::path data;
  dag::Domain domain = dag::Domain::bayes_net;
  std::size_t hidden = 64;
  std::size_t latent = 16;
  vae::TrainConfig train;
  std::optional<bool> bidirectional;
  std::optional<fs::path> resume;
};
/// checkpoint.json, model.json and loss.csv (epoch, loss, learning_rate).
void cmd_train(const Common& common, const TrainOptions& options);

struct EvalOptions {
  fs::path checkpoint;
  fs::path train;
  fs::path test;
};
/// metrics.json with reconstruction, validity, uniqueness and novelty.
void cmd_eval_basic(const Common& common, const EvalOptions& options);

struct PredictiveOptions {
  EvalOptions data;
  std::size_t repeats = 10;
  bo::GpFitConfig gp;
};
/// predictive.json with RMSE and Pearson r, mean and std over repeats.
void cmd_eval_predictive(const Common& common, const PredictiveOptions& options);

struct BoOptions {
  fs::path checkpoint;
  fs::path train;
  std::size_t trials = 5;
  bo::BoConfig bo;
  std::optional<fs::path> bn_data;
};
/// bo_summary.csv (trial, round, mean_score, best_so_far, method), one
/// history file per trial and method, and bo_report.json.
void cmd_bo(const Common& common, const BoOptions& options);

struct InterpolateOptions {
  fs::path checkpoint;
  /// First dag of this dataset file is the start point.
  fs::path start;
  std::size_t points = 35;
};
/// interpolation.jsonl: {"step", "theta", "z", "dag", "score"} per point.
void cmd_interpolate(const Common& common, const InterpolateOptions& options);

struct LatentGridOptions {
  fs::path checkpoint;
  fs::path train;
  std::size_t resolution = 7;
  double extent = 0.3;
  std::optional<fs::path> bn_data;
};
/// latent_grid.csv (u, v, score, valid) and pca.json.
void cmd_latent_grid(const Common& common, const LatentGridOptions& options);

/// Great-circle points cos(t) z0 + sin(t) |z0| v for t = 2 pi k / points.
std::vector<std::vector<double>> great_circle(const std::vector<double>& z0, std::size_t points, Rng& rng);

struct Pca {
  std::vector<double> mean;
  std::vector<std::vector<double>> components;  // unit rows, by decreasing variance
  std::vector<double> explained;                // fraction of total variance
};
Pca principal_components(const std::vector<std::vector<double>>& rows, std::size_t count);

}  // namespace dvae::experiments
