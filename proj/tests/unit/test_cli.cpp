#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"

#include "dvae/ad/checkpoint.hpp"
#include "dvae/dag/algorithms.hpp"
#include "dvae/dag/validity.hpp"
#include "dvae/experiments/commands.hpp"

using namespace dvae;
using namespace dvae::experiments;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dvae_cli_" + std::to_string(getpid())) / name;
  fs::remove_all(p);
  return p;
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::string slurp(const fs::path& p) { return ad::read_text_file(p); }

Common common_for(const fs::path& dir, std::uint64_t seed = 7) {
  Common c;
  c.seed = seed;
  c.out_dir = dir;
  return c;
}

// Small bayes-net dataset plus a two-epoch model, shared by the command tests.
struct Fixture {
  fs::path data = scratch("data");
  fs::path train = scratch("train");
  Fixture() {
    GenDataOptions g;
    g.count = 40;
    cmd_gen_data(common_for(data), g);
    TrainOptions t;
    t.data = data / "train.jsonl";
    t.hidden = 8;
    t.latent = 4;
    t.train.epochs = 2;
    t.train.batch_size = 8;
    cmd_train(common_for(train), t);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

}  // namespace

TEST_CASE("gen-data split, validity and determinism") {
  for (const auto domain : {dag::Domain::bayes_net, dag::Domain::neural_arch}) {
    const auto a = scratch("gen_a"), b = scratch("gen_b");
    GenDataOptions g;
    g.domain = domain;
    g.count = 10;
    cmd_gen_data(common_for(a), g);
    cmd_gen_data(common_for(b), g);
    CHECK(lines_of(a / "train.jsonl").size() == 9);
    CHECK(lines_of(a / "test.jsonl").size() == 1);
    CHECK(slurp(a / "train.jsonl") == slurp(b / "train.jsonl"));
    CHECK(slurp(a / "test.jsonl") == slurp(b / "test.jsonl"));
    const auto vocab = dag::read_vocab(a / "vocab.json");
    for (const auto& item : dag::read_dataset(a / "train.jsonl", vocab)) {
      CHECK(dag::check_domain_validity(item.dag, vocab).valid());
      CHECK(item.score.has_value());
    }
    const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
    CHECK(manifest.at("command") == "gen-data");
    CHECK(manifest.at("status") == "complete");
    for (const auto& o : manifest.at("outputs")) CHECK(fs::exists(a / o.get<std::string>()));
    CHECK(fs::exists(a / "bn_data.txt") == (domain == dag::Domain::bayes_net));
  }
}

TEST_CASE("output directory lock") {
  const auto dir = scratch("lock");
  {
    OutputLock first(dir);
    CHECK_THROWS_AS(OutputLock second(dir), std::runtime_error);
    GenDataOptions g;
    g.count = 10;
    CHECK_THROWS(cmd_gen_data(common_for(dir), g));
  }
  CHECK_NOTHROW(OutputLock again(dir));
}

TEST_CASE("train writes loss curve and resumes exactly") {
  const auto& f = fixture();
  CHECK(lines_of(f.train / "loss.csv").size() == 1 + 2);
  const auto manifest = nlohmann::json::parse(slurp(f.train / "manifest.json"));
  bool names_checkpoint = false;
  for (const auto& o : manifest.at("outputs")) names_checkpoint |= o == "checkpoint.json";
  CHECK(names_checkpoint);
  CHECK(load_model(f.train / "model.json")->config().hidden == 8);
  CHECK(load_model(f.train / "checkpoint.json")->config().latent == 4);

  TrainOptions t;
  t.data = f.data / "train.jsonl";
  t.hidden = 8;
  t.latent = 4;
  t.train.batch_size = 8;
  t.train.epochs = 4;
  const auto full = scratch("full"), part = scratch("part"), rest = scratch("rest");
  cmd_train(common_for(full), t);
  t.train.epochs = 2;
  cmd_train(common_for(part), t);
  t.train.epochs = 4;
  t.resume = part / "checkpoint.json";
  cmd_train(common_for(rest), t);
  CHECK(slurp(full / "model.json") == slurp(rest / "model.json"));
  CHECK(lines_of(rest / "loss.csv").size() == 1 + 4);
  CHECK(slurp(full / "loss.csv") == slurp(rest / "loss.csv"));
}

TEST_CASE("eval commands") {
  const auto& f = fixture();
  EvalOptions e{f.train / "model.json", f.data / "train.jsonl", f.data / "test.jsonl"};
  const auto basic = scratch("basic");
  cmd_eval_basic(common_for(basic), e);
  const auto m = nlohmann::json::parse(slurp(basic / "metrics.json"));
  for (const char* key : {"reconstruction", "validity", "uniqueness", "novelty"}) {
    REQUIRE(m.contains(key));
    // Uniqueness and novelty are undefined without a valid decode.
    if (m.at(key).is_null()) {
      CHECK(m.at("validity").get<double>() == 0.0);
      continue;
    }
    CHECK(m.at(key).get<double>() >= 0.0);
    CHECK(m.at(key).get<double>() <= 1.0);
  }

  PredictiveOptions p;
  p.data = e;
  p.repeats = 3;
  p.gp.steps = 5;
  const auto pred = scratch("pred");
  cmd_eval_predictive(common_for(pred), p);
  const auto r = nlohmann::json::parse(slurp(pred / "predictive.json"));
  for (const char* key : {"rmse_mean", "rmse_std", "pearson_mean", "pearson_std"}) CHECK(r.contains(key));
  CHECK(r.at("rmse_std").get<double>() == 0.0);
}

TEST_CASE("bo command artifacts") {
  const auto& f = fixture();
  BoOptions o;
  o.checkpoint = f.train / "model.json";
  o.train = f.data / "train.jsonl";
  o.trials = 2;
  o.bo.iterations = 3;
  o.bo.batch = 2;
  o.bo.candidates.pool = 50;
  o.bo.gp.steps = 5;
  const auto a = scratch("bo_a"), b = scratch("bo_b");
  cmd_bo(common_for(a), o);
  cmd_bo(common_for(b), o);
  const auto csv = lines_of(a / "bo_summary.csv");
  CHECK(csv.front() == "trial,round,mean_score,best_so_far,method");
  CHECK(csv.size() == 1 + 2 * 3 * 2);
  CHECK(slurp(a / "bo_summary.csv") == slurp(b / "bo_summary.csv"));
  const auto vocab = dag::read_vocab(f.data / "vocab.json");
  for (const char* file : {"history_bo_0.jsonl", "history_random_1.jsonl"}) {
    CHECK(slurp(a / file) == slurp(b / file));
    const auto lines = lines_of(a / file);
    CHECK(lines.size() == 6);
    for (const auto& line : lines) {
      const auto d = nlohmann::json::parse(line).at("dag");
      CHECK(dag::to_json(dag::from_json(d, vocab), vocab) == d);
    }
  }
  CHECK(nlohmann::json::parse(slurp(a / "bo_report.json")).at("trials").size() == 2);
}

TEST_CASE("interpolation and latent grid") {
  const auto& f = fixture();
  InterpolateOptions io;
  io.checkpoint = f.train / "model.json";
  io.start = f.data / "test.jsonl";
  const auto interp = scratch("interp");
  cmd_interpolate(common_for(interp), io);
  const auto lines = lines_of(interp / "interpolation.jsonl");
  CHECK(lines.size() == 35);
  const auto model = load_model(io.checkpoint);
  const auto vocab = model->config().vocab;
  const auto start = dag::read_dataset(io.start, vocab).front().dag;
  const auto z0 = model->posterior(dag::to_model_space(start, vocab)).mean;
  const auto first = nlohmann::json::parse(lines.front());
  CHECK(first.at("theta") == 0.0);
  CHECK(first.at("z").get<std::vector<double>>() == z0);
  for (const auto& line : lines) {
    const auto j = nlohmann::json::parse(line);
    const auto d = dag::from_json(j.at("dag"), vocab);
    CHECK(dag::is_acyclic(d));
    double norm = 0;
    for (double v : j.at("z").get<std::vector<double>>()) norm += v * v;
    double r0 = 0;
    for (double v : z0) r0 += v * v;
    CHECK(norm == doctest::Approx(r0).epsilon(1e-9));
  }

  LatentGridOptions g;
  g.checkpoint = io.checkpoint;
  g.train = f.data / "train.jsonl";
  g.resolution = 4;
  const auto grid = scratch("grid");
  cmd_latent_grid(common_for(grid), g);
  CHECK(lines_of(grid / "latent_grid.csv").size() == 1 + 16);
  const auto pca = nlohmann::json::parse(slurp(grid / "pca.json"));
  const auto c = pca.at("components").get<std::vector<std::vector<double>>>();
  REQUIRE(c.size() == 2);
  auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  CHECK(std::abs(dot(c[0], c[0]) - 1) < 1e-10);
  CHECK(std::abs(dot(c[1], c[1]) - 1) < 1e-10);
  CHECK(std::abs(dot(c[0], c[1])) < 1e-10);
  const auto explained = pca.at("explained").get<std::vector<double>>();
  CHECK(explained[0] >= explained[1]);
}

TEST_CASE("great circle") {
  Rng rng(3);
  const std::vector<double> z0{0.3, -1.2, 0.5};
  const auto circle = great_circle(z0, 35, rng);
  CHECK(circle.size() == 35);
  CHECK(circle[0] == z0);
  double n0 = 0, nk = 0, along = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    n0 += z0[i] * z0[i];
    nk += circle[10][i] * circle[10][i];
    along += circle[10][i] * z0[i];
  }
  CHECK(nk == doctest::Approx(n0).epsilon(1e-12));
  CHECK(along / n0 == doctest::Approx(std::cos(2 * std::numbers::pi * 10 / 35)).epsilon(1e-12));
  CHECK_THROWS(great_circle({0.0, 0.0}, 35, rng));
}

TEST_CASE("principal components") {
  Rng rng(8);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 500; ++i) rows.push_back({3.0 * rng.normal(), 0.5 * rng.normal(), 0.1 * rng.normal()});
  const auto p = principal_components(rows, 2);
  CHECK(std::abs(p.components[0][0]) > 0.99);
  CHECK(std::abs(p.components[1][1]) > 0.99);
  CHECK(p.explained[0] > p.explained[1]);
  CHECK_THROWS(principal_components(rows, 4));
}
