#include "dvae/experiments/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <stdexcept>
#include <unordered_set>

#include <Eigen/Eigenvalues>

#include "dvae/ad/checkpoint.hpp"
#include "dvae/dag/algorithms.hpp"
#include "dvae/dag/validity.hpp"
#include "dvae/scoring/bayesnet.hpp"
#include "dvae/scoring/computation.hpp"
#include "dvae/vae/metrics.hpp"

#ifndef DVAE_VERSION
#define DVAE_VERSION "unknown"
#endif

namespace dvae::experiments {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

void log(const Common& c, const std::string& msg) {
  if (c.verbose) std::cerr << msg << "\n";
}

// Scores that can be written as JSON numbers; -inf becomes null.
std::optional<double> finite(std::optional<double> v) {
  return v && std::isfinite(*v) ? v : std::nullopt;
}

}  // namespace

OutputLock::OutputLock(const fs::path& out_dir) : path_(out_dir / ".lock") {
  fs::create_directories(out_dir);
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (!f) throw std::runtime_error("output directory '" + out_dir.string() + "' is locked by another run (" +
                                   path_.string() + ")");
  std::fclose(f);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

RunManifest::RunManifest(std::string command, nlohmann::json config, std::uint64_t seed, fs::path out_dir)
    : command_(std::move(command)),
      config_(std::move(config)),
      seed_(seed),
      out_dir_(std::move(out_dir)),
      start_(std::chrono::steady_clock::now()),
      last_(start_) {}

void RunManifest::add_output(const fs::path& path) { outputs_.push_back(path.filename().string()); }

void RunManifest::mark(const std::string& phase) {
  const auto now = std::chrono::steady_clock::now();
  timings_[phase] = std::chrono::duration<double>(now - last_).count();
  last_ = now;
}

void RunManifest::write() const {
  nlohmann::json j{{"command", command_},
                   {"config", config_},
                   {"seed", seed_},
                   {"code_version", code_version()},
                   {"outputs", outputs_},
                   {"timings_seconds", timings_},
                   {"status", finished_ ? "complete" : "running"}};
  ad::write_text_file(out_dir_ / "manifest.json", j.dump(2) + "\n");
}

void RunManifest::finish() {
  timings_["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  finished_ = true;
  for (const auto& o : outputs_)
    if (!fs::exists(out_dir_ / o)) throw std::logic_error("manifest names missing output '" + o + "'");
  write();
}

std::string code_version() { return DVAE_VERSION; }

std::vector<dag::Dag> to_model_space(const std::vector<dag::ScoredDag>& items, const dag::Vocab& vocab) {
  std::vector<dag::Dag> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(dag::to_model_space(item.dag, vocab));
  return out;
}

std::unique_ptr<model::DVae> load_model(const fs::path& path) {
  const auto j = nlohmann::json::parse(ad::read_text_file(path));
  return model::DVae::from_json(j.contains("model") ? j.at("model") : j);
}

bo::Oracle default_oracle(dag::Domain domain, const std::optional<fs::path>& bn_data) {
  switch (domain) {
    case dag::Domain::bayes_net: {
      const auto data = bn_data ? scoring::read_bn_data(*bn_data) : scoring::standard_bn_data();
      auto scorer = std::make_shared<const scoring::BicScorer>(data, dag::Vocab::bayes_net(data.names));
      return [scorer](const dag::Dag& d) -> std::optional<double> {
        return finite(scorer->score(d));
      };
    }
    case dag::Domain::neural_arch:
      return [](const dag::Dag& d) -> std::optional<double> {
        if (!dag::validity_check_nn(d, dag::Vocab::neural_arch()).valid()) return std::nullopt;
        return scoring::nn_proxy_score(d);
      };
    case dag::Domain::generic: break;
  }
  throw std::invalid_argument("no oracle for generic dags");
}

namespace {

std::vector<dag::ScoredDag> read_items(const fs::path& path, dag::Domain domain) {
  return dag::read_dataset(path, dag::default_vocab(domain));
}

dag::Domain domain_of(const model::DVae& m) { return m.config().domain; }

}  // namespace

void cmd_gen_data(const Common& common, const GenDataOptions& options) {
  if (options.domain == dag::Domain::generic) throw std::invalid_argument("gen-data supports nn and bn");
  if (options.count < 1) throw std::invalid_argument("count must be positive");
  OutputLock lock(common.out_dir);
  const dag::Vocab vocab = dag::default_vocab(options.domain);
  nlohmann::json config{{"domain", std::string(dag::to_string(options.domain))},
                        {"count", options.count},
                        {"layers", options.layers},
                        {"skip_prob", options.skip_prob},
                        {"edge_prob", options.edge_prob},
                        {"train_fraction", options.train_fraction}};
  RunManifest manifest("gen-data", config, common.seed, common.out_dir);
  manifest.write();

  Rng rng(common.seed);
  const double edge_prob =
      options.edge_prob > 0.0 ? options.edge_prob : dag::default_bn_edge_prob(vocab.operation_types().size());
  std::vector<dag::ScoredDag> items;
  std::unordered_set<std::string> seen;
  const std::size_t max_attempts = 1000 * options.count;
  for (std::size_t attempt = 0; items.size() < options.count; ++attempt) {
    if (attempt >= max_attempts) throw std::runtime_error("could not generate enough distinct dags");
    dag::Dag d = options.domain == dag::Domain::neural_arch
                     ? dag::random_nn_dag(rng, options.layers, vocab, options.skip_prob)
                     : dag::random_bn_dag(rng, vocab, edge_prob);
    if (!seen.insert(vae::identity_key(d, vocab)).second) continue;
    items.push_back({std::move(d), std::nullopt});
  }
  manifest.mark("generate");

  const bo::Oracle oracle = default_oracle(options.domain);
  for_each_index(items.size(), common.exec, [&](std::size_t i) { items[i].score = oracle(items[i].dag); });
  manifest.mark("score");

  const auto n_train = static_cast<std::size_t>(std::floor(options.train_fraction * static_cast<double>(items.size())));
  const std::vector<dag::ScoredDag> train(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(n_train));
  const std::vector<dag::ScoredDag> test(items.begin() + static_cast<std::ptrdiff_t>(n_train), items.end());
  dag::write_dataset(common.out_dir / "train.jsonl", train, vocab);
  dag::write_dataset(common.out_dir / "test.jsonl", test, vocab);
  dag::write_vocab(common.out_dir / "vocab.json", vocab);
  manifest.add_output("train.jsonl");
  manifest.add_output("test.jsonl");
  manifest.add_output("vocab.json");
  if (options.domain == dag::Domain::bayes_net) {
    scoring::write_bn_data(common.out_dir / "bn_data.txt", scoring::standard_bn_data());
    manifest.add_output("bn_data.txt");
  }
  manifest.finish();
  log(common, "gen-data: " + std::to_string(train.size()) + " train, " + std::to_string(test.size()) + " test");
}

void cmd_train(const Common& common, const TrainOptions& options) {
  OutputLock lock(common.out_dir);
  const dag::Vocab vocab = dag::default_vocab(options.domain);
  const auto items = read_items(options.data, options.domain);
  if (items.empty()) throw std::invalid_argument("training data is empty");
  const auto dags = to_model_space(items, vocab);

  model::ModelConfig mc = model::ModelConfig::defaults_for(options.domain, vocab);
  mc.hidden = options.hidden;
  mc.latent = options.latent;
  mc.max_nodes = model::node_cap_for(dags);
  if (options.bidirectional) mc.bidirectional = *options.bidirectional;

  Rng seeds(common.seed);
  const std::uint64_t init_seed = seeds.next_u64();
  vae::TrainConfig tc = options.train;
  tc.seed = seeds.next_u64();

  nlohmann::json config{{"data", options.data.string()}, {"model", mc.to_json()}, {"train", tc.to_json()},
                        {"resume", options.resume ? options.resume->string() : ""}};
  config["model"].erase("vocab");
  RunManifest manifest("train", config, common.seed, common.out_dir);
  manifest.write();

  model::DVae model(mc, init_seed);
  vae::TrainOptions to;
  to.exec = common.exec;
  to.checkpoint_path = common.out_dir / "checkpoint.json";
  to.resume_from = options.resume;
  to.on_epoch = [&](std::size_t epoch, double loss, double lr) {
    log(common, "epoch " + std::to_string(epoch + 1) + " loss " + fmt(loss) + " lr " + fmt(lr));
  };
  const vae::TrainResult result = vae::train(model, dags, tc, to);
  manifest.mark("train");

  std::string csv = "epoch,loss\n";
  for (std::size_t e = 0; e < result.loss_history.size(); ++e) csv += std::to_string(e + 1) + "," + fmt(result.loss_history[e]) + "\n";
  ad::write_text_file(common.out_dir / "loss.csv", csv);
  model.save(common.out_dir / "model.json");
  if (!fs::exists(to.checkpoint_path)) vae::save_checkpoint(to.checkpoint_path, model, tc, result.state);
  manifest.add_output("checkpoint.json");
  manifest.add_output("model.json");
  manifest.add_output("loss.csv");
  manifest.finish();
}

void cmd_eval_basic(const Common& common, const EvalOptions& options) {
  OutputLock lock(common.out_dir);
  const auto model = load_model(options.checkpoint);
  const auto& vocab = model->config().vocab;
  RunManifest manifest("eval-basic",
                       {{"checkpoint", options.checkpoint.string()},
                        {"train", options.train.string()},
                        {"test", options.test.string()},
                        {"z_samples", 10},
                        {"decodes", 10},
                        {"prior_samples", 1000}},
                       common.seed, common.out_dir);
  manifest.write();
  const auto train = to_model_space(read_items(options.train, domain_of(*model)), vocab);
  const auto test = to_model_space(read_items(options.test, domain_of(*model)), vocab);
  const vae::MetricsReport report = vae::basic_metrics(*model, train, test, common.seed, common.exec);
  manifest.mark("metrics");
  ad::write_text_file(common.out_dir / "metrics.json", report.to_json().dump(2) + "\n");
  manifest.add_output("metrics.json");
  manifest.finish();
}

namespace {

struct Embedded {
  bo::Matrix x;
  bo::Vector y;
};

Embedded embed_scored(const model::DVae& model, const std::vector<dag::ScoredDag>& items, Execution exec) {
  std::vector<dag::Dag> dags;
  std::vector<double> scores;
  for (const auto& item : items) {
    if (!item.score || !std::isfinite(*item.score)) continue;
    dags.push_back(dag::to_model_space(item.dag, model.config().vocab));
    scores.push_back(*item.score);
  }
  if (dags.empty()) throw std::invalid_argument("dataset has no scored dags");
  Embedded e;
  e.x = bo::to_matrix(vae::embed_means(model, dags, exec));
  e.y = Eigen::Map<const bo::Vector>(scores.data(), static_cast<Eigen::Index>(scores.size()));
  return e;
}

}  // namespace

void cmd_eval_predictive(const Common& common, const PredictiveOptions& options) {
  OutputLock lock(common.out_dir);
  const auto model = load_model(options.data.checkpoint);
  RunManifest manifest("eval-predictive",
                       {{"checkpoint", options.data.checkpoint.string()},
                        {"train", options.data.train.string()},
                        {"test", options.data.test.string()},
                        {"repeats", options.repeats},
                        {"gp_steps", options.gp.steps},
                        {"gp_learning_rate", options.gp.learning_rate},
                        {"gp_max_fit_points", options.gp.max_fit_points}},
                       common.seed, common.out_dir);
  manifest.write();
  const Embedded train = embed_scored(*model, read_items(options.data.train, domain_of(*model)), common.exec);
  const Embedded test = embed_scored(*model, read_items(options.data.test, domain_of(*model)), common.exec);
  manifest.mark("embed");
  const bo::PredictiveReport report =
      bo::predictive_eval(train.x, train.y, test.x, test.y, options.repeats, common.seed, options.gp, common.exec);
  manifest.mark("gp");
  ad::write_text_file(common.out_dir / "predictive.json", report.to_json().dump(2) + "\n");
  manifest.add_output("predictive.json");
  manifest.finish();
}

void cmd_bo(const Common& common, const BoOptions& options) {
  OutputLock lock(common.out_dir);
  const auto model = load_model(options.checkpoint);
  const auto& vocab = model->config().vocab;
  nlohmann::json config = options.bo.to_json();
  config["checkpoint"] = options.checkpoint.string();
  config["train"] = options.train.string();
  config["trials"] = options.trials;
  RunManifest manifest("bo", config, common.seed, common.out_dir);
  manifest.write();

  const auto items = read_items(options.train, domain_of(*model));
  const Embedded train = embed_scored(*model, items, common.exec);
  std::vector<dag::Dag> train_dags;
  for (const auto& item : items) train_dags.push_back(dag::to_model_space(item.dag, vocab));
  const vae::LatentMoments moments = vae::embedding_moments(*model, train_dags, common.exec);
  const bo::Oracle oracle = default_oracle(domain_of(*model), options.bn_data);
  const double train_best = train.y.maxCoeff();
  manifest.mark("embed");

  std::string csv = "trial,round,mean_score,best_so_far,method\n";
  nlohmann::json trials = nlohmann::json::array();
  Rng seeds(common.seed);
  for (std::size_t t = 0; t < options.trials; ++t) {
    bo::BoConfig c = options.bo;
    c.seed = seeds.next_u64();
    const bo::SearchHistory bo_hist = bo::bo_loop(*model, train.x, train.y, oracle, c, common.exec);
    const bo::SearchHistory rs_hist = bo::random_search(*model, moments, oracle, c, common.exec);
    nlohmann::json trial{{"trial", t}};
    for (const auto& [name, hist] : {std::pair<std::string, const bo::SearchHistory*>{"bo", &bo_hist},
                                     std::pair<std::string, const bo::SearchHistory*>{"random", &rs_hist}}) {
      const std::string file = "history_" + name + "_" + std::to_string(t) + ".jsonl";
      ad::write_text_file(common.out_dir / file, bo::history_jsonl(*hist, vocab));
      manifest.add_output(file);
      double total = 0.0;
      std::size_t rounds = 0;
      for (const auto& s : bo::summarize(*hist)) {
        csv += std::to_string(t) + "," + std::to_string(s.round) + "," + fmt(s.mean_score) + "," +
               fmt(s.best_so_far) + "," + name + "\n";
        if (s.mean_score) {
          total += *s.mean_score;
          ++rounds;
        }
      }
      std::size_t invalid = 0;
      for (const auto& e : hist->entries) invalid += !e.score;
      trial[name] = {{"mean_round_score", rounds ? nlohmann::json(total / rounds) : nlohmann::json(nullptr)},
                     {"best", opt_json(hist->best())},
                     {"invalid", invalid}};
    }
    trials.push_back(trial);
    manifest.mark("trial_" + std::to_string(t));
    log(common, "bo trial " + std::to_string(t) + ": " + trial.dump());
  }
  ad::write_text_file(common.out_dir / "bo_summary.csv", csv);
  ad::write_text_file(common.out_dir / "bo_report.json",
                      nlohmann::json{{"train_best", train_best}, {"trials", trials}}.dump(2) + "\n");
  manifest.add_output("bo_summary.csv");
  manifest.add_output("bo_report.json");
  manifest.finish();
}

std::vector<std::vector<double>> great_circle(const std::vector<double>& z0, std::size_t points, Rng& rng) {
  double r2 = 0.0;
  for (double v : z0) r2 += v * v;
  if (!(r2 > 0.0)) throw std::invalid_argument("great circle through the origin is degenerate");
  const double r = std::sqrt(r2);
  std::vector<double> v(z0.size());
  double vn = 0.0;
  while (!(vn > 1e-12)) {
    for (double& e : v) e = rng.normal();
    double dot = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) dot += v[i] * z0[i];
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= dot / r2 * z0[i];
    vn = 0.0;
    for (double e : v) vn += e * e;
    vn = std::sqrt(vn);
  }
  for (double& e : v) e /= vn;
  std::vector<std::vector<double>> out(points, std::vector<double>(z0.size()));
  for (std::size_t k = 0; k < points; ++k) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(points);
    const double c = k == 0 ? 1.0 : std::cos(theta), s = k == 0 ? 0.0 : std::sin(theta);
    for (std::size_t i = 0; i < z0.size(); ++i) out[k][i] = c * z0[i] + s * r * v[i];
  }
  return out;
}

void cmd_interpolate(const Common& common, const InterpolateOptions& options) {
  OutputLock lock(common.out_dir);
  const auto model = load_model(options.checkpoint);
  const auto& vocab = model->config().vocab;
  RunManifest manifest("interpolate",
                       {{"checkpoint", options.checkpoint.string()},
                        {"start", options.start.string()},
                        {"points", options.points}},
                       common.seed, common.out_dir);
  manifest.write();
  const auto items = read_items(options.start, domain_of(*model));
  if (items.empty()) throw std::invalid_argument("start file has no dag");
  const auto report = dag::check_domain_validity(items[0].dag, vocab);
  if (!report.valid()) throw std::invalid_argument("start dag is invalid: " + report.to_string());
  const auto z0 = model->posterior(dag::to_model_space(items[0].dag, vocab)).mean;
  Rng rng(common.seed);
  const auto circle = great_circle(z0, options.points, rng);
  const std::uint64_t decode_seed = rng.next_u64();
  const bo::Oracle oracle = default_oracle(domain_of(*model));
  std::string text;
  for (std::size_t k = 0; k < circle.size(); ++k) {
    Rng dr(decode_seed);
    const dag::Dag d = dag::to_domain_space(model->decode(circle[k], dr), vocab);
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(circle.size());
    text += nlohmann::json{{"step", k},
                           {"theta", theta},
                           {"z", circle[k]},
                           {"dag", dag::to_json(d, vocab)},
                           {"score", opt_json(oracle(d))}}
                .dump() +
            "\n";
  }
  ad::write_text_file(common.out_dir / "interpolation.jsonl", text);
  manifest.add_output("interpolation.jsonl");
  manifest.finish();
}

Pca principal_components(const std::vector<std::vector<double>>& rows, std::size_t count) {
  const bo::Matrix x = bo::to_matrix(rows);
  if (x.rows() < 2) throw std::invalid_argument("pca needs at least two rows");
  if (count > static_cast<std::size_t>(x.cols())) throw std::invalid_argument("too many components requested");
  const bo::Vector mean = x.colwise().mean().transpose();
  const bo::Matrix centered = x.rowwise() - mean.transpose();
  const bo::Matrix cov = centered.transpose() * centered / static_cast<double>(x.rows());
  Eigen::SelfAdjointEigenSolver<bo::Matrix> eig(cov);
  const double total = std::max(eig.eigenvalues().sum(), 1e-300);
  Pca p;
  p.mean.assign(mean.begin(), mean.end());
  for (std::size_t k = 0; k < count; ++k) {
    const auto idx = x.cols() - 1 - static_cast<Eigen::Index>(k);  // ascending order
    bo::Vector c = eig.eigenvectors().col(idx);
    // Sign fixed by the largest-magnitude coordinate so runs agree.
    Eigen::Index arg;
    c.cwiseAbs().maxCoeff(&arg);
    if (c[arg] < 0) c = -c;
    p.components.emplace_back(c.begin(), c.end());
    p.explained.push_back(eig.eigenvalues()[idx] / total);
  }
  return p;
}

void cmd_latent_grid(const Common& common, const LatentGridOptions& options) {
  if (options.resolution < 1) throw std::invalid_argument("resolution must be positive");
  OutputLock lock(common.out_dir);
  const auto model = load_model(options.checkpoint);
  const auto& vocab = model->config().vocab;
  RunManifest manifest("latent-grid",
                       {{"checkpoint", options.checkpoint.string()},
                        {"train", options.train.string()},
                        {"resolution", options.resolution},
                        {"extent", options.extent}},
                       common.seed, common.out_dir);
  manifest.write();
  const auto items = read_items(options.train, domain_of(*model));
  std::vector<dag::Dag> dags;
  for (const auto& item : items) dags.push_back(dag::to_model_space(item.dag, vocab));
  const Pca pca = principal_components(vae::embed_means(*model, dags, common.exec), 2);
  const bo::Oracle oracle = default_oracle(domain_of(*model), options.bn_data);
  const std::size_t n = options.resolution;
  auto coord = [&](std::size_t i) {
    return n == 1 ? 0.0 : -options.extent + 2.0 * options.extent * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  const std::uint64_t decode_seed = Rng(common.seed).next_u64();
  std::vector<std::optional<double>> scores(n * n);
  for_each_index(n * n, common.exec, [&](std::size_t k) {
    const double u = coord(k / n), v = coord(k % n);
    std::vector<double> z = pca.mean;
    for (std::size_t d = 0; d < z.size(); ++d) z[d] += u * pca.components[0][d] + v * pca.components[1][d];
    Rng dr(decode_seed);
    scores[k] = oracle(dag::to_domain_space(model->decode(z, dr), vocab));
  });
  std::string csv = "u,v,score,valid\n";
  for (std::size_t k = 0; k < n * n; ++k)
    csv += fmt(coord(k / n)) + "," + fmt(coord(k % n)) + "," + fmt(scores[k]) + "," + (scores[k] ? "1" : "0") + "\n";
  ad::write_text_file(common.out_dir / "latent_grid.csv", csv);
  ad::write_text_file(common.out_dir / "pca.json",
                      nlohmann::json{{"mean", pca.mean}, {"components", pca.components}, {"explained", pca.explained}}
                              .dump(2) +
                          "\n");
  manifest.add_output("latent_grid.csv");
  manifest.add_output("pca.json");
  manifest.finish();
}

}  // namespace dvae::experiments
