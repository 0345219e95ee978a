#include "dvae/bo/search.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "dvae/core/rng.hpp"
#include "dvae/dag/algorithms.hpp"
#include "dvae/dag/io.hpp"

namespace dvae::bo {

void BoConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("bo needs at least one iteration");
  if (batch < 1 || batch > candidates.pool) throw std::invalid_argument("batch must lie in [1, candidate pool]");
}

nlohmann::json BoConfig::to_json() const {
  return {{"iterations", iterations},
          {"batch", batch},
          {"pool", candidates.pool},
          {"expand", candidates.expand},
          {"local_fraction", candidates.local_fraction},
          {"top_k", candidates.top_k},
          {"local_scale", candidates.local_scale},
          {"xi", xi},
          {"seed", seed},
          {"gp_steps", gp.steps},
          {"gp_learning_rate", gp.learning_rate},
          {"gp_max_fit_points", gp.max_fit_points}};
}

std::optional<double> SearchHistory::best() const {
  std::optional<double> b;
  for (const auto& e : entries)
    if (e.score && (!b || *e.score > *b)) b = e.score;
  return b;
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw std::invalid_argument("rows differ in length");
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return m;
}

namespace {

using ScoreCache = std::map<std::string, std::optional<double>>;

// Decodes each z once with its own seed, then scores every dag not yet in
// the cache. Appends entries for round `round`.
void evaluate_round(const model::DVae& model, const std::vector<std::vector<double>>& zs, std::size_t round,
                    Rng& rng, const Oracle& oracle, ScoreCache& cache, SearchHistory& history, Execution exec) {
  const auto& vocab = model.config().vocab;
  std::vector<std::uint64_t> seeds(zs.size());
  for (auto& s : seeds) s = rng.next_u64();
  std::vector<dag::Dag> dags(zs.size());
  std::vector<std::string> keys(zs.size());
  for_each_index(zs.size(), exec, [&](std::size_t i) {
    Rng local(seeds[i]);
    dags[i] = dag::to_domain_space(model.decode(zs[i], local), vocab);
    keys[i] = vae::identity_key(dags[i], vocab);
  });
  std::vector<std::size_t> fresh;
  for (std::size_t i = 0; i < zs.size(); ++i) {
    if (cache.contains(keys[i])) continue;
    cache[keys[i]] = std::nullopt;
    fresh.push_back(i);
  }
  std::vector<std::optional<double>> scores(fresh.size());
  for_each_index(fresh.size(), exec, [&](std::size_t k) { scores[k] = oracle(dags[fresh[k]]); });
  for (std::size_t k = 0; k < fresh.size(); ++k) {
    if (scores[k] && !std::isfinite(*scores[k])) scores[k] = std::nullopt;
    cache[keys[fresh[k]]] = scores[k];
  }
  for (std::size_t i = 0; i < zs.size(); ++i)
    history.entries.push_back({round, i, zs[i], std::move(dags[i]), cache[keys[i]]});
}

}  // namespace

SearchHistory bo_loop(const model::DVae& model, const Matrix& train_x, const Vector& train_y, const Oracle& oracle,
                      const BoConfig& config, Execution exec) {
  config.validate();
  if (train_x.rows() != train_y.size() || train_x.rows() < 2) throw std::invalid_argument("bo needs seed data");
  Rng rng(config.seed);
  Matrix x = train_x;
  Vector y = train_y;
  ScoreCache cache;
  SearchHistory history;
  history.iterations = config.iterations;
  history.batch = config.batch;
  for (std::size_t round = 0; round < config.iterations; ++round) {
    GpFitConfig gp_config = config.gp;
    gp_config.seed = rng.next_u64();
    const GpModel gp = GpModel::fit(x, y, gp_config);
    const Matrix candidates = sample_candidates(x, y, config.candidates, rng);
    const Proposal proposal = propose_batch_kb(gp, candidates, config.batch, config.xi, exec);
    std::vector<std::vector<double>> zs;
    for (std::size_t c : proposal.chosen) {
      const auto row = candidates.row(static_cast<Eigen::Index>(c));
      zs.emplace_back(row.begin(), row.end());
    }
    const std::size_t first = history.entries.size();
    evaluate_round(model, zs, round, rng, oracle, cache, history, exec);
    std::size_t valid = 0;
    for (std::size_t i = first; i < history.entries.size(); ++i) valid += history.entries[i].score.has_value();
    const Eigen::Index old = x.rows();
    x.conservativeResize(old + static_cast<Eigen::Index>(valid), Eigen::NoChange);
    y.conservativeResize(old + static_cast<Eigen::Index>(valid));
    Eigen::Index at = old;
    for (std::size_t i = first; i < history.entries.size(); ++i) {
      const auto& e = history.entries[i];
      if (!e.score) continue;
      for (std::size_t k = 0; k < e.z.size(); ++k) x(at, static_cast<Eigen::Index>(k)) = e.z[k];
      y[at++] = *e.score;
    }
  }
  return history;
}

SearchHistory random_search(const model::DVae& model, const vae::LatentMoments& moments, const Oracle& oracle,
                            const BoConfig& config, Execution exec) {
  config.validate();
  Rng rng(config.seed);
  ScoreCache cache;
  SearchHistory history;
  history.iterations = config.iterations;
  history.batch = config.batch;
  for (std::size_t round = 0; round < config.iterations; ++round) {
    std::vector<std::vector<double>> zs(config.batch);
    for (auto& z : zs) z = vae::sample_rescaled_prior(moments, rng);
    evaluate_round(model, zs, round, rng, oracle, cache, history, exec);
  }
  return history;
}

std::vector<RoundSummary> summarize(const SearchHistory& history) {
  std::vector<RoundSummary> out(history.iterations);
  std::optional<double> best;
  for (std::size_t r = 0; r < history.iterations; ++r) {
    RoundSummary& s = out[r];
    s.round = r;
    double total = 0.0;
    for (const auto& e : history.entries) {
      if (e.round != r || !e.score) continue;
      ++s.valid;
      total += *e.score;
      if (!best || *e.score > *best) best = e.score;
    }
    if (s.valid) s.mean_score = total / static_cast<double>(s.valid);
    s.best_so_far = best;
  }
  return out;
}

std::string history_jsonl(const SearchHistory& history, const dag::Vocab& vocab) {
  std::string text;
  for (const auto& e : history.entries) {
    nlohmann::json j{{"round", e.round},
                     {"index", e.index},
                     {"z", e.z},
                     {"dag", dag::to_json(e.dag, vocab)},
                     {"score", e.score ? nlohmann::json(*e.score) : nlohmann::json(nullptr)},
                     {"valid", e.score.has_value()}};
    text += j.dump() + "\n";
  }
  return text;
}

std::optional<double> pearson(const Vector& a, const Vector& b) {
  if (a.size() != b.size() || a.size() < 2) return std::nullopt;
  const Vector da = a.array() - a.mean();
  const Vector db = b.array() - b.mean();
  const double den = std::sqrt(da.squaredNorm() * db.squaredNorm());
  if (!(den > 0.0)) return std::nullopt;
  return da.dot(db) / den;
}

namespace {

double mean_of(const std::vector<double>& v) {
  double t = 0.0;
  for (double x : v) t += x;
  return v.empty() ? 0.0 : t / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double t = 0.0;
  for (double x : v) t += (x - m) * (x - m);
  return v.empty() ? 0.0 : std::sqrt(t / static_cast<double>(v.size()));
}

std::optional<std::vector<double>> all_defined(const std::vector<std::optional<double>>& v) {
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x) return std::nullopt;
    out.push_back(*x);
  }
  return out;
}

}  // namespace

double PredictiveReport::rmse_mean() const { return mean_of(rmse); }
double PredictiveReport::rmse_std() const { return std_of(rmse); }

std::optional<double> PredictiveReport::pearson_mean() const {
  const auto v = all_defined(pearson);
  return v ? std::optional<double>(mean_of(*v)) : std::nullopt;
}

std::optional<double> PredictiveReport::pearson_std() const {
  const auto v = all_defined(pearson);
  return v ? std::optional<double>(std_of(*v)) : std::nullopt;
}

nlohmann::json PredictiveReport::to_json() const {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json per = nlohmann::json::array();
  for (std::size_t i = 0; i < rmse.size(); ++i) per.push_back({{"rmse", rmse[i]}, {"pearson", opt(pearson[i])}});
  return {{"repeats", rmse.size()},     {"rmse_mean", rmse_mean()},       {"rmse_std", rmse_std()},
          {"pearson_mean", opt(pearson_mean())}, {"pearson_std", opt(pearson_std())}, {"per_repeat", per}};
}

PredictiveReport predictive_eval(const Matrix& train_x, const Vector& train_y, const Matrix& test_x,
                                 const Vector& test_y, std::size_t repeats, std::uint64_t seed,
                                 const GpFitConfig& config, Execution exec) {
  if (test_x.rows() != test_y.size() || test_x.rows() == 0) throw std::invalid_argument("bad test set");
  Rng rng(seed);
  PredictiveReport report;
  for (std::size_t r = 0; r < repeats; ++r) {
    GpFitConfig c = config;
    c.seed = rng.next_u64();
    const GpModel gp = GpModel::fit(train_x, train_y, c);
    Vector mean, var;
    gp.predict_many(test_x, mean, var, exec);
    const Vector truth = test_y.unaryExpr([&](double v) { return gp.standardizer().forward(v); });
    report.rmse.push_back(std::sqrt((mean - truth).squaredNorm() / static_cast<double>(truth.size())));
    report.pearson.push_back(pearson(mean, truth));
  }
  return report;
}

}  // namespace dvae::bo
