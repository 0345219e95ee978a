#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dvae/bo/acquisition.hpp"
#include "dvae/bo/gp.hpp"
#include "dvae/model/dvae.hpp"
#include "dvae/vae/metrics.hpp"

namespace dvae::bo {

/// Score of a domain-space dag; nullopt when the dag is invalid. Must be
/// safe to call concurrently.
using Oracle = std::function<std::optional<double>(const dag::Dag& domain_dag)>;

struct BoConfig {
  std::size_t iterations = 10;
  std::size_t batch = 50;
  CandidateConfig candidates;
  double xi = kDefaultXi;
  std::uint64_t seed = 1;
  GpFitConfig gp;

  void validate() const;
  nlohmann::json to_json() const;
};

struct HistoryEntry {
  std::size_t round = 0;
  std::size_t index = 0;
  std::vector<double> z;
  dag::Dag dag;
  std::optional<double> score;
};

struct SearchHistory {
  std::vector<HistoryEntry> entries;
  std::size_t iterations = 0;
  std::size_t batch = 0;

  /// Largest valid score, if any.
  std::optional<double> best() const;
};

/// Rounds of: fit GP on all valid data, propose a Kriging Believer batch
/// over a candidate pool, decode each point once, score it, add the valid
/// ones to the data. Scores are cached by dag identity.
SearchHistory bo_loop(const model::DVae& model, const Matrix& train_x, const Vector& train_y, const Oracle& oracle,
                      const BoConfig& config, Execution exec);

/// Same budget with z drawn from the rescaled prior.
SearchHistory random_search(const model::DVae& model, const vae::LatentMoments& moments, const Oracle& oracle,
                            const BoConfig& config, Execution exec);

struct RoundSummary {
  std::size_t round = 0;
  std::size_t valid = 0;
  /// Mean of the round's valid scores.
  std::optional<double> mean_score;
  /// Best valid score up to and including this round.
  std::optional<double> best_so_far;
};
std::vector<RoundSummary> summarize(const SearchHistory& history);

/// {round, index, z, dag, score, valid} per line.
std::string history_jsonl(const SearchHistory& history, const dag::Vocab& vocab);

struct PredictiveReport {
  std::vector<double> rmse;
  std::vector<std::optional<double>> pearson;

  double rmse_mean() const;
  double rmse_std() const;
  std::optional<double> pearson_mean() const;
  std::optional<double> pearson_std() const;
  nlohmann::json to_json() const;
};

/// Pearson correlation; nullopt when either side has zero variance.
std::optional<double> pearson(const Vector& a, const Vector& b);

/// GP fit on train, RMSE and Pearson r on test in units standardized by the
/// training targets. Each repeat re-seeds the hyperparameter fit.
PredictiveReport predictive_eval(const Matrix& train_x, const Vector& train_y, const Matrix& test_x,
                                 const Vector& test_y, std::size_t repeats, std::uint64_t seed,
                                 const GpFitConfig& config, Execution exec);

/// Rows from a list of vectors.
Matrix to_matrix(const std::vector<std::vector<double>>& rows);

}  // namespace dvae::bo
