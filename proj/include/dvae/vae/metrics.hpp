#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "dvae/core/parallel.hpp"
#include "dvae/core/rng.hpp"
#include "dvae/model/dvae.hpp"

namespace dvae::vae {

/// Identity of a domain-space dag as a labelled graph. Bayes-net dags whose
/// types are all distinct are first relabelled by type so that every
/// topological ordering of one structure gets the same key; other dags are
/// canonicalized.
std::string identity_key(const dag::Dag& domain_dag, const dag::Vocab& vocab);

/// Validity test applied to domain-space decodes.
using ValidityChecker = std::function<bool(const dag::Dag& domain_dag)>;
ValidityChecker default_checker(const dag::Vocab& vocab);

/// Per test dag: z drawn `z_samples` times from the posterior, each decoded
/// `decodes` times; the mean fraction of decodes equal to the input.
double metric_reconstruction(const model::DVae& model, std::span<const dag::Dag> test_model_dags, std::uint64_t seed,
                             Execution exec, std::size_t z_samples = 10, std::size_t decodes = 10);

/// Per-dimension mean and std of the training posterior means.
struct LatentMoments {
  std::vector<double> mean;
  std::vector<double> std;
};
LatentMoments embedding_moments(const model::DVae& model, std::span<const dag::Dag> train_model_dags, Execution exec);
/// Posterior means, one row per dag.
std::vector<std::vector<double>> embed_means(const model::DVae& model, std::span<const dag::Dag> model_dags,
                                             Execution exec);

/// z ~ N(0, I) rescaled to z * std + mean.
std::vector<double> sample_rescaled_prior(const LatentMoments& moments, Rng& rng);

struct PriorSample {
  double validity = 0.0;
  std::size_t total = 0;
  /// Domain-space decodes that passed the checker, in sampling order.
  std::vector<dag::Dag> valid_decodes;
};
PriorSample metric_prior_validity(const model::DVae& model, const LatentMoments& moments, std::uint64_t seed,
                                  Execution exec, std::size_t samples = 1000, std::size_t decodes = 10,
                                  const ValidityChecker& checker = {});

struct UniqueNovel {
  std::optional<double> uniqueness;
  std::optional<double> novelty;
};
UniqueNovel metric_unique_novel(std::span<const dag::Dag> valid_domain_decodes,
                                const std::unordered_set<std::string>& training_keys, const dag::Vocab& vocab);

struct MetricsReport {
  double reconstruction = 0.0;
  double validity = 0.0;
  std::optional<double> uniqueness;
  std::optional<double> novelty;
  std::size_t valid_count = 0;
  std::size_t generated = 0;

  nlohmann::json to_json() const;
};

MetricsReport basic_metrics(const model::DVae& model, std::span<const dag::Dag> train_model_dags,
                            std::span<const dag::Dag> test_model_dags, std::uint64_t seed, Execution exec);

}  // namespace dvae::vae
