#include "dvae/vae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dvae/dag/algorithms.hpp"
#include "dvae/dag/validity.hpp"
#include "dvae/vae/loss.hpp"

namespace dvae::vae {

std::string identity_key(const dag::Dag& domain_dag, const dag::Vocab& vocab) {
  const std::size_t n = domain_dag.node_count();
  if (domain_dag.domain() == dag::Domain::bayes_net) {
    std::vector<std::size_t> by_type(vocab.size(), 0);  // node id + 1, 0 when absent
    bool distinct = true;
    for (dag::NodeId v = 0; v < n && distinct; ++v) {
      const std::size_t t = domain_dag.type(v);
      if (t >= vocab.size() || by_type[t] != 0) distinct = false;
      else by_type[t] = v + 1;
    }
    if (distinct) {
      std::vector<dag::NodeId> perm(n);
      std::size_t next = 0;
      for (std::size_t t = 0; t < vocab.size(); ++t)
        if (by_type[t] != 0) perm[by_type[t] - 1] = next++;
      return dag::dag_key(dag::relabel(domain_dag, perm));
    }
  }
  if (!dag::is_acyclic(domain_dag)) return dag::dag_key(domain_dag);
  return dag::dag_key(dag::canonicalize(domain_dag));
}

ValidityChecker default_checker(const dag::Vocab& vocab) {
  return [vocab](const dag::Dag& d) { return dag::check_domain_validity(d, vocab).valid(); };
}

namespace {

std::vector<double> sample_posterior(const model::Posterior& q, Rng& rng) {
  std::vector<double> z(q.mean.size());
  for (std::size_t d = 0; d < z.size(); ++d) {
    const double lv = std::clamp(q.logvar[d], kLogvarMin, kLogvarMax);
    z[d] = q.mean[d] + std::exp(0.5 * lv) * rng.normal();
  }
  return z;
}

std::vector<std::uint64_t> derive_seeds(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<std::uint64_t> out(n);
  for (auto& s : out) s = rng.next_u64();
  return out;
}

}  // namespace

double metric_reconstruction(const model::DVae& model, std::span<const dag::Dag> test_model_dags, std::uint64_t seed,
                             Execution exec, std::size_t z_samples, std::size_t decodes) {
  if (test_model_dags.empty()) throw std::invalid_argument("reconstruction needs a nonempty test set");
  const auto& vocab = model.config().vocab;
  const auto seeds = derive_seeds(seed, test_model_dags.size());
  std::vector<double> fraction(test_model_dags.size());
  for_each_index(test_model_dags.size(), exec, [&](std::size_t i) {
    Rng rng(seeds[i]);
    const std::string want = identity_key(dag::to_domain_space(test_model_dags[i], vocab), vocab);
    const model::Posterior q = model.posterior(test_model_dags[i]);
    std::size_t hits = 0;
    for (std::size_t s = 0; s < z_samples; ++s) {
      const auto z = sample_posterior(q, rng);
      for (std::size_t d = 0; d < decodes; ++d) {
        const dag::Dag out = model.decode(z, rng);
        if (identity_key(dag::to_domain_space(out, vocab), vocab) == want) ++hits;
      }
    }
    fraction[i] = static_cast<double>(hits) / static_cast<double>(z_samples * decodes);
  });
  double total = 0.0;
  for (double f : fraction) total += f;
  return total / static_cast<double>(fraction.size());
}

std::vector<std::vector<double>> embed_means(const model::DVae& model, std::span<const dag::Dag> model_dags,
                                             Execution exec) {
  std::vector<std::vector<double>> out(model_dags.size());
  for_each_index(model_dags.size(), exec, [&](std::size_t i) { out[i] = model.posterior(model_dags[i]).mean; });
  return out;
}

LatentMoments embedding_moments(const model::DVae& model, std::span<const dag::Dag> train_model_dags, Execution exec) {
  if (train_model_dags.empty()) throw std::invalid_argument("embedding moments need training dags");
  const auto means = embed_means(model, train_model_dags, exec);
  const std::size_t dims = model.config().latent;
  const double n = static_cast<double>(means.size());
  LatentMoments m{std::vector<double>(dims, 0.0), std::vector<double>(dims, 0.0)};
  for (const auto& row : means)
    for (std::size_t d = 0; d < dims; ++d) m.mean[d] += row[d];
  for (double& v : m.mean) v /= n;
  for (const auto& row : means)
    for (std::size_t d = 0; d < dims; ++d) m.std[d] += (row[d] - m.mean[d]) * (row[d] - m.mean[d]);
  for (double& v : m.std) v = std::sqrt(v / n);
  return m;
}

std::vector<double> sample_rescaled_prior(const LatentMoments& moments, Rng& rng) {
  std::vector<double> z(moments.mean.size());
  for (std::size_t d = 0; d < z.size(); ++d) z[d] = rng.normal() * moments.std[d] + moments.mean[d];
  return z;
}

PriorSample metric_prior_validity(const model::DVae& model, const LatentMoments& moments, std::uint64_t seed,
                                  Execution exec, std::size_t samples, std::size_t decodes,
                                  const ValidityChecker& checker) {
  const auto& vocab = model.config().vocab;
  const ValidityChecker check = checker ? checker : default_checker(vocab);
  const auto seeds = derive_seeds(seed, samples);
  std::vector<std::vector<dag::Dag>> valid(samples);
  for_each_index(samples, exec, [&](std::size_t i) {
    Rng rng(seeds[i]);
    const auto z = sample_rescaled_prior(moments, rng);
    for (std::size_t d = 0; d < decodes; ++d) {
      dag::Dag out = dag::to_domain_space(model.decode(z, rng), vocab);
      if (check(out)) valid[i].push_back(std::move(out));
    }
  });
  PriorSample result;
  result.total = samples * decodes;
  for (auto& v : valid)
    for (auto& d : v) result.valid_decodes.push_back(std::move(d));
  result.validity = result.total ? static_cast<double>(result.valid_decodes.size()) / result.total : 0.0;
  return result;
}

UniqueNovel metric_unique_novel(std::span<const dag::Dag> valid_domain_decodes,
                                const std::unordered_set<std::string>& training_keys, const dag::Vocab& vocab) {
  if (valid_domain_decodes.empty()) return {};
  std::unordered_set<std::string> seen;
  std::size_t novel = 0;
  for (const auto& d : valid_domain_decodes) {
    const std::string key = identity_key(d, vocab);
    seen.insert(key);
    if (!training_keys.contains(key)) ++novel;
  }
  const double n = static_cast<double>(valid_domain_decodes.size());
  return {static_cast<double>(seen.size()) / n, static_cast<double>(novel) / n};
}

nlohmann::json MetricsReport::to_json() const {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"reconstruction", reconstruction}, {"validity", validity},     {"uniqueness", opt(uniqueness)},
          {"novelty", opt(novelty)},          {"valid_count", valid_count}, {"generated", generated}};
}

MetricsReport basic_metrics(const model::DVae& model, std::span<const dag::Dag> train_model_dags,
                            std::span<const dag::Dag> test_model_dags, std::uint64_t seed, Execution exec) {
  const auto& vocab = model.config().vocab;
  Rng rng(seed);
  MetricsReport r;
  r.reconstruction = metric_reconstruction(model, test_model_dags, rng.next_u64(), exec);
  const LatentMoments moments = embedding_moments(model, train_model_dags, exec);
  const PriorSample prior = metric_prior_validity(model, moments, rng.next_u64(), exec);
  r.validity = prior.validity;
  r.valid_count = prior.valid_decodes.size();
  r.generated = prior.total;
  std::unordered_set<std::string> train_keys;
  for (const auto& d : train_model_dags) train_keys.insert(identity_key(dag::to_domain_space(d, vocab), vocab));
  const UniqueNovel un = metric_unique_novel(prior.valid_decodes, train_keys, vocab);
  r.uniqueness = un.uniqueness;
  r.novelty = un.novelty;
  return r;
}

}  // namespace dvae::vae
