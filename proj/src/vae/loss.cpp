#include "dvae/vae/loss.hpp"

#include <cmath>
#include <stdexcept>

#include "dvae/core/rng.hpp"

namespace dvae::vae {

double kld_standard_normal(std::span<const double> mean, std::span<const double> logvar) {
  if (mean.size() != logvar.size()) throw std::invalid_argument("kld: mean and logvar sizes differ");
  double total = 0.0;
  for (std::size_t d = 0; d < mean.size(); ++d)
    total += 1.0 + logvar[d] - mean[d] * mean[d] - std::exp(logvar[d]);
  return -0.5 * total;
}

Var kld_standard_normal(Var mean, Var logvar) {
  Tape& tape = mean.tape();
  const double dims = static_cast<double>(mean.value().size());
  const Var inner = ad::sum(logvar - mean * mean - ad::exp(logvar));
  return ad::scale(tape.constant(ad::Tensor::scalar(dims)) + inner, -0.5);
}

ElboTerms elbo_loss(Tape& tape, const model::DVae& model, const dag::Dag& model_dag, Rng& rng, double alpha,
                    Noise noise) {
  const model::LatentVars q = model.encoder().encode(tape, model_dag);
  const Var logvar = ad::clamp(q.logvar, kLogvarMin, kLogvarMax);
  ElboTerms t;
  if (noise == Noise::zero) {
    t.z = q.mean;
  } else {
    ad::Tensor eps(q.mean.shape());
    for (double& e : eps.values()) e = rng.normal();
    t.z = q.mean + ad::exp(ad::scale(logvar, 0.5)) * tape.constant(std::move(eps));
  }
  t.nll = model.decoder().teacher_forcing_nll(tape, t.z, model_dag);
  t.kld = kld_standard_normal(q.mean, logvar);
  t.loss = alpha == 0.0 ? t.nll : t.nll + ad::scale(t.kld, alpha);
  return t;
}

BatchGradient batch_loss_and_grad(const model::DVae& model, std::span<const dag::Dag> dags,
                                  std::span<const std::uint64_t> seeds, double alpha, Execution exec) {
  if (dags.size() != seeds.size()) throw std::invalid_argument("one seed per dag is required");
  if (dags.empty()) throw std::invalid_argument("empty batch");
  const ad::ParameterStore& store = model.store();
  std::vector<ad::GradientSink> sinks(dags.size());
  BatchGradient out;
  out.per_dag_loss.assign(dags.size(), 0.0);
  for_each_index(dags.size(), exec, [&](std::size_t i) {
    Rng rng(seeds[i]);
    Tape tape(&store);
    const ElboTerms t = elbo_loss(tape, model, dags[i], rng, alpha);
    out.per_dag_loss[i] = t.loss.value().item();
    sinks[i] = store.make_sink();
    tape.backward(t.loss, sinks[i]);
  });
  out.grad = std::move(sinks[0]);
  for (std::size_t i = 1; i < sinks.size(); ++i) out.grad.add(sinks[i]);
  out.grad.scale(1.0 / static_cast<double>(dags.size()));
  for (double l : out.per_dag_loss) out.loss += l;
  out.loss /= static_cast<double>(dags.size());
  return out;
}

}  // namespace dvae::vae
