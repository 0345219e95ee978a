#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dvae/ad/parameter.hpp"
#include "dvae/core/parallel.hpp"
#include "dvae/model/dvae.hpp"

namespace dvae {
class Rng;
}

namespace dvae::vae {

using ad::Tape;
using ad::Var;

inline constexpr double kLogvarMin = -10.0;
inline constexpr double kLogvarMax = 10.0;

/// KL(N(mu, exp(logvar)) || N(0, I)) = -1/2 sum(1 + logvar - mu^2 - exp(logvar)).
double kld_standard_normal(std::span<const double> mean, std::span<const double> logvar);
Var kld_standard_normal(Var mean, Var logvar);

enum class Noise {
  sample,  // eps ~ N(0, I)
  zero,    // eps = 0, so z = mu exactly
};

struct ElboTerms {
  Var loss;
  Var nll;
  Var kld;
  Var z;
};

/// nll(z) + alpha * kld with z = mu + exp(logvar / 2) * eps. logvar is clamped
/// to [kLogvarMin, kLogvarMax] before use in both terms.
ElboTerms elbo_loss(Tape& tape, const model::DVae& model, const dag::Dag& model_dag, Rng& rng, double alpha,
                    Noise noise = Noise::sample);

struct BatchGradient {
  /// Mean loss over the batch.
  double loss = 0.0;
  std::vector<double> per_dag_loss;
  /// Gradient of the mean loss.
  ad::GradientSink grad;
};

/// Each dag gets its own tape, rng (from `seeds`) and gradient sink; sinks are
/// summed in index order, so serial and parallel runs agree bit for bit.
BatchGradient batch_loss_and_grad(const model::DVae& model, std::span<const dag::Dag> dags,
                                  std::span<const std::uint64_t> seeds, double alpha, Execution exec);

}  // namespace dvae::vae
