#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dvae/ad/adam.hpp"
#include "dvae/core/parallel.hpp"
#include "dvae/model/dvae.hpp"

namespace dvae::vae {

struct TrainConfig {
  double alpha = 0.005;
  double learning_rate = 1e-3;
  /// Epochs without improvement before the learning rate is decayed.
  std::size_t patience = 10;
  double decay = 0.1;
  /// An epoch improves when its mean loss beats the best so far by this much.
  double min_improvement = 1e-4;
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
  std::uint64_t seed = 1;
  /// Write a checkpoint every this many epochs (0: only at the end).
  std::size_t checkpoint_every = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// Everything needed to continue a run exactly where it stopped.
struct TrainState {
  std::size_t epoch = 0;
  std::vector<double> loss_history;
  double best_loss = 0.0;
  std::size_t epochs_without_improvement = 0;
  double learning_rate = 0.0;
  std::string rng_state;
  ad::AdamState adam;
};

/// Non-finite loss during training.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainOptions {
  Execution exec = Execution::parallel;
  /// Checkpoint destination; none when empty.
  std::filesystem::path checkpoint_path;
  /// Continue from this checkpoint when set.
  std::optional<std::filesystem::path> resume_from;
  /// Called after each epoch with (epoch index, mean loss, learning rate).
  std::function<void(std::size_t, double, double)> on_epoch;
};

struct TrainResult {
  std::vector<double> loss_history;
  TrainState state;
};

/// Mini-batch Adam on the mean ELBO loss with the plateau schedule.
/// Deterministic given the config seed and the model's initial parameters.
TrainResult train(model::DVae& model, std::span<const dag::Dag> model_dags, const TrainConfig& config,
                  const TrainOptions& options = {});

nlohmann::json checkpoint_to_json(const model::DVae& model, const TrainConfig& config, const TrainState& state);
void save_checkpoint(const std::filesystem::path& path, const model::DVae& model, const TrainConfig& config,
                     const TrainState& state);
/// Restores parameters into `model` and returns the saved state.
TrainState load_checkpoint(const std::filesystem::path& path, model::DVae& model);

}  // namespace dvae::vae
