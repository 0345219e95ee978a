#include "dvae/vae/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "dvae/ad/checkpoint.hpp"
#include "dvae/core/rng.hpp"
#include "dvae/vae/loss.hpp"

namespace dvae::vae {

void TrainConfig::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(decay > 0.0 && decay < 1.0)) throw std::invalid_argument("decay must lie in (0, 1)");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"alpha", alpha},
          {"learning_rate", learning_rate},
          {"patience", patience},
          {"decay", decay},
          {"min_improvement", min_improvement},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"seed", seed},
          {"checkpoint_every", checkpoint_every}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.alpha = j.value("alpha", c.alpha);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.patience = j.value("patience", c.patience);
  c.decay = j.value("decay", c.decay);
  c.min_improvement = j.value("min_improvement", c.min_improvement);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.seed = j.value("seed", c.seed);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  return c;
}

nlohmann::json checkpoint_to_json(const model::DVae& model, const TrainConfig& config, const TrainState& state) {
  return {{"format_version", ad::kCheckpointFormat},
          {"model", model.to_json()},
          {"train_config", config.to_json()},
          {"epoch", state.epoch},
          {"loss_history", state.loss_history},
          {"best_loss", state.best_loss},
          {"epochs_without_improvement", state.epochs_without_improvement},
          {"learning_rate", state.learning_rate},
          {"rng_state", state.rng_state},
          {"adam", ad::adam_to_json(state.adam, model.store())}};
}

void save_checkpoint(const std::filesystem::path& path, const model::DVae& model, const TrainConfig& config,
                     const TrainState& state) {
  // Write then rename so an interrupted save never leaves a torn file.
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  ad::write_text_file(tmp, checkpoint_to_json(model, config, state).dump() + "\n");
  std::filesystem::rename(tmp, path);
}

TrainState load_checkpoint(const std::filesystem::path& path, model::DVae& model) {
  const auto j = nlohmann::json::parse(ad::read_text_file(path));
  if (j.value("format_version", 0) != ad::kCheckpointFormat) {
    throw std::runtime_error("'" + path.string() + "' is not a training checkpoint");
  }
  if (model::ModelConfig::from_json(j.at("model").at("config")).to_json() != model.config().to_json()) {
    throw std::runtime_error("checkpoint model configuration differs from the current model");
  }
  ad::load_parameters(j.at("model").at("parameters"), model.store());
  TrainState s;
  s.epoch = j.at("epoch").get<std::size_t>();
  s.loss_history = j.at("loss_history").get<std::vector<double>>();
  s.best_loss = j.at("best_loss").get<double>();
  s.epochs_without_improvement = j.at("epochs_without_improvement").get<std::size_t>();
  s.learning_rate = j.at("learning_rate").get<double>();
  s.rng_state = j.at("rng_state").get<std::string>();
  s.adam = ad::adam_from_json(j.at("adam"), model.store());
  return s;
}

TrainResult train(model::DVae& model, std::span<const dag::Dag> model_dags, const TrainConfig& config,
                  const TrainOptions& options) {
  config.validate();
  if (model_dags.empty()) throw std::invalid_argument("training set is empty");
  for (std::size_t i = 0; i < model_dags.size(); ++i) {
    try {
      model.decoder().check_target(model_dags[i]);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("training dag " + std::to_string(i) + ": " + e.what());
    }
  }

  TrainState state;
  Rng rng(config.seed);
  if (options.resume_from) {
    state = load_checkpoint(*options.resume_from, model);
    rng.restore(state.rng_state);
  } else {
    ad::AdamConfig adam;
    adam.learning_rate = config.learning_rate;
    state.adam = ad::AdamState::for_store(model.store(), adam);
    state.learning_rate = config.learning_rate;
    state.best_loss = std::numeric_limits<double>::infinity();
  }

  std::vector<std::size_t> order(model_dags.size());
  std::vector<dag::Dag> batch;
  std::vector<std::uint64_t> seeds;
  while (state.epoch < config.epochs) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, rng);
    double epoch_total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      batch.clear();
      seeds.clear();
      for (std::size_t k = begin; k < end; ++k) {
        batch.push_back(model_dags[order[k]]);
        seeds.push_back(rng.next_u64());
      }
      BatchGradient g = batch_loss_and_grad(model, batch, seeds, config.alpha, options.exec);
      for (std::size_t k = 0; k < g.per_dag_loss.size(); ++k) {
        if (!std::isfinite(g.per_dag_loss[k])) {
          throw TrainingDiverged("non-finite loss at epoch " + std::to_string(state.epoch + 1) + " on training dag " +
                                 std::to_string(order[begin + k]));
        }
        epoch_total += g.per_dag_loss[k];
      }
      model.store().zero_grad();
      model.store().accumulate(g.grad);
      state.adam.config.learning_rate = state.learning_rate;
      ad::adam_step(state.adam, model.store());
    }
    const double mean_loss = epoch_total / static_cast<double>(order.size());
    state.loss_history.push_back(mean_loss);
    ++state.epoch;
    if (mean_loss < state.best_loss - config.min_improvement) {
      state.best_loss = mean_loss;
      state.epochs_without_improvement = 0;
    } else if (++state.epochs_without_improvement >= config.patience) {
      state.learning_rate *= config.decay;
      state.epochs_without_improvement = 0;
    }
    state.rng_state = rng.state();
    if (options.on_epoch) options.on_epoch(state.epoch - 1, mean_loss, state.learning_rate);
    const bool periodic = config.checkpoint_every != 0 && state.epoch % config.checkpoint_every == 0;
    if (!options.checkpoint_path.empty() && (periodic || state.epoch == config.epochs)) {
      save_checkpoint(options.checkpoint_path, model, config, state);
    }
  }
  state.rng_state = rng.state();
  return {state.loss_history, state};
}

}  // namespace dvae::vae
