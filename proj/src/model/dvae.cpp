#include "dvae/model/dvae.hpp"

#include <algorithm>
#include <stdexcept>

#include "dvae/ad/checkpoint.hpp"
#include "dvae/core/rng.hpp"

namespace dvae::model {

DVae::DVae(ModelConfig config, std::uint64_t init_seed) : config_(std::move(config)) {
  Rng rng(init_seed);
  encoder_ = Encoder::create(store_, config_, rng);
  decoder_ = Decoder::create(store_, config_, rng);
}

Posterior DVae::posterior(const dag::Dag& model_dag) const {
  Tape tape(&store_);
  const LatentVars q = encoder_.encode(tape, model_dag);
  const auto mean = q.mean.value().values();
  const auto logvar = q.logvar.value().values();
  return {{mean.begin(), mean.end()}, {logvar.begin(), logvar.end()}};
}

dag::Dag DVae::decode(std::span<const double> z, Rng& rng, const DecodeOptions& options) const {
  Tape tape(&store_);
  const Var zv = tape.constant(ad::Tensor::vector(std::vector<double>(z.begin(), z.end())));
  return decoder_.decode_sample(tape, zv, rng, options);
}

nlohmann::json DVae::to_json() const {
  return {{"format_version", ad::kCheckpointFormat},
          {"config", config_.to_json()},
          {"parameters", ad::parameters_to_json(store_)}};
}

std::unique_ptr<DVae> DVae::from_json(const nlohmann::json& j) {
  if (j.value("format_version", 0) != ad::kCheckpointFormat) throw std::runtime_error("unsupported model format");
  auto model = std::make_unique<DVae>(ModelConfig::from_json(j.at("config")), 0);
  ad::load_parameters(j.at("parameters"), model->store_);
  return model;
}

void DVae::save(const std::filesystem::path& path) const { ad::write_text_file(path, to_json().dump() + "\n"); }

std::unique_ptr<DVae> DVae::load(const std::filesystem::path& path) {
  return from_json(nlohmann::json::parse(ad::read_text_file(path)));
}

std::size_t node_cap_for(std::span<const dag::Dag> model_dags) {
  std::size_t most = 0;
  for (const auto& d : model_dags) most = std::max(most, d.node_count());
  return most + 2;
}

}  // namespace dvae::model
