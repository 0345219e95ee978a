#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "json.hpp"

#include "dvae/ad/parameter.hpp"
#include "dvae/model/config.hpp"
#include "dvae/model/decoder.hpp"
#include "dvae/model/encoder.hpp"

namespace dvae::model {

struct Posterior {
  std::vector<double> mean;
  std::vector<double> logvar;
};

/// Encoder and decoder over one parameter store. Not copyable or movable:
/// generation states keep references into the decoder.
class DVae {
 public:
  DVae(ModelConfig config, std::uint64_t init_seed);
  DVae(const DVae&) = delete;
  DVae& operator=(const DVae&) = delete;

  const ModelConfig& config() const { return config_; }
  ad::ParameterStore& store() { return store_; }
  const ad::ParameterStore& store() const { return store_; }
  const Encoder& encoder() const { return encoder_; }
  const Decoder& decoder() const { return decoder_; }

  /// Posterior parameters of a model-space dag, without gradients.
  Posterior posterior(const dag::Dag& model_dag) const;
  /// Samples a model-space dag from z.
  dag::Dag decode(std::span<const double> z, Rng& rng, const DecodeOptions& options = {}) const;

  /// {"format_version", "config", "parameters"}.
  nlohmann::json to_json() const;
  static std::unique_ptr<DVae> from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static std::unique_ptr<DVae> load(const std::filesystem::path& path);

 private:
  ModelConfig config_;
  ad::ParameterStore store_;
  Encoder encoder_;
  Decoder decoder_;
};

/// Cap used for a training set: its largest node count plus two.
std::size_t node_cap_for(std::span<const dag::Dag> model_dags);

}  // namespace dvae::model
