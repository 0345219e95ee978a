#include "dvae/ad/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dvae::ad {
namespace {

nlohmann::json tensor_to_json(const Tensor& t) {
  return nlohmann::json{{"shape", t.shape()}, {"values", std::vector<double>(t.values().begin(), t.values().end())}};
}

Tensor tensor_from_json(const nlohmann::json& j, const std::string& id) {
  try {
    return Tensor(j.at("shape").get<Shape>(), j.at("values").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint entry '" + id + "': " + e.what());
  }
}

void load_tensors(const nlohmann::json& doc, const ParameterStore& store, std::vector<Tensor>& out,
                  const char* what) {
  out.clear();
  for (const auto& p : store) {
    if (!doc.contains(p.id)) throw std::runtime_error(std::string(what) + " is missing parameter '" + p.id + "'");
    Tensor t = tensor_from_json(doc.at(p.id), p.id);
    if (t.shape() != p.value.shape()) {
      throw std::runtime_error(std::string(what) + " shape mismatch for '" + p.id + "': " + to_string(t.shape()) +
                               " vs " + to_string(p.value.shape()));
    }
    out.push_back(std::move(t));
  }
}

}  // namespace

nlohmann::json parameters_to_json(const ParameterStore& store) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& p : store) doc[p.id] = tensor_to_json(p.value);
  return doc;
}

void load_parameters(const nlohmann::json& doc, ParameterStore& store) {
  std::vector<Tensor> values;
  load_tensors(doc, store, values, "checkpoint");
  for (std::size_t s = 0; s < store.size(); ++s) store[s].value = std::move(values[s]);
  store.zero_grad();
}

nlohmann::json adam_to_json(const AdamState& state, const ParameterStore& store) {
  nlohmann::json m = nlohmann::json::object(), v = nlohmann::json::object();
  for (std::size_t s = 0; s < store.size(); ++s) {
    m[store[s].id] = tensor_to_json(state.first_moment[s]);
    v[store[s].id] = tensor_to_json(state.second_moment[s]);
  }
  return nlohmann::json{{"step", state.step},
                        {"learning_rate", state.config.learning_rate},
                        {"beta1", state.config.beta1},
                        {"beta2", state.config.beta2},
                        {"epsilon", state.config.epsilon},
                        {"first_moment", m},
                        {"second_moment", v}};
}

AdamState adam_from_json(const nlohmann::json& doc, const ParameterStore& store) {
  AdamState s;
  s.step = doc.at("step").get<std::uint64_t>();
  s.config.learning_rate = doc.at("learning_rate").get<double>();
  s.config.beta1 = doc.at("beta1").get<double>();
  s.config.beta2 = doc.at("beta2").get<double>();
  s.config.epsilon = doc.at("epsilon").get<double>();
  load_tensors(doc.at("first_moment"), store, s.first_moment, "adam first moment");
  load_tensors(doc.at("second_moment"), store, s.second_moment, "adam second moment");
  return s;
}

std::string checkpoint_document(const ParameterStore& store) {
  nlohmann::json doc{{"format_version", kCheckpointFormat}, {"parameters", parameters_to_json(store)}};
  return doc.dump() + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

}  // namespace dvae::ad
