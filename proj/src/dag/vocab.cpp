#include "dvae/dag/vocab.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace dvae::dag {

std::string_view to_string(Domain d) {
  switch (d) {
    case Domain::neural_arch: return "neural-arch";
    case Domain::bayes_net: return "bayes-net";
    case Domain::generic: return "generic";
  }
  return "generic";
}

Domain domain_from_string(std::string_view s) {
  if (s == "neural-arch" || s == "nn") return Domain::neural_arch;
  if (s == "bayes-net" || s == "bn") return Domain::bayes_net;
  if (s == "generic") return Domain::generic;
  throw std::invalid_argument("unknown domain '" + std::string(s) + "'");
}

Vocab::Vocab(std::vector<std::string> types, std::string start, std::string end) : types_(std::move(types)) {
  std::set<std::string> seen;
  for (const auto& t : types_)
    if (!seen.insert(t).second) throw std::invalid_argument("duplicate type name '" + t + "' in vocabulary");
  auto locate = [&](const std::string& n) {
    auto it = std::find(types_.begin(), types_.end(), n);
    if (it == types_.end()) throw std::invalid_argument("vocabulary lacks reserved type '" + n + "'");
    return static_cast<std::size_t>(it - types_.begin());
  };
  start_ = locate(start);
  end_ = locate(end);
  if (start_ == end_) throw std::invalid_argument("start and end types must differ");
}

Vocab Vocab::neural_arch() {
  return Vocab({"input", "conv3x3", "conv5x5", "sepconv3x3", "sepconv5x5", "maxpool3x3", "avgpool3x3", "output"},
               "input", "output");
}

Vocab Vocab::bayes_net() { return bayes_net({"A", "S", "T", "L", "B", "E", "X", "D"}); }

Vocab Vocab::bayes_net(const std::vector<std::string>& variables) {
  std::vector<std::string> types{"START"};
  types.insert(types.end(), variables.begin(), variables.end());
  types.push_back("END");
  return Vocab(std::move(types), "START", "END");
}

std::optional<std::size_t> Vocab::find(std::string_view name) const {
  auto it = std::find(types_.begin(), types_.end(), name);
  if (it == types_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - types_.begin());
}

std::size_t Vocab::index(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw std::invalid_argument("unknown node type '" + std::string(name) + "'");
}

std::vector<std::size_t> Vocab::operation_types() const {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < types_.size(); ++t)
    if (!is_virtual(t)) out.push_back(t);
  return out;
}

nlohmann::json Vocab::to_json() const {
  return nlohmann::json{{"types", types_}, {"start", types_[start_]}, {"end", types_[end_]}};
}

Vocab Vocab::from_json(const nlohmann::json& j) {
  return Vocab(j.at("types").get<std::vector<std::string>>(), j.at("start").get<std::string>(),
               j.at("end").get<std::string>());
}

}  // namespace dvae::dag
