#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace dvae::dag {

enum class Domain { neural_arch, bayes_net, generic };

std::string_view to_string(Domain d);
Domain domain_from_string(std::string_view s);

/// Ordered node-type names with two reserved entries: the type of the single
/// starting node and the type of the single ending node.
class Vocab {
 public:
  Vocab(std::vector<std::string> types, std::string start, std::string end);

  /// input, the six cell operations, output.
  static Vocab neural_arch();
  /// START, the eight Asia variables in topological order, END.
  static Vocab bayes_net();
  static Vocab bayes_net(const std::vector<std::string>& variables);

  std::size_t size() const { return types_.size(); }
  const std::string& name(std::size_t type) const { return types_.at(type); }
  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index(std::string_view name) const;
  std::size_t start() const { return start_; }
  std::size_t end() const { return end_; }
  bool is_virtual(std::size_t type) const { return type == start_ || type == end_; }
  /// Non-virtual types in vocabulary order.
  std::vector<std::size_t> operation_types() const;
  const std::vector<std::string>& names() const { return types_; }

  nlohmann::json to_json() const;
  static Vocab from_json(const nlohmann::json& j);

  friend bool operator==(const Vocab&, const Vocab&) = default;

 private:
  std::vector<std::string> types_;
  std::size_t start_ = 0;
  std::size_t end_ = 0;
};

}  // namespace dvae::dag
