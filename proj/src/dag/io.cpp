#include "dvae/dag/io.hpp"

#include <fstream>
#include <sstream>

#include "dvae/ad/checkpoint.hpp"

namespace dvae::dag {

nlohmann::json to_json(const Dag& dag, const Vocab& vocab) {
  nlohmann::json nodes = nlohmann::json::array();
  for (NodeId v = 0; v < dag.node_count(); ++v) nodes.push_back({{"id", v}, {"type", vocab.name(dag.type(v))}});
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [u, v] : dag.edges()) edges.push_back({u, v});
  nlohmann::json j;
  j["format"] = kDagFormat;
  j["domain"] = std::string(to_string(dag.domain()));
  j["nodes"] = std::move(nodes);
  j["edges"] = std::move(edges);
  return j;
}

std::string to_json_text(const Dag& dag, const Vocab& vocab) { return to_json(dag, vocab).dump(); }

Dag from_json(const nlohmann::json& j, const Vocab& vocab) {
  auto fail = [](const std::string& where, const std::string& what) -> DagFormatError {
    return DagFormatError(where, what);
  };
  if (!j.is_object()) throw fail("/", "dag must be a JSON object");
  if (!j.contains("format") || !j["format"].is_number_integer() || j["format"].get<int>() != kDagFormat) {
    throw fail("/format", "expected format " + std::to_string(kDagFormat));
  }
  Domain domain;
  try {
    domain = domain_from_string(j.at("domain").get<std::string>());
  } catch (const std::exception& e) {
    throw fail("/domain", e.what());
  }
  if (!j.contains("nodes") || !j["nodes"].is_array()) throw fail("/nodes", "missing node array");
  Dag dag(domain);
  const auto& nodes = j["nodes"];
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string where = "/nodes/" + std::to_string(i);
    const auto& n = nodes[i];
    if (!n.is_object() || !n.contains("id") || !n["id"].is_number_unsigned() || !n.contains("type") ||
        !n["type"].is_string()) {
      throw fail(where, "node needs an integer id and a string type");
    }
    if (n["id"].get<std::size_t>() != i) throw fail(where + "/id", "node ids must be dense and in order");
    const auto type = vocab.find(n["type"].get<std::string>());
    if (!type) throw fail(where + "/type", "unknown type name '" + n["type"].get<std::string>() + "'");
    dag.add_node(*type);
  }
  if (!j.contains("edges") || !j["edges"].is_array()) throw fail("/edges", "missing edge array");
  const auto& edges = j["edges"];
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string where = "/edges/" + std::to_string(i);
    const auto& e = edges[i];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() || !e[1].is_number_unsigned()) {
      throw fail(where, "edge must be a pair of node ids");
    }
    const auto u = e[0].get<std::size_t>(), v = e[1].get<std::size_t>();
    if (u >= dag.node_count() || v >= dag.node_count()) {
      throw fail(where, "edge (" + std::to_string(u) + "," + std::to_string(v) + ") references a missing node");
    }
    if (u == v) throw fail(where, "self-loop");
    if (!dag.add_edge(u, v)) throw fail(where, "duplicate edge");
  }
  return dag;
}

Dag from_json_text(const std::string& text, const Vocab& vocab) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DagFormatError("byte " + std::to_string(e.byte), e.what());
  }
  return from_json(j, vocab);
}

std::vector<ScoredDag> read_dataset(const std::filesystem::path& path, const Vocab& vocab) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset '" + path.string() + "'");
  std::vector<ScoredDag> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw DagFormatError("byte " + std::to_string(e.byte), e.what());
      }
      ScoredDag item{from_json(j, vocab), std::nullopt};
      if (j.contains("score") && !j["score"].is_null()) {
        if (!j["score"].is_number()) throw DagFormatError("/score", "score must be a number");
        item.score = j["score"].get<double>();
      }
      out.push_back(std::move(item));
    } catch (const DagFormatError& e) {
      throw DagFormatError(path.string() + ":" + std::to_string(lineno) + " " + e.where(), e.what());
    }
  }
  return out;
}

std::string dataset_text(const std::vector<ScoredDag>& items, const Vocab& vocab) {
  std::string text;
  for (const auto& item : items) {
    nlohmann::json j = to_json(item.dag, vocab);
    if (item.score) j["score"] = *item.score;
    text += j.dump();
    text += "\n";
  }
  return text;
}

void write_dataset(const std::filesystem::path& path, const std::vector<ScoredDag>& items, const Vocab& vocab) {
  ad::write_text_file(path, dataset_text(items, vocab));
}

Vocab read_vocab(const std::filesystem::path& path) {
  return Vocab::from_json(nlohmann::json::parse(ad::read_text_file(path)));
}

void write_vocab(const std::filesystem::path& path, const Vocab& vocab) {
  ad::write_text_file(path, vocab.to_json().dump() + "\n");
}

Vocab default_vocab(Domain domain) {
  switch (domain) {
    case Domain::neural_arch: return Vocab::neural_arch();
    case Domain::bayes_net: return Vocab::bayes_net();
    case Domain::generic: break;
  }
  throw std::invalid_argument("generic dags need an explicit vocabulary file");
}

}  // namespace dvae::dag
