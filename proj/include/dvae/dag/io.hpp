#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dvae/dag/dag.hpp"

namespace dvae::dag {

inline constexpr int kDagFormat = 1;

/// Malformed dag text. `where()` is a byte offset for syntax errors or a
/// JSON pointer for structural ones, prefixed with the line number when
/// reading a dataset file.
class DagFormatError : public std::runtime_error {
 public:
  DagFormatError(std::string where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

/// {"format": 1, "domain": ..., "nodes": [{"id", "type"}...], "edges": [[u, v]...]}
nlohmann::json to_json(const Dag& dag, const Vocab& vocab);
std::string to_json_text(const Dag& dag, const Vocab& vocab);
Dag from_json(const nlohmann::json& j, const Vocab& vocab);
Dag from_json_text(const std::string& text, const Vocab& vocab);

struct ScoredDag {
  Dag dag;
  std::optional<double> score;
};

/// One dag object per line, optionally with a "score" field.
std::vector<ScoredDag> read_dataset(const std::filesystem::path& path, const Vocab& vocab);
std::string dataset_text(const std::vector<ScoredDag>& items, const Vocab& vocab);
void write_dataset(const std::filesystem::path& path, const std::vector<ScoredDag>& items, const Vocab& vocab);

/// {"types": [...], "start": ..., "end": ...}
Vocab read_vocab(const std::filesystem::path& path);
void write_vocab(const std::filesystem::path& path, const Vocab& vocab);

/// Default vocabulary for a domain (neural-arch or bayes-net).
Vocab default_vocab(Domain domain);

}  // namespace dvae::dag
