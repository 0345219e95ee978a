#include "dvae/scoring/bayesnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dvae/ad/checkpoint.hpp"
#include "dvae/core/rng.hpp"
#include "dvae/dag/validity.hpp"

namespace dvae::scoring {

GroundTruthBn GroundTruthBn::asia() {
  // Variables: A S T L B E X D.
  GroundTruthBn bn;
  bn.names = {"A", "S", "T", "L", "B", "E", "X", "D"};
  bn.cpts = {
      {{}, {0.2}},
      {{}, {0.3}},
      {{0}, {0.1, 0.7}},
      {{1}, {0.15, 0.6}},
      {{1}, {0.25, 0.75}},
      {{2, 3}, {0.05, 0.85, 0.9, 0.97}},
      {{5}, {0.1, 0.85}},
      {{5, 4}, {0.1, 0.7, 0.75, 0.92}},
  };
  bn.validate();
  return bn;
}

void GroundTruthBn::validate() const {
  if (cpts.size() != names.size()) throw std::invalid_argument("one table per variable is required");
  for (std::size_t v = 0; v < cpts.size(); ++v) {
    const Cpt& c = cpts[v];
    if (c.p_one.size() != (std::size_t{1} << c.parents.size())) {
      throw std::invalid_argument("table of " + names[v] + " needs one row per parent configuration");
    }
    for (std::size_t p : c.parents)
      if (p >= v) throw std::invalid_argument("parent of " + names[v] + " does not precede it");
    for (double p : c.p_one)
      if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability outside [0, 1] in " + names[v]);
  }
}

dag::Dag GroundTruthBn::structure(const dag::Vocab& vocab) const {
  dag::Dag d(dag::Domain::bayes_net);
  for (const auto& name : names) d.add_node(vocab.index(name));
  for (std::size_t v = 0; v < cpts.size(); ++v)
    for (std::size_t p : cpts[v].parents) d.add_edge(p, v);
  return d;
}

BnDataset sample_bn_data(const GroundTruthBn& gt, std::size_t n, std::uint64_t seed) {
  gt.validate();
  if (n == 0) throw std::invalid_argument("sample_bn_data needs n >= 1");
  Rng rng(seed);
  BnDataset data;
  data.names = gt.names;
  data.rows = n;
  data.values.resize(n * gt.names.size());
  for (std::size_t r = 0; r < n; ++r) {
    std::uint8_t* row = &data.values[r * gt.names.size()];
    for (std::size_t v = 0; v < gt.cpts.size(); ++v) {
      std::size_t config = 0;
      for (std::size_t p : gt.cpts[v].parents) config = (config << 1) | row[p];
      row[v] = rng.bernoulli(gt.cpts[v].p_one[config]) ? 1 : 0;
    }
  }
  return data;
}

const BnDataset& standard_bn_data() {
  static const BnDataset data = sample_bn_data(GroundTruthBn::asia(), kBnDataRows, kBnDataSeed);
  return data;
}

void write_bn_data(const std::filesystem::path& path, const BnDataset& data) {
  std::string text;
  for (std::size_t v = 0; v < data.names.size(); ++v) text += (v ? " " : "") + data.names[v];
  text += "\n";
  for (std::size_t r = 0; r < data.rows; ++r) {
    for (std::size_t v = 0; v < data.variables(); ++v) {
      if (v) text += ' ';
      text += static_cast<char>('0' + data.at(r, v));
    }
    text += '\n';
  }
  ad::write_text_file(path, text);
}

BnDataset read_bn_data(const std::filesystem::path& path) {
  std::istringstream in(ad::read_text_file(path));
  BnDataset data;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": missing header line");
  {
    std::istringstream header(line);
    for (std::string name; header >> name;) data.names.push_back(name);
  }
  if (data.names.empty()) throw std::runtime_error(path.string() + ": empty header line");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream row(line);
    std::size_t count = 0;
    for (std::string cell; row >> cell; ++count) {
      if (cell != "0" && cell != "1") {
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": value '" + cell + "' is not 0/1");
      }
      data.values.push_back(cell == "1" ? 1 : 0);
    }
    if (count != data.names.size()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(data.names.size()) + " values, found " + std::to_string(count));
    }
    ++data.rows;
  }
  return data;
}

double bic_local(const BnDataset& data, std::size_t child, std::span<const std::size_t> parents) {
  if (child >= data.variables()) throw std::out_of_range("child index out of range");
  for (std::size_t p : parents)
    if (p >= data.variables() || p == child) throw std::out_of_range("invalid parent index");
  const std::size_t q = std::size_t{1} << parents.size();
  std::vector<double> counts(2 * q, 0.0);
  for (std::size_t r = 0; r < data.rows; ++r) {
    std::size_t config = 0;
    for (std::size_t p : parents) config = (config << 1) | data.at(r, p);
    counts[2 * config + data.at(r, child)] += 1.0;
  }
  double ll = 0.0;
  for (std::size_t j = 0; j < q; ++j) {
    const double n_ij = counts[2 * j] + counts[2 * j + 1];
    for (std::size_t k = 0; k < 2; ++k) {
      const double n_ijk = counts[2 * j + k];
      if (n_ijk > 0.0) ll += n_ijk * std::log(n_ijk / n_ij);
    }
  }
  return ll - 0.5 * std::log(static_cast<double>(data.rows)) * static_cast<double>(q);
}

BicScorer::BicScorer(const BnDataset& data, dag::Vocab vocab) : vocab_(std::move(vocab)) {
  variables_ = data.variables();
  if (vocab_.operation_types().size() != variables_) throw std::invalid_argument("vocabulary does not match data");
  if (variables_ > 16) throw std::invalid_argument("too many variables for a full local-score table");
  const std::size_t masks = std::size_t{1} << variables_;
  table_.assign(variables_ * masks, 0.0);
  std::vector<std::size_t> parents;
  for (std::size_t child = 0; child < variables_; ++child) {
    for (std::uint32_t mask = 0; mask < masks; ++mask) {
      if (mask & (1u << child)) continue;
      parents.clear();
      for (std::size_t p = 0; p < variables_; ++p)
        if (mask & (1u << p)) parents.push_back(p);
      table_[child * masks + mask] = bic_local(data, child, parents);
    }
  }
}

double BicScorer::score(const dag::Dag& domain_dag) const {
  if (!dag::validity_check_bn(domain_dag, vocab_).valid()) return kInvalidBic;
  const auto vars = vocab_.operation_types();
  std::vector<std::size_t> var_of(vocab_.size(), 0);
  for (std::size_t i = 0; i < vars.size(); ++i) var_of[vars[i]] = i;
  // Sum in variable order so the result does not depend on node labels.
  std::vector<double> terms(variables_, 0.0);
  for (dag::NodeId v = 0; v < domain_dag.node_count(); ++v) {
    std::uint32_t mask = 0;
    for (dag::NodeId u : domain_dag.predecessors(v)) mask |= 1u << var_of[domain_dag.type(u)];
    terms[var_of[domain_dag.type(v)]] = local(var_of[domain_dag.type(v)], mask);
  }
  double total = 0.0;
  for (double t : terms) total += t;
  return total;
}

double bic_score(const dag::Dag& domain_dag, const BnDataset& data, const dag::Vocab& vocab) {
  if (!dag::validity_check_bn(domain_dag, vocab).valid()) return kInvalidBic;
  const auto vars = vocab.operation_types();
  if (vars.size() != data.variables()) throw std::invalid_argument("vocabulary does not match data");
  std::vector<std::size_t> var_of(vocab.size(), 0);
  for (std::size_t i = 0; i < vars.size(); ++i) var_of[vars[i]] = i;
  std::vector<double> terms(vars.size(), 0.0);
  std::vector<std::size_t> parents;
  for (dag::NodeId v = 0; v < domain_dag.node_count(); ++v) {
    parents.clear();
    for (dag::NodeId u : domain_dag.predecessors(v)) parents.push_back(var_of[domain_dag.type(u)]);
    std::sort(parents.begin(), parents.end());
    terms[var_of[domain_dag.type(v)]] = bic_local(data, var_of[domain_dag.type(v)], parents);
  }
  double total = 0.0;
  for (double t : terms) total += t;
  return total;
}

}  // namespace dvae::scoring
