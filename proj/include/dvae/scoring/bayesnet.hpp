#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dvae/dag/dag.hpp"

namespace dvae::scoring {

inline constexpr std::uint64_t kBnDataSeed = 0xa51a;
inline constexpr std::size_t kBnDataRows = 5000;
/// Score of a structure that is not a valid network over the variables.
inline constexpr double kInvalidBic = -std::numeric_limits<double>::infinity();

/// P(X = 1 | parents) for a binary variable. Row index of a parent
/// configuration: the first parent is the most significant bit.
struct Cpt {
  std::vector<std::size_t> parents;
  std::vector<double> p_one;
};

struct GroundTruthBn {
  std::vector<std::string> names;
  std::vector<Cpt> cpts;

  /// The eight-variable Asia topology with fixed probability tables.
  static GroundTruthBn asia();
  /// Throws unless tables are well formed and parents precede children.
  void validate() const;
  /// Domain-space structure: node i has variable type i.
  dag::Dag structure(const dag::Vocab& vocab) const;
};

/// rows x variables of 0/1 values, row-major.
struct BnDataset {
  std::vector<std::string> names;
  std::size_t rows = 0;
  std::vector<std::uint8_t> values;

  std::size_t variables() const { return names.size(); }
  std::uint8_t at(std::size_t row, std::size_t var) const { return values[row * names.size() + var]; }
  friend bool operator==(const BnDataset&, const BnDataset&) = default;
};

/// Ancestral sampling in variable order.
BnDataset sample_bn_data(const GroundTruthBn& gt, std::size_t n, std::uint64_t seed);
/// The committed dataset: kBnDataRows rows of the Asia network at kBnDataSeed.
const BnDataset& standard_bn_data();

/// Header line of names, then one space-separated 0/1 row per line.
void write_bn_data(const std::filesystem::path& path, const BnDataset& data);
BnDataset read_bn_data(const std::filesystem::path& path);

/// sum_jk N_ijk ln(N_ijk / N_ij) - (ln N / 2) q_i, with q_i = 2^|parents|.
double bic_local(const BnDataset& data, std::size_t child, std::span<const std::size_t> parents);

/// Local scores of every (child, parent set) precomputed, so scoring a
/// structure is a table lookup. Parent sets are bit masks over variables.
class BicScorer {
 public:
  BicScorer(const BnDataset& data, dag::Vocab vocab);
  double local(std::size_t child, std::uint32_t parent_mask) const {
    return table_[child * (std::size_t{1} << variables_) + parent_mask];
  }
  /// Sum of local terms of a domain-space dag; kInvalidBic when it fails
  /// the bayes-net validity rules.
  double score(const dag::Dag& domain_dag) const;
  const dag::Vocab& vocab() const { return vocab_; }

 private:
  dag::Vocab vocab_;
  std::size_t variables_;
  std::vector<double> table_;
};

/// BIC of a domain-space dag against `data`; kInvalidBic if invalid.
double bic_score(const dag::Dag& domain_dag, const BnDataset& data, const dag::Vocab& vocab);

}  // namespace dvae::scoring
