#pragma once

// Benchmark spin-chain Hamiltonians in sparse Pauli form, their text
// serialization, and off-diagonal sparsity analysis.

#include "dbflow/operator.hpp"

#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dbf {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PauliTerm {
  double coefficient = 0.0;
  std::string word;  // one of I, X, Y, Z per site; site 1 first

  bool operator==(const PauliTerm&) const = default;
};

// Real linear combination of Pauli words on a fixed number of sites. Adding a
// word that is already present merges the coefficients.
class PauliSum {
 public:
  explicit PauliSum(int sites);

  int sites() const { return sites_; }
  const std::vector<PauliTerm>& terms() const { return terms_; }

  PauliSum& add(double coefficient, std::string word);
  Operator to_operator() const;

  // "coefficient word" per line; '#' starts a comment.
  std::string to_text() const;
  static PauliSum from_text(std::istream& in);
  static PauliSum from_text(const std::string& text);

 private:
  int sites_;
  std::vector<PauliTerm> terms_;
};

// Matrix of a single Pauli word (Y = iXZ on each site).
Operator pauli_word_operator(const std::string& word);

// Real-coefficient Pauli-word expansion of a Hermitian operator (I/X/Y/Z
// words). Throws StructureError if an imaginary part exceeds `tol`.
PauliSum hermitian_to_pauli_sum(const Operator& h, int sites,
                                std::optional<double> drop = std::nullopt, double tol = 1e-9);

// J Σ_{j<L} X_j X_{j+1} + Σ_j Z_j, open boundaries.
PauliSum build_tfim(int sites, double coupling);
// J Σ_{j<L} X_j X_{j+1} + Σ_j (Z_j + X_j), open boundaries.
PauliSum build_tlfim(int sites, double coupling);

struct SparsitySummary {
  std::set<PauliLabel> support;  // (μ, ν) with ν ≠ 0 above threshold
  std::size_t S = 0;
  double max_coupling = 0.0;
};

// Counts off-diagonal Z_μX_ν words of A. The default threshold is
// 1e-10 times the largest off-diagonal coefficient magnitude.
SparsitySummary sparsity_of(const Operator& a, int sites,
                            std::optional<double> threshold = std::nullopt);

}  // namespace dbf
