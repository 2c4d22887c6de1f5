#include "dbflow/models.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <istream>
#include <sstream>

namespace dbf {

namespace {

void require_chain(int sites) {
  if (sites < 2) throw DimensionError("chain models need at least 2 sites, got " + std::to_string(sites));
}

std::string single_site_word(int sites, int j, char p) {
  std::string w(static_cast<std::size_t>(sites), 'I');
  w[static_cast<std::size_t>(j)] = p;
  return w;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

PauliSum::PauliSum(int sites) : sites_(sites) {
  if (sites < 1 || sites > 16) throw DimensionError("PauliSum: sites out of range");
}

PauliSum& PauliSum::add(double coefficient, std::string word) {
  if (static_cast<int>(word.size()) != sites_) {
    throw DimensionError("Pauli word '" + word + "' does not have " + std::to_string(sites_) + " sites");
  }
  for (char& c : word) {
    if (c == 'i' || c == 'x' || c == 'y' || c == 'z') c = static_cast<char>(c - 'a' + 'A');
    if (c != 'I' && c != 'X' && c != 'Y' && c != 'Z') {
      throw StructureError("invalid Pauli factor '" + std::string(1, c) + "' in word " + word);
    }
  }
  if (!std::isfinite(coefficient)) throw NumericalError("non-finite Pauli coefficient");
  auto it = std::find_if(terms_.begin(), terms_.end(), [&](const PauliTerm& t) { return t.word == word; });
  if (it != terms_.end()) {
    it->coefficient += coefficient;
  } else {
    terms_.push_back({coefficient, std::move(word)});
  }
  return *this;
}

Operator pauli_word_operator(const std::string& word) {
  const int sites = static_cast<int>(word.size());
  std::uint32_t x = 0;
  std::uint32_t z = 0;
  int ys = 0;
  for (int j = 0; j < sites; ++j) {
    const std::uint32_t bit = 1u << (sites - 1 - j);
    switch (word[static_cast<std::size_t>(j)]) {
      case 'I': break;
      case 'X': x |= bit; break;
      case 'Z': z |= bit; break;
      case 'Y': x |= bit; z |= bit; ++ys; break;
      default: throw StructureError("invalid Pauli word " + word);
    }
  }
  // ⊗(i^{y} X^{x} Z^{z}) = i^{#Y} X_ν Z_μ, and X_ν Z_μ|b⟩ = (−1)^{|b∩μ|}|b⊕ν⟩.
  static constexpr Complex powers_of_i[] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  const Complex phase = powers_of_i[ys % 4];
  const Index dim = Index{1} << sites;
  Matrix m = Matrix::Zero(dim, dim);
  for (std::uint32_t b = 0; b < static_cast<std::uint32_t>(dim); ++b) {
    m(b ^ x, b) = phase * static_cast<double>(overlap_sign(b, z));
  }
  return Operator(std::move(m));
}

Operator PauliSum::to_operator() const {
  const Index dim = Index{1} << sites_;
  Matrix m = Matrix::Zero(dim, dim);
  for (const auto& t : terms_) m += t.coefficient * pauli_word_operator(t.word).matrix();
  return Operator(std::move(m));
}

std::string PauliSum::to_text() const {
  std::string out;
  for (const auto& t : terms_) out += fmt::format("{} {}\n", t.coefficient, t.word);
  return out;
}

PauliSum PauliSum::from_text(std::istream& in) {
  std::optional<PauliSum> sum;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view body = line;
    if (auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;
    const auto sep = body.find_first_of(" \t");
    if (sep == std::string_view::npos) {
      throw ParseError(fmt::format("line {}: expected 'coefficient pauli_word'", lineno));
    }
    const std::string_view coeff_text = body.substr(0, sep);
    const std::string_view word = trim(body.substr(sep));
    double coeff = 0.0;
    const auto [ptr, ec] = std::from_chars(coeff_text.data(), coeff_text.data() + coeff_text.size(), coeff);
    if (ec != std::errc{} || ptr != coeff_text.data() + coeff_text.size()) {
      throw ParseError(fmt::format("line {}: coefficient '{}' is not a real number", lineno, coeff_text));
    }
    if (word.find_first_of(" \t") != std::string_view::npos) {
      throw ParseError(fmt::format("line {}: trailing content after Pauli word", lineno));
    }
    if (!sum) sum.emplace(static_cast<int>(word.size()));
    try {
      sum->add(coeff, std::string(word));
    } catch (const std::exception& e) {
      throw ParseError(fmt::format("line {}: {}", lineno, e.what()));
    }
  }
  if (!sum) throw ParseError("Pauli sum text contains no terms");
  return *sum;
}

PauliSum PauliSum::from_text(const std::string& text) {
  std::istringstream in(text);
  return from_text(in);
}

PauliSum hermitian_to_pauli_sum(const Operator& h, int sites, std::optional<double> drop, double tol) {
  const PauliDecomposition dec = pauli_decompose(h, sites, drop);
  PauliSum sum(sites);
  static constexpr Complex powers_of_i[] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (const auto& [label, c] : dec.terms) {
    // Z_μ X_ν = i^{|μ∩ν|} P with P the word carrying Y where both bits are set.
    const Complex coeff = c * powers_of_i[std::popcount(label.z & label.x) % 4];
    if (std::abs(coeff.imag()) > tol) {
      throw StructureError("operator is not Hermitian: imaginary Pauli coefficient " +
                           std::to_string(coeff.imag()));
    }
    std::string word(static_cast<std::size_t>(sites), 'I');
    for (int j = 0; j < sites; ++j) {
      const std::uint32_t bit = 1u << (sites - 1 - j);
      const bool zb = label.z & bit;
      const bool xb = label.x & bit;
      word[static_cast<std::size_t>(j)] = zb && xb ? 'Y' : zb ? 'Z' : xb ? 'X' : 'I';
    }
    sum.add(coeff.real(), std::move(word));
  }
  return sum;
}

PauliSum build_tfim(int sites, double coupling) {
  require_chain(sites);
  PauliSum h(sites);
  for (int j = 0; j + 1 < sites; ++j) {
    std::string w(static_cast<std::size_t>(sites), 'I');
    w[static_cast<std::size_t>(j)] = 'X';
    w[static_cast<std::size_t>(j + 1)] = 'X';
    h.add(coupling, std::move(w));
  }
  for (int j = 0; j < sites; ++j) h.add(1.0, single_site_word(sites, j, 'Z'));
  return h;
}

PauliSum build_tlfim(int sites, double coupling) {
  PauliSum h = build_tfim(sites, coupling);
  for (int j = 0; j < sites; ++j) h.add(1.0, single_site_word(sites, j, 'X'));
  return h;
}

SparsitySummary sparsity_of(const Operator& a, int sites, std::optional<double> threshold) {
  const PauliDecomposition dec = pauli_decompose(a, sites, 0.0);
  double largest = 0.0;
  for (const auto& [label, c] : dec.terms) {
    if (label.x != 0) largest = std::max(largest, std::abs(c));
  }
  const double cut = threshold.value_or(1e-10 * largest);
  SparsitySummary out;
  for (const auto& [label, c] : dec.terms) {
    if (label.x != 0 && std::abs(c) > cut) {
      out.support.insert(label);
      out.max_coupling = std::max(out.max_coupling, std::abs(c));
    }
  }
  out.S = out.support.size();
  return out;
}

}  // namespace dbf
