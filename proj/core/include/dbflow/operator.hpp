#pragma once

// Dense complex operator algebra on qubit registers: restrictions to the
// diagonal, brackets, norms, exponentials and conjugations.

#include <Eigen/Dense>

#include <compare>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dbf {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input lacks a structural property (Hermiticity, diagonality, ...).
class StructureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Max-entry tolerance used when verifying Hermitian / anti-Hermitian /
// unitary structure: 1e-10 * D.
double default_tolerance(Index dim);

// Number of qubits L with 2^L == dim; throws DimensionError otherwise.
int sites_for_dim(Index dim);

class Operator {
 public:
  Operator() = default;  // 0x0
  explicit Operator(Matrix m);

  static Operator identity(Index dim);
  static Operator zero(Index dim);
  static Operator diagonal(const RealVector& entries);

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  Complex operator()(Index row, Index col) const { return m_(row, col); }

  Operator adjoint() const { return Operator(m_.adjoint()); }
  double max_abs() const;
  bool is_diagonal(double tol = 0.0) const;

  friend Operator operator+(const Operator& a, const Operator& b);
  friend Operator operator-(const Operator& a, const Operator& b);
  friend Operator operator*(const Operator& a, const Operator& b);
  friend Operator operator*(Complex z, const Operator& a);
  friend Operator operator-(const Operator& a);

 private:
  Matrix m_;
};

enum class Structure { hermitian, anti_hermitian, unitary };

// An operator together with a structural property it was verified to have,
// and the max-entry tolerance of that verification.
template <Structure S>
class Verified {
 public:
  // Throws StructureError if the property fails at `tol` (negative selects
  // default_tolerance).
  static Verified check(Operator op, double tol = -1.0);

  // Projects onto the property without checking: (A+A†)/2 for Hermitian,
  // (A-A†)/2 for anti-Hermitian. Not available for unitaries.
  static Verified project(const Operator& op);

  const Operator& op() const { return op_; }
  const Matrix& matrix() const { return op_.matrix(); }
  Index dim() const { return op_.dim(); }
  double tolerance() const { return tol_; }
  operator const Operator&() const { return op_; }

 private:
  Verified(Operator op, double tol) : op_(std::move(op)), tol_(tol) {}
  Operator op_;
  double tol_;
};

using Hermitian = Verified<Structure::hermitian>;
using AntiHermitian = Verified<Structure::anti_hermitian>;
using Unitary = Verified<Structure::unitary>;

// Max-entry deviation from the property, e.g. ‖A − A†‖_max.
double structure_deviation(const Matrix& m, Structure s);

// Computational-basis bit string μ = (μ_1 … μ_L). Site 1 is the most
// significant bit of the basis index, so |μ⟩ is basis vector mask().
class BitString {
 public:
  BitString(int length, std::uint32_t mask);
  static BitString parse(std::string_view bits);
  static BitString zeros(int length) { return {length, 0u}; }
  static BitString ones(int length);

  int length() const { return length_; }
  std::uint32_t mask() const { return mask_; }
  bool site(int j) const;  // 0-based from the left
  int weight() const;
  std::string to_string() const;

  auto operator<=>(const BitString&) const = default;

 private:
  int length_;
  std::uint32_t mask_;
};

// (−1)^{|a ∩ b|}
inline int overlap_sign(std::uint32_t a, std::uint32_t b) {
  return (__builtin_popcount(a & b) & 1) ? -1 : 1;
}

Operator pinch(const Operator& a);
Operator offdiag(const Operator& a);
Operator commutator(const Operator& a, const Operator& b);
AntiHermitian canonical_bracket(const Hermitian& a);

Complex hs_inner(const Operator& a, const Operator& b);
double hs_norm(const Operator& a);
double op_norm(const Operator& a);

// Eigendecomposition of a Hermitian operator, reused for evolutions e^{-itH}
// at many t. The input is symmetrized before decomposition.
class HermitianEigensystem {
 public:
  explicit HermitianEigensystem(const Operator& h);

  const RealVector& eigenvalues() const { return values_; }
  const Matrix& eigenvectors() const { return vectors_; }

  // e^{-i t H}
  Matrix evolution(double t) const;
  // Q^† A Q
  Matrix to_eigenbasis(const Matrix& a) const;
  // e^{-itH} A e^{itH} for A given in the eigenbasis, returned in the
  // computational basis.
  Matrix evolve_from_eigenbasis(const Matrix& a_eig, double t) const;

 private:
  RealVector values_;
  Matrix vectors_;
};

// e^{sW}; exp_antihermitian(W, 0) is the identity exactly.
Unitary exp_antihermitian(const AntiHermitian& w, double s);

// U† A U
Operator conjugate(const Operator& a, const Unitary& u);

// Matrix of Z_μ X_ν.
Operator pauli_string(const BitString& bits_z, const BitString& bits_x);

// Label (μ, ν) of the basis element Z_μ X_ν.
struct PauliLabel {
  std::uint32_t z = 0;
  std::uint32_t x = 0;
  auto operator<=>(const PauliLabel&) const = default;
};

struct PauliDecomposition {
  int sites = 0;
  std::map<PauliLabel, Complex> terms;

  Operator to_operator() const;
};

// Coefficients c_{μν} = ⟨Z_μX_ν, A⟩_HS / D. Terms with |c| ≤ drop are
// omitted; the default drop is 1e-12·‖A‖_HS/√D.
PauliDecomposition pauli_decompose(const Operator& a, int sites,
                                   std::optional<double> drop = std::nullopt);

}  // namespace dbf
