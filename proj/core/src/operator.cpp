#include "dbflow/operator.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <vector>

namespace dbf {

namespace {

void require_same_dim(const Operator& a, const Operator& b, const char* what) {
  if (a.dim() != b.dim()) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a.dim()) +
                         " vs " + std::to_string(b.dim()) + ")");
  }
}

// In-place Walsh-Hadamard transform: w[μ] <- Σ_b (−1)^{|b∩μ|} w[b].
void walsh_hadamard(std::vector<Complex>& w) {
  const std::size_t n = w.size();
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const Complex a = w[j];
        const Complex b = w[j + h];
        w[j] = a + b;
        w[j + h] = a - b;
      }
    }
  }
}

}  // namespace

double default_tolerance(Index dim) { return 1e-10 * static_cast<double>(dim); }

int sites_for_dim(Index dim) {
  if (dim < 1 || !std::has_single_bit(static_cast<std::uint64_t>(dim))) {
    throw DimensionError("dimension " + std::to_string(dim) + " is not a power of two");
  }
  return std::countr_zero(static_cast<std::uint64_t>(dim));
}

Operator::Operator(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) {
    throw DimensionError("operator must be square, got " + std::to_string(m_.rows()) + "x" +
                         std::to_string(m_.cols()));
  }
  if (!m_.allFinite()) throw NumericalError("operator has non-finite entries");
}

Operator Operator::identity(Index dim) { return Operator(Matrix::Identity(dim, dim)); }

Operator Operator::zero(Index dim) { return Operator(Matrix::Zero(dim, dim)); }

Operator Operator::diagonal(const RealVector& entries) {
  return Operator(entries.cast<Complex>().asDiagonal().toDenseMatrix());
}

double Operator::max_abs() const { return m_.size() == 0 ? 0.0 : m_.cwiseAbs().maxCoeff(); }

bool Operator::is_diagonal(double tol) const {
  for (Index c = 0; c < dim(); ++c) {
    for (Index r = 0; r < dim(); ++r) {
      if (r != c && std::abs(m_(r, c)) > tol) return false;
    }
  }
  return true;
}

Operator operator+(const Operator& a, const Operator& b) {
  require_same_dim(a, b, "operator+");
  return Operator(a.m_ + b.m_);
}

Operator operator-(const Operator& a, const Operator& b) {
  require_same_dim(a, b, "operator-");
  return Operator(a.m_ - b.m_);
}

Operator operator*(const Operator& a, const Operator& b) {
  require_same_dim(a, b, "operator*");
  return Operator(a.m_ * b.m_);
}

Operator operator*(Complex z, const Operator& a) { return Operator(z * a.m_); }

Operator operator-(const Operator& a) { return Operator(-a.m_); }

double structure_deviation(const Matrix& m, Structure s) {
  switch (s) {
    case Structure::hermitian:
      return (m - m.adjoint()).cwiseAbs().maxCoeff();
    case Structure::anti_hermitian:
      return (m + m.adjoint()).cwiseAbs().maxCoeff();
    case Structure::unitary:
      return (m.adjoint() * m - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff();
  }
  return 0.0;
}

template <Structure S>
Verified<S> Verified<S>::check(Operator op, double tol) {
  if (tol < 0) tol = default_tolerance(op.dim());
  const double dev = op.dim() == 0 ? 0.0 : structure_deviation(op.matrix(), S);
  if (!(dev <= tol)) {
    static constexpr const char* names[] = {"Hermitian", "anti-Hermitian", "unitary"};
    throw StructureError(std::string("operator is not ") + names[static_cast<int>(S)] +
                         " (max-entry deviation " + std::to_string(dev) + " > tolerance " +
                         std::to_string(tol) + ")");
  }
  return Verified(std::move(op), tol);
}

template <Structure S>
Verified<S> Verified<S>::project(const Operator& op) {
  static_assert(S != Structure::unitary, "unitaries cannot be projected");
  const Matrix& m = op.matrix();
  Matrix p = S == Structure::hermitian ? Matrix(0.5 * (m + m.adjoint()))
                                       : Matrix(0.5 * (m - m.adjoint()));
  return Verified(Operator(std::move(p)), default_tolerance(op.dim()));
}

template class Verified<Structure::hermitian>;
template class Verified<Structure::anti_hermitian>;
template Unitary Verified<Structure::unitary>::check(Operator, double);

BitString::BitString(int length, std::uint32_t mask) : length_(length), mask_(mask) {
  if (length < 0 || length > 30) throw DimensionError("bit string length out of range");
  if (length < 32 && (mask >> length) != 0) {
    throw DimensionError("bit string mask has bits beyond length " + std::to_string(length));
  }
}

BitString BitString::parse(std::string_view bits) {
  std::uint32_t mask = 0;
  for (char c : bits) {
    if (c != '0' && c != '1') throw StructureError("bit string must contain only 0/1");
    mask = (mask << 1) | static_cast<std::uint32_t>(c == '1');
  }
  return {static_cast<int>(bits.size()), mask};
}

BitString BitString::ones(int length) {
  return {length, length == 0 ? 0u : static_cast<std::uint32_t>((1ull << length) - 1)};
}

bool BitString::site(int j) const {
  if (j < 0 || j >= length_) throw DimensionError("site index out of range");
  return (mask_ >> (length_ - 1 - j)) & 1u;
}

int BitString::weight() const { return std::popcount(mask_); }

std::string BitString::to_string() const {
  std::string s(static_cast<std::size_t>(length_), '0');
  for (int j = 0; j < length_; ++j) {
    if (site(j)) s[static_cast<std::size_t>(j)] = '1';
  }
  return s;
}

Operator pinch(const Operator& a) { return Operator(Matrix(a.matrix().diagonal().asDiagonal())); }

Operator offdiag(const Operator& a) {
  Matrix m = a.matrix();
  m.diagonal().setZero();
  return Operator(std::move(m));
}

Operator commutator(const Operator& a, const Operator& b) {
  require_same_dim(a, b, "commutator");
  return Operator(a.matrix() * b.matrix() - b.matrix() * a.matrix());
}

AntiHermitian canonical_bracket(const Hermitian& a) {
  // [Δ, σ] with Δ diagonal: entry (i,j) is (d_i − d_j)·A_ij.
  const Matrix& m = a.matrix();
  const Index n = m.rows();
  Matrix w(n, n);
  for (Index c = 0; c < n; ++c) {
    for (Index r = 0; r < n; ++r) {
      w(r, c) = r == c ? Complex{} : (m(r, r).real() - m(c, c).real()) * m(r, c);
    }
  }
  return AntiHermitian::check(Operator(std::move(w)), a.tolerance() * (1.0 + 2.0 * a.op().max_abs()));
}

Complex hs_inner(const Operator& a, const Operator& b) {
  require_same_dim(a, b, "hs_inner");
  return (a.matrix().conjugate().cwiseProduct(b.matrix())).sum();
}

double hs_norm(const Operator& a) { return a.matrix().norm(); }

double op_norm(const Operator& a) {
  if (a.dim() == 0) return 0.0;
  const Matrix gram = a.matrix().adjoint() * a.matrix();
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("op_norm: eigensolver failed");
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

HermitianEigensystem::HermitianEigensystem(const Operator& h) {
  const Matrix sym = 0.5 * (h.matrix() + h.matrix().adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigendecomposition failed");
  values_ = es.eigenvalues();
  vectors_ = es.eigenvectors();
}

Matrix HermitianEigensystem::evolution(double t) const {
  const Eigen::VectorXcd phases =
      (values_.cast<Complex>() * Complex(0.0, -t)).array().exp().matrix();
  return vectors_ * phases.asDiagonal() * vectors_.adjoint();
}

Matrix HermitianEigensystem::to_eigenbasis(const Matrix& a) const {
  return vectors_.adjoint() * a * vectors_;
}

Matrix HermitianEigensystem::evolve_from_eigenbasis(const Matrix& a_eig, double t) const {
  const Eigen::VectorXcd phases =
      (values_.cast<Complex>() * Complex(0.0, -t)).array().exp().matrix();
  Matrix m = phases.asDiagonal() * a_eig * phases.conjugate().asDiagonal();
  return vectors_ * m * vectors_.adjoint();
}

Unitary exp_antihermitian(const AntiHermitian& w, double s) {
  if (s == 0.0) return Unitary::check(Operator::identity(w.dim()), 0.0);
  // W = −iH with H = iW Hermitian, so e^{sW} = e^{−isH}.
  const HermitianEigensystem es(Operator(Complex(0.0, 1.0) * w.matrix()));
  return Unitary::check(Operator(es.evolution(s)));
}

Operator conjugate(const Operator& a, const Unitary& u) {
  require_same_dim(a, u.op(), "conjugate");
  return Operator(u.matrix().adjoint() * a.matrix() * u.matrix());
}

Operator pauli_string(const BitString& bits_z, const BitString& bits_x) {
  if (bits_z.length() != bits_x.length()) throw DimensionError("pauli_string: length mismatch");
  const Index dim = Index{1} << bits_z.length();
  Matrix m = Matrix::Zero(dim, dim);
  for (std::uint32_t b = 0; b < static_cast<std::uint32_t>(dim); ++b) {
    const std::uint32_t target = b ^ bits_x.mask();
    m(target, b) = static_cast<double>(overlap_sign(target, bits_z.mask()));
  }
  return Operator(std::move(m));
}

Operator PauliDecomposition::to_operator() const {
  const Index dim = Index{1} << sites;
  Matrix m = Matrix::Zero(dim, dim);
  for (const auto& [label, c] : terms) {
    for (std::uint32_t b = 0; b < static_cast<std::uint32_t>(dim); ++b) {
      const std::uint32_t target = b ^ label.x;
      m(target, b) += static_cast<double>(overlap_sign(target, label.z)) * c;
    }
  }
  return Operator(std::move(m));
}

PauliDecomposition pauli_decompose(const Operator& a, int sites, std::optional<double> drop) {
  if (sites_for_dim(a.dim()) != sites) {
    throw DimensionError("pauli_decompose: dimension " + std::to_string(a.dim()) +
                         " does not match 2^" + std::to_string(sites));
  }
  const auto dim = static_cast<std::uint32_t>(a.dim());
  const double threshold =
      drop.value_or(1e-12 * hs_norm(a) / std::sqrt(static_cast<double>(dim)));
  PauliDecomposition out;
  out.sites = sites;
  std::vector<Complex> w(dim);
  for (std::uint32_t nu = 0; nu < dim; ++nu) {
    for (std::uint32_t b = 0; b < dim; ++b) w[b] = a(b, b ^ nu);
    walsh_hadamard(w);
    for (std::uint32_t mu = 0; mu < dim; ++mu) {
      const Complex c = w[mu] / static_cast<double>(dim);
      if (std::abs(c) > threshold) out.terms.emplace(PauliLabel{mu, nu}, c);
    }
  }
  return out;
}

}  // namespace dbf
