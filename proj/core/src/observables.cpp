#include "dbflow/observables.hpp"

#include "dbflow/models.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace dbf {

namespace {

Index state_index(const Operator& hk, const BitString& mu) {
  if ((Index{1} << mu.length()) != hk.dim()) {
    throw DimensionError(fmt::format("state {} does not index a register of dimension {}", mu.to_string(), hk.dim()));
  }
  return static_cast<Index>(mu.mask());
}

RealVector sorted(RealVector v) {
  std::sort(v.data(), v.data() + v.size());
  return v;
}

}  // namespace

RealVector exact_spectrum(const Hermitian& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h.matrix());
  if (es.info() != Eigen::Success) throw NumericalError("exact_spectrum: eigensolver failed");
  const Matrix& q = es.eigenvectors();
  const double residual = (h.matrix() * q - q * es.eigenvalues().cast<Complex>().asDiagonal()).norm();
  const double scale = std::max(op_norm(h), 1e-300);
  if (residual > 1e-9 * scale) {
    throw NumericalError(fmt::format("exact_spectrum: residual {} exceeds 1e-9·‖H‖", residual));
  }
  return sorted(es.eigenvalues());
}

double energy_expectation(const Operator& hk, const BitString& mu) {
  const Index i = state_index(hk, mu);
  return hk(i, i).real();
}

double energy_fluctuation(const Operator& hk, const BitString& mu) {
  const Index i = state_index(hk, mu);
  const auto col = hk.matrix().col(i);
  double off = 0.0;
  for (Index r = 0; r < hk.dim(); ++r) {
    if (r != i) off += std::norm(col(r));
  }
  return std::sqrt(off);
}

SpectrumReport spectrum_comparison(const RealVector& eigenvalues, const RealVector& diagonal) {
  if (eigenvalues.size() != diagonal.size()) throw DimensionError("spectrum_comparison: length mismatch");
  SpectrumReport out{sorted(eigenvalues), sorted(diagonal), 0.0};
  if (out.eigenvalues.size() > 0) out.max_abs_deviation = (out.eigenvalues - out.sorted_diagonal).cwiseAbs().maxCoeff();
  return out;
}

SpectrumReport spectrum_comparison(const Hermitian& h, const Operator& hk) {
  if (h.dim() != hk.dim()) throw DimensionError("spectrum_comparison: dimension mismatch");
  return spectrum_comparison(exact_spectrum(h), hk.matrix().diagonal().real());
}

std::vector<StateDiagnostics> state_flow(const FlowTrace& trace, const BitString& mu) {
  if (trace.diagonals.empty() || trace.diagonals.size() != trace.column_offdiag_sq.size()) {
    throw std::runtime_error("state_flow: trace does not retain diagonals and column norms");
  }
  if (mu.length() != trace.sites) throw DimensionError("state_flow: state length does not match the trace");
  std::vector<StateDiagnostics> out;
  const auto i = static_cast<Index>(mu.mask());
  for (std::size_t k = 0; k < trace.diagonals.size(); ++k) {
    out.push_back({mu, static_cast<int>(k), trace.diagonals[k](i), std::sqrt(trace.column_offdiag_sq[k](i))});
  }
  return out;
}

void basis_convention_self_test() {
  const Operator z = pauli_word_operator("ZI");
  if (z(0, 0) != Complex(1.0) || z(2, 2) != Complex(-1.0) || z(1, 1) != Complex(1.0)) {
    throw std::logic_error("basis convention violated: expected Z_1|0x⟩ = +|0x⟩ and Z_1|1x⟩ = −|1x⟩");
  }
  const Operator h = PauliSum(2).add(1.0, "ZI").add(1.0, "IZ").to_operator();
  if (energy_expectation(h, BitString::parse("00")) != 2.0 || energy_expectation(h, BitString::parse("11")) != -2.0) {
    throw std::logic_error("basis convention violated: ⟨00|Z1+Z2|00⟩ must be +2");
  }
}

std::string state_flow_csv(const std::vector<std::vector<StateDiagnostics>>& flows) {
  std::string out = "k,mu,energy,fluctuation\n";
  for (const auto& flow : flows) {
    for (const auto& d : flow) out += fmt::format("{},{},{},{}\n", d.k, d.mu.to_string(), d.energy, d.fluctuation);
  }
  return out;
}

std::string spectrum_csv(const RealVector& eigenvalues, const FlowTrace& trace, const std::vector<int>& steps) {
  std::vector<RealVector> columns;
  std::string out = "rank,eigenvalue";
  for (int k : steps) {
    if (k < 0 || static_cast<std::size_t>(k) >= trace.diagonals.size()) continue;
    out += fmt::format(",sorted_diagonal_k{}", k);
    columns.push_back(sorted(trace.diagonals[static_cast<std::size_t>(k)]));
  }
  out += "\n";
  const RealVector ev = sorted(eigenvalues);
  for (Index r = 0; r < ev.size(); ++r) {
    out += fmt::format("{},{}", r, ev(r));
    for (const auto& c : columns) out += fmt::format(",{}", c(r));
    out += "\n";
  }
  return out;
}

}  // namespace dbf
