#pragma once

// Exact spectra, per-state energies and fluctuations, and comparisons of
// diagonal restrictions with the spectrum.

#include "dbflow/flow.hpp"
#include "dbflow/operator.hpp"

#include <string>
#include <vector>

namespace dbf {

// Sorted eigenvalues; throws NumericalError if the reconstruction residual
// exceeds 1e-9·‖H‖.
RealVector exact_spectrum(const Hermitian& h);

// ⟨μ|H|μ⟩ with Z|0⟩ = +|0⟩.
double energy_expectation(const Operator& hk, const BitString& mu);

// √(⟨μ|H²|μ⟩ − ⟨μ|H|μ⟩²), evaluated as the norm of the off-diagonal part of
// column μ so no cancellation occurs.
double energy_fluctuation(const Operator& hk, const BitString& mu);

struct SpectrumReport {
  RealVector eigenvalues;
  RealVector sorted_diagonal;
  double max_abs_deviation = 0.0;
};

SpectrumReport spectrum_comparison(const RealVector& eigenvalues, const RealVector& diagonal);
SpectrumReport spectrum_comparison(const Hermitian& h, const Operator& hk);

struct StateDiagnostics {
  BitString mu;
  int k = 0;
  double energy = 0.0;
  double fluctuation = 0.0;
};

// (E_μ^(k), Ξ_k(μ)) for k = 0..N from the trace's stored diagonals and columns.
std::vector<StateDiagnostics> state_flow(const FlowTrace& trace, const BitString& mu);

// Throws std::logic_error if Z|0⟩ = +|0⟩ or the site ordering is violated.
void basis_convention_self_test();

// "k,mu,energy,fluctuation"
std::string state_flow_csv(const std::vector<std::vector<StateDiagnostics>>& flows);

// "rank,eigenvalue,sorted_diagonal_k<k>..." for the requested steps of a trace.
std::string spectrum_csv(const RealVector& eigenvalues, const FlowTrace& trace, const std::vector<int>& steps);

}  // namespace dbf
