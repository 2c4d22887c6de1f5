#pragma once

// Discretized double-bracket flows: canonical (GWW) and variational
// brackets, step-duration search, flow traces and precompiled circuits.

#include "dbflow/models.hpp"
#include "dbflow/operator.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace dbf {

struct Canonical {
  bool operator==(const Canonical&) const = default;
};

// Bracket [±Z_μ, J]. A negative sign flips the direction of the generator.
struct FixedFlip {
  BitString mu;
  int sign = 1;
  bool operator==(const FixedFlip&) const = default;
};

// Bracket [Δ, J] for a caller-supplied diagonal Δ.
struct CustomDiagonal {
  RealVector diagonal;
  bool operator==(const CustomDiagonal& o) const { return diagonal == o.diagonal; }
};

using GeneratorKind = std::variant<Canonical, FixedFlip, CustomDiagonal>;

// Throws StructureError unless Δ is diagonal with a real diagonal.
CustomDiagonal custom_diagonal(const Operator& delta);

std::string describe(const GeneratorKind& kind);

// Raised when the requested bracket vanishes: the flowed Hamiltonian is a
// fixed point of that generator.
class ZeroBracketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The diagonal operator entering the bracket for this kind at J.
RealVector bracket_diagonal(const Hermitian& j, const GeneratorKind& kind);

AntiHermitian bracket_for(const Hermitian& j, const GeneratorKind& kind);

// e^{sW} J e^{−sW} with W = bracket_for(J, kind).
Hermitian flow_step(const Hermitian& j, const GeneratorKind& kind, double s);

struct StepSearchConfig {
  double s_min = 1e-3;
  double s_max = 3.0;
  int grid_points = 60;
  int refine_iterations = 20;

  void validate() const;
};

struct StepChoice {
  double s = 0.0;
  double offdiag_before = 0.0;
  double offdiag_after = 0.0;
  double sigma_decrease = 0.0;  // after − before
};

// Precomputed evaluation of s ↦ ‖σ(e^{sW} J e^{−sW})‖_HS for a fixed bracket.
class DurationScan {
 public:
  DurationScan(const Hermitian& j, const AntiHermitian& w);

  double offdiag_norm(double s) const;
  Hermitian flowed(double s) const;
  double generator_hs_norm() const { return w_norm_; }

 private:
  HermitianEigensystem spectrum_;  // of iW
  Matrix j_eig_;
  double j_norm_sq_;
  double w_norm_;
};

// Grid-global minimizer over a log grid on [s_min, s_max], refined by golden
// section search between the neighbours of the best grid point.
StepChoice optimize_step_duration(const Hermitian& j, const GeneratorKind& kind,
                                  const StepSearchConfig& cfg);

struct GeneratorChoice {
  GeneratorKind kind;
  StepChoice step;
  std::size_t candidate_index = 0;
};

// Candidate with the most negative σ-decrease; ties go to the smaller s and
// then to the earlier candidate. Zero-bracket candidates are skipped.
GeneratorChoice select_generator(const Hermitian& j, const std::vector<GeneratorKind>& candidates,
                                 const StepSearchConfig& cfg);

// Canonical followed by ±Z_μ for every μ ≠ 0 in lexicographic order.
std::vector<GeneratorKind> variational_candidates(int sites);

struct FlowPolicy {
  std::vector<GeneratorKind> candidates{Canonical{}};

  static FlowPolicy canonical() { return {}; }
  static FlowPolicy variational(int sites) { return {variational_candidates(sites)}; }
};

struct FlowStep {
  int index = 0;
  GeneratorKind kind;
  double s = 0.0;
  double offdiag_norm_before = 0.0;
  double offdiag_norm_after = 0.0;
  double sigma_decrease = 0.0;
  double generator_hs_norm = 0.0;
};

enum class Termination { completed, zero_bracket, saturated };

std::string to_string(Termination t);

struct FlowOptions {
  // Keep every H_k and W_k as full matrices; defaults to sites ≤ 7.
  std::optional<bool> keep_snapshots;
  // Stop once the best σ-decrease is above −saturation·‖H‖_HS.
  double saturation = 1e-8;
};

struct FlowTrace {
  std::string model;
  int sites = 0;
  Operator initial;
  Operator final_hamiltonian;
  Operator composed_unitary;  // U_N = e^{−s_1W_1}···e^{−s_NW_N}
  std::vector<FlowStep> steps;

  // Indexed by k = 0..N.
  std::vector<RealVector> diagonals;
  std::vector<RealVector> column_offdiag_sq;  // Σ_{j≠μ}|H_k[j,μ]|² per μ
  std::vector<double> offdiag_norms;

  // Present only when snapshots are kept; generators indexed by step (W_1..W_N).
  std::vector<Operator> snapshots;
  std::vector<Operator> generators;

  Termination termination = Termination::completed;
  std::string termination_reason;

  bool has_snapshots() const { return !snapshots.empty(); }
};

FlowTrace run_flow(const Hermitian& h, const FlowPolicy& policy, int steps,
                   const StepSearchConfig& cfg, const FlowOptions& options = {},
                   std::string model = "custom");

// −2‖[ΔJ, σJ]‖²_HS
double predicted_slope(const Hermitian& j);

struct VariationalSlope {
  double slope = 0.0;
  double cos_theta = 0.0;
};

// −2 Re⟨W^(Z), W⟩_HS and the Cauchy-Schwarz cosine against the canonical bracket.
VariationalSlope variational_slope(const Hermitian& j, const GeneratorKind& kind);

// Hermitian generator G_k = −iW_k so that each circuit step is e^{−i s_k G_k} = e^{−s_k W_k}.
struct CircuitEntry {
  double s = 0.0;
  std::string kind;
  PauliSum generator;
};

struct PrecompiledCircuit {
  int sites = 0;
  std::vector<CircuitEntry> entries;

  // Product e^{−s_1W_1}···e^{−s_NW_N} rebuilt from the Pauli generators.
  Operator compose() const;

  // Lines "duration coefficient word", one "# step k kind" header per entry.
  std::string to_text() const;
  static PrecompiledCircuit from_text(const std::string& text);
};

PrecompiledCircuit precompile(const FlowTrace& trace);

// Plain discretized GWW flow with a fixed step s: U_N = Π e^{−sW_k}.
struct DiscretizedFlow {
  Operator unitary;
  Operator hamiltonian;
};

DiscretizedFlow discretized_flow(const Hermitian& h, int steps, double s);

}  // namespace dbf
