#include "dbflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <sstream>

namespace dbf {

namespace {

constexpr double kZeroBracketRel = 1e-13;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// [Δ, J] for diagonal Δ: entry (r,c) is (δ_r − δ_c)·J_rc.
Matrix diagonal_bracket(const RealVector& delta, const Matrix& j) {
  const Index n = j.rows();
  Matrix w(n, n);
  for (Index c = 0; c < n; ++c) {
    for (Index r = 0; r < n; ++r) w(r, c) = (delta(r) - delta(c)) * j(r, c);
  }
  return w;
}

bool is_zero_bracket(const AntiHermitian& w, const RealVector& delta, const Hermitian& j) {
  const double wn = hs_norm(w);
  return wn == 0.0 || wn <= kZeroBracketRel * delta.norm() * hs_norm(j);
}

bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= 1e-12 * (std::abs(a) + std::abs(b));
}

}  // namespace

std::string describe(const GeneratorKind& kind) {
  return std::visit(overloaded{
                        [](const Canonical&) { return std::string("canonical"); },
                        [](const FixedFlip& f) {
                          return std::string(f.sign < 0 ? "-Z[" : "Z[") + f.mu.to_string() + "]";
                        },
                        [](const CustomDiagonal&) { return std::string("custom"); },
                    },
                    kind);
}

CustomDiagonal custom_diagonal(const Operator& delta) {
  if (!delta.is_diagonal()) throw StructureError("custom bracket operator must be diagonal");
  if (delta.matrix().diagonal().imag().cwiseAbs().maxCoeff() > default_tolerance(delta.dim())) {
    throw StructureError("custom bracket operator must have a real diagonal");
  }
  return CustomDiagonal{delta.matrix().diagonal().real()};
}

RealVector bracket_diagonal(const Hermitian& j, const GeneratorKind& kind) {
  const Index n = j.dim();
  return std::visit(overloaded{
                        [&](const Canonical&) -> RealVector { return j.matrix().diagonal().real(); },
                        [&](const FixedFlip& f) -> RealVector {
                          if ((Index{1} << f.mu.length()) != n) {
                            throw DimensionError("phase flip length does not match the register");
                          }
                          RealVector d(n);
                          for (Index b = 0; b < n; ++b) {
                            d(b) = f.sign * overlap_sign(static_cast<std::uint32_t>(b), f.mu.mask());
                          }
                          return d;
                        },
                        [&](const CustomDiagonal& c) -> RealVector {
                          if (c.diagonal.size() != n) {
                            throw DimensionError("custom diagonal does not match the register");
                          }
                          return c.diagonal;
                        },
                    },
                    kind);
}

AntiHermitian bracket_for(const Hermitian& j, const GeneratorKind& kind) {
  if (std::holds_alternative<Canonical>(kind)) return canonical_bracket(j);
  const RealVector delta = bracket_diagonal(j, kind);
  return AntiHermitian::check(Operator(diagonal_bracket(delta, j.matrix())),
                              j.tolerance() * (1.0 + 2.0 * delta.cwiseAbs().maxCoeff()));
}

Hermitian flow_step(const Hermitian& j, const GeneratorKind& kind, double s) {
  if (s < 0) throw std::invalid_argument("flow_step: duration must be nonnegative");
  if (s == 0.0) return j;
  const AntiHermitian w = bracket_for(j, kind);
  return Hermitian::project(conjugate(j, exp_antihermitian(w, -s)));
}

void StepSearchConfig::validate() const {
  if (!(s_min > 0.0) || !(s_max > s_min)) {
    throw std::invalid_argument("step search needs 0 < s_min < s_max");
  }
  if (grid_points < 8) throw std::invalid_argument("step search needs grid_points >= 8");
  if (refine_iterations < 0) throw std::invalid_argument("refine_iterations must be >= 0");
}

DurationScan::DurationScan(const Hermitian& j, const AntiHermitian& w)
    : spectrum_(Operator(Complex(0.0, 1.0) * w.matrix())),
      j_eig_(spectrum_.to_eigenbasis(j.matrix())),
      j_norm_sq_(j.matrix().squaredNorm()),
      w_norm_(hs_norm(w)) {}

double DurationScan::offdiag_norm(double s) const {
  const Matrix& q = spectrum_.eigenvectors();
  const Index n = q.rows();
  const Eigen::VectorXcd phases =
      (spectrum_.eigenvalues().cast<Complex>() * Complex(0.0, -s)).array().exp().matrix();
  const Matrix m = phases.asDiagonal() * j_eig_ * phases.conjugate().asDiagonal();
  if (n > 64) {
    // Only the diagonal of Q M Q† is needed: ‖σ‖² = ‖J‖² − Σ d_i².
    const Matrix qm = q * m;
    const RealVector d = qm.cwiseProduct(q.conjugate()).rowwise().sum().real();
    const double sigma_sq = j_norm_sq_ - d.squaredNorm();
    if (sigma_sq > 1e-6 * j_norm_sq_) return std::sqrt(sigma_sq);
  }
  Matrix full = q * m * q.adjoint();
  full.diagonal().setZero();
  return full.norm();
}

Hermitian DurationScan::flowed(double s) const {
  return Hermitian::project(Operator(spectrum_.evolve_from_eigenbasis(j_eig_, s)));
}

StepChoice optimize_step_duration(const Hermitian& j, const GeneratorKind& kind,
                                  const StepSearchConfig& cfg) {
  cfg.validate();
  const AntiHermitian w = bracket_for(j, kind);
  if (is_zero_bracket(w, bracket_diagonal(j, kind), j)) {
    throw ZeroBracketError("bracket " + describe(kind) + " vanishes: fixed point");
  }
  const DurationScan scan(j, w);

  StepChoice best;
  best.offdiag_before = hs_norm(offdiag(j));
  best.offdiag_after = std::numeric_limits<double>::infinity();
  const auto consider = [&](double s, double value) {
    if (value < best.offdiag_after || (value == best.offdiag_after && s < best.s)) {
      best.offdiag_after = value;
      best.s = s;
    }
  };

  const int n = cfg.grid_points;
  const double ratio = std::log(cfg.s_max / cfg.s_min);
  std::vector<double> grid(static_cast<std::size_t>(n));
  std::size_t best_index = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    grid[static_cast<std::size_t>(i)] = cfg.s_min * std::exp(ratio * i / (n - 1));
    const double v = scan.offdiag_norm(grid[static_cast<std::size_t>(i)]);
    if (v < best_value) {
      best_value = v;
      best_index = static_cast<std::size_t>(i);
    }
  }
  consider(grid[best_index], best_value);

  if (cfg.refine_iterations == 0) {
    best.sigma_decrease = best.offdiag_after - best.offdiag_before;
    return best;
  }

  // Golden-section search between the neighbours of the best grid point.
  double lo = grid[best_index == 0 ? 0 : best_index - 1];
  double hi = grid[std::min(best_index + 1, grid.size() - 1)];
  constexpr double inv_phi = 0.6180339887498949;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = scan.offdiag_norm(x1);
  double f2 = scan.offdiag_norm(x2);
  consider(x1, f1);
  consider(x2, f2);
  for (int it = 0; it < cfg.refine_iterations; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = scan.offdiag_norm(x1);
      consider(x1, f1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = scan.offdiag_norm(x2);
      consider(x2, f2);
    }
  }
  best.sigma_decrease = best.offdiag_after - best.offdiag_before;
  return best;
}

GeneratorChoice select_generator(const Hermitian& j, const std::vector<GeneratorKind>& candidates,
                                 const StepSearchConfig& cfg) {
  if (candidates.empty()) throw std::invalid_argument("select_generator: no candidates");
  std::optional<GeneratorChoice> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    StepChoice step;
    try {
      step = optimize_step_duration(j, candidates[i], cfg);
    } catch (const ZeroBracketError&) {
      continue;
    }
    bool better = !best;
    if (best) {
      const double a = step.sigma_decrease;
      const double b = best->step.sigma_decrease;
      if (nearly_equal(a, b)) {
        better = !nearly_equal(step.s, best->step.s) && step.s < best->step.s;
      } else {
        better = a < b;
      }
    }
    if (better) best = GeneratorChoice{candidates[i], step, i};
  }
  if (!best) throw ZeroBracketError("all candidate brackets vanish: flow terminated");
  return *best;
}

std::vector<GeneratorKind> variational_candidates(int sites) {
  std::vector<GeneratorKind> out{Canonical{}};
  const std::uint32_t count = 1u << sites;
  for (std::uint32_t mu = 1; mu < count; ++mu) {
    out.emplace_back(FixedFlip{BitString(sites, mu), 1});
    out.emplace_back(FixedFlip{BitString(sites, mu), -1});
  }
  return out;
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::completed: return "completed";
    case Termination::zero_bracket: return "zero_bracket";
    case Termination::saturated: return "saturated";
  }
  return "unknown";
}

namespace {

void record_observables(FlowTrace& trace, const Operator& hk, bool keep) {
  trace.diagonals.push_back(hk.matrix().diagonal().real());
  Matrix off = hk.matrix();
  off.diagonal().setZero();
  trace.column_offdiag_sq.push_back(off.colwise().squaredNorm().transpose());
  trace.offdiag_norms.push_back(off.norm());
  if (keep) trace.snapshots.push_back(hk);
}

}  // namespace

FlowTrace run_flow(const Hermitian& h, const FlowPolicy& policy, int steps,
                   const StepSearchConfig& cfg, const FlowOptions& options, std::string model) {
  if (steps < 0) throw std::invalid_argument("run_flow: negative step count");
  const int sites = sites_for_dim(h.dim());
  const bool keep = options.keep_snapshots.value_or(sites <= 7);
  const double h_norm = hs_norm(h);

  FlowTrace trace;
  trace.model = std::move(model);
  trace.sites = sites;
  trace.initial = h.op();
  record_observables(trace, h, keep);

  Hermitian j = h;
  Matrix u = Matrix::Identity(h.dim(), h.dim());
  for (int k = 1; k <= steps; ++k) {
    GeneratorChoice choice;
    try {
      choice = select_generator(j, policy.candidates, cfg);
    } catch (const ZeroBracketError& e) {
      trace.termination = Termination::zero_bracket;
      trace.termination_reason = fmt::format("step {}: {}", k, e.what());
      break;
    }
    if (choice.step.sigma_decrease >= -options.saturation * h_norm) {
      trace.termination = Termination::saturated;
      trace.termination_reason =
          fmt::format("step {}: best sigma-decrease {} above saturation threshold", k, choice.step.sigma_decrease);
      break;
    }
    const AntiHermitian w = bracket_for(j, choice.kind);
    const Unitary v = exp_antihermitian(w, -choice.step.s);
    Hermitian next = Hermitian::project(conjugate(j, v));
    const double before = trace.offdiag_norms.back();
    const double after = hs_norm(offdiag(next));
    if (!(after < before)) {
      trace.termination = Termination::saturated;
      trace.termination_reason = fmt::format("step {}: no sigma-decreasing duration found", k);
      break;
    }
    u = u * v.matrix();
    trace.steps.push_back(FlowStep{k, choice.kind, choice.step.s, before, after, after - before, hs_norm(w)});
    if (keep) trace.generators.push_back(w.op());
    j = std::move(next);
    record_observables(trace, j, keep);
  }
  trace.final_hamiltonian = j.op();
  trace.composed_unitary = Operator(std::move(u));
  return trace;
}

double predicted_slope(const Hermitian& j) {
  const double n = hs_norm(canonical_bracket(j));
  return -2.0 * n * n;
}

VariationalSlope variational_slope(const Hermitian& j, const GeneratorKind& kind) {
  const AntiHermitian wz = bracket_for(j, kind);
  if (is_zero_bracket(wz, bracket_diagonal(j, kind), j)) {
    throw ZeroBracketError("variational_slope: bracket " + describe(kind) + " vanishes");
  }
  const AntiHermitian w = canonical_bracket(j);
  const double overlap = hs_inner(wz, w).real();
  const double denom = hs_norm(wz) * hs_norm(w);
  return {-2.0 * overlap, denom == 0.0 ? 0.0 : std::clamp(overlap / denom, -1.0, 1.0)};
}

Operator PrecompiledCircuit::compose() const {
  const Index dim = Index{1} << sites;
  Matrix u = Matrix::Identity(dim, dim);
  for (const auto& e : entries) {
    const HermitianEigensystem es(e.generator.to_operator());
    u = u * es.evolution(e.s);
  }
  return Operator(std::move(u));
}

std::string PrecompiledCircuit::to_text() const {
  std::string out;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    out += fmt::format("# step {} {}\n", k + 1, e.kind);
    for (const auto& t : e.generator.terms()) out += fmt::format("{} {} {}\n", e.s, t.coefficient, t.word);
  }
  return out;
}

PrecompiledCircuit PrecompiledCircuit::from_text(const std::string& text) {
  PrecompiledCircuit circuit;
  std::istringstream in(text);
  std::string line;
  std::optional<CircuitEntry> current;
  std::string body;
  const auto flush = [&] {
    if (!current) return;
    if (!body.empty()) current->generator = PauliSum::from_text(body);
    circuit.sites = current->generator.sites();
    circuit.entries.push_back(std::move(*current));
    current.reset();
    body.clear();
  };
  while (std::getline(in, line)) {
    if (line.rfind("# step", 0) == 0) {
      flush();
      std::istringstream hdr(line.substr(6));
      int index = 0;
      std::string kind;
      hdr >> index >> kind;
      current.emplace(CircuitEntry{0.0, kind, PauliSum(1)});
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    if (!current) throw ParseError("circuit text: term before the first step header");
    std::istringstream row(line);
    double s = 0.0;
    std::string rest;
    if (!(row >> s)) throw ParseError("circuit text: missing duration column");
    std::getline(row, rest);
    current->s = s;
    body += rest + "\n";
  }
  flush();
  return circuit;
}

PrecompiledCircuit precompile(const FlowTrace& trace) {
  if (trace.steps.empty()) throw std::invalid_argument("precompile: empty trace");
  if (trace.generators.size() != trace.steps.size()) {
    throw std::runtime_error("precompile: trace does not retain its generators (snapshots disabled)");
  }
  PrecompiledCircuit circuit;
  circuit.sites = trace.sites;
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    const Operator g = Complex(0.0, -1.0) * trace.generators[k];
    circuit.entries.push_back(
        CircuitEntry{trace.steps[k].s, describe(trace.steps[k].kind), hermitian_to_pauli_sum(g, trace.sites)});
  }
  return circuit;
}

DiscretizedFlow discretized_flow(const Hermitian& h, int steps, double s) {
  Hermitian j = h;
  Matrix u = Matrix::Identity(h.dim(), h.dim());
  for (int k = 0; k < steps; ++k) {
    const Unitary v = exp_antihermitian(canonical_bracket(j), -s);
    u = u * v.matrix();
    j = Hermitian::project(conjugate(j, v));
  }
  return {Operator(std::move(u)), j.op()};
}

}  // namespace dbf
