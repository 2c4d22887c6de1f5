#include "dbflow/circuit.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <set>

namespace dbf {

namespace {

Eigen::VectorXd flip_signs(std::uint32_t mu, Index dim) {
  Eigen::VectorXd z(dim);
  for (Index b = 0; b < dim; ++b) z(b) = overlap_sign(static_cast<std::uint32_t>(b), mu);
  return z;
}

void validate_order(const std::vector<BitString>& order, int sites) {
  const std::size_t dim = std::size_t{1} << sites;
  if (order.size() != dim) {
    throw std::invalid_argument(fmt::format("flip order must list all {} bit strings, got {}", dim, order.size()));
  }
  std::set<std::uint32_t> seen;
  for (const auto& mu : order) {
    if (mu.length() != sites) throw DimensionError("flip order entry has the wrong length");
    if (!seen.insert(mu.mask()).second) {
      throw std::invalid_argument("flip order repeats " + mu.to_string());
    }
  }
}

// Π_μ Z_μ E Z_μ with E = e^{-itJ}; the inverse circuit uses E† in reversed order.
Matrix flip_product(const HermitianEigensystem& es, double t, const std::vector<BitString>& order, bool inverse) {
  const Index dim = es.eigenvectors().rows();
  const Matrix e = t == 0.0 ? Matrix(Matrix::Identity(dim, dim)) : es.evolution(inverse ? -t : t);
  Matrix u = Matrix::Identity(dim, dim);
  const auto apply = [&](const BitString& mu) {
    const Eigen::VectorXd z = flip_signs(mu.mask(), dim);
    u = u * z.asDiagonal();
    u = u * e;
    u = u * z.asDiagonal();
  };
  if (inverse) {
    for (auto it = order.rbegin(); it != order.rend(); ++it) apply(*it);
  } else {
    for (const auto& mu : order) apply(mu);
  }
  return u;
}

std::vector<BitString> resolve_order(const std::optional<std::vector<BitString>>& order, int sites) {
  if (!order) return lexicographic_flips(sites);
  validate_order(*order, sites);
  return *order;
}

Matrix diagonal_phases(const RealVector& d, double t) {
  return (d.cast<Complex>() * Complex(0.0, -t)).array().exp().matrix().asDiagonal();
}

}  // namespace

void QueryLedger::add(const QueryCount& n, std::string label) {
  if (n < 0) throw std::invalid_argument("query counts are nonnegative");
  total_ += n;
  breakdown_.push_back({std::move(label), total_});
}

void QueryLedger::multiply(const QueryCount& factor, std::string label) {
  if (factor < 0) throw std::invalid_argument("query factors are nonnegative");
  total_ *= factor;
  breakdown_.push_back({std::move(label), total_});
}

std::optional<std::uint64_t> QueryLedger::total_u64() const {
  if (total_ > QueryCount(std::numeric_limits<std::uint64_t>::max())) return std::nullopt;
  return total_.convert_to<std::uint64_t>();
}

QueryCount query_count(int steps, Index dim) {
  if (steps < 0) throw std::invalid_argument("query_count: negative step count");
  if (dim < 1) throw DimensionError("query_count: dimension must be positive");
  return boost::multiprecision::pow(QueryCount(2 * dim + 2), static_cast<unsigned>(steps));
}

std::vector<BitString> lexicographic_flips(int sites) {
  std::vector<BitString> out;
  const std::uint32_t dim = 1u << sites;
  out.reserve(dim);
  for (std::uint32_t mu = 0; mu < dim; ++mu) out.emplace_back(sites, mu);
  return out;
}

ComponentResult pinching_component(const Hermitian& j, double s, const std::optional<std::vector<BitString>>& order,
                                   bool inverse) {
  const int sites = sites_for_dim(j.dim());
  const auto flips = resolve_order(order, sites);
  const HermitianEigensystem es(j);
  QueryLedger ledger;
  ledger.add(j.dim(), "pinching");
  const double t = s / static_cast<double>(j.dim());
  return {Unitary::check(Operator(flip_product(es, t, flips, inverse))), std::move(ledger)};
}

ComponentResult group_commutator_component(const Hermitian& j, double s,
                                           const std::optional<std::vector<BitString>>& order, bool inverse) {
  if (s < 0) throw std::invalid_argument("group_commutator_component: duration must be nonnegative");
  const int sites = sites_for_dim(j.dim());
  const Index dim = j.dim();
  const auto flips = resolve_order(order, sites);
  QueryLedger ledger;
  ledger.add(2 * dim + 2, "group commutator");
  if (s == 0.0) return {Unitary::check(Operator::identity(dim), 0.0), std::move(ledger)};

  const double r = std::sqrt(s);
  const HermitianEigensystem es(j);
  const Matrix a = flip_product(es, r / static_cast<double>(dim), flips, false);
  const Matrix b = es.evolution(-r);  // e^{irJ}
  const Matrix v = inverse ? Matrix(b * a.adjoint() * b.adjoint() * a) : Matrix(a.adjoint() * b * a * b.adjoint());
  return {Unitary::check(Operator(v)), std::move(ledger)};
}

ComponentError exact_group_commutator(const Hermitian& j, double s) {
  ComponentError out;
  out.s = s;
  if (s == 0.0) return out;
  const RealVector delta = j.matrix().diagonal().real();
  const HermitianEigensystem es(j);
  const Matrix gc = diagonal_phases(delta, -s) * es.evolution(-s) * diagonal_phases(delta, s) * es.evolution(s);
  const AntiHermitian w = canonical_bracket(j);
  const Operator g(gc);
  out.measured = op_norm(g - exp_antihermitian(w, -s * s).op());
  out.half_convention = op_norm(g - exp_antihermitian(w, -0.5 * s * s).op());
  out.bound = 4.0 * op_norm(j) * op_norm(w) * s * s * s;
  return out;
}

RecursiveRun recursive_algorithm(const Hermitian& h, int steps, double s) {
  if (steps < 1) throw std::invalid_argument("recursive_algorithm: need at least one step");
  if (!(s > 0.0)) throw std::invalid_argument("recursive_algorithm: duration must be positive");
  const Index dim = h.dim();
  const QueryCount per_step = 2 * dim + 2;
  Hermitian jk = h;
  Matrix v = Matrix::Identity(dim, dim);
  QueryLedger ledger;
  std::vector<double> norms{hs_norm(offdiag(h))};
  for (int k = 1; k <= steps; ++k) {
    const ComponentResult c = group_commutator_component(jk, s);
    v = v * c.unitary.matrix();
    jk = Hermitian::project(conjugate(jk, c.unitary));
    if (k == 1) {
      ledger.add(per_step, "step 1");
    } else {
      ledger.multiply(per_step, fmt::format("step {}", k));
    }
    norms.push_back(hs_norm(offdiag(jk)));
  }
  return {Unitary::check(Operator(std::move(v))), jk.op(), std::move(ledger), std::move(norms)};
}

QueryCount step_queries(const GeneratorKind& kind, Index dim, const QueryCount& frame_queries) {
  const QueryCount per = std::holds_alternative<Canonical>(kind) ? QueryCount(2 * dim + 2) : QueryCount(2);
  return per * frame_queries;
}

RepeatedStep repeated_step(const Hermitian& j, const GeneratorKind& kind, double s, int repetitions,
                           const QueryCount& frame_queries) {
  if (repetitions < 1) throw std::invalid_argument("repeated_step: need at least one repetition");
  if (!(s > 0.0)) throw std::invalid_argument("repeated_step: duration must be positive");
  Matrix component;
  if (std::holds_alternative<Canonical>(kind)) {
    component = group_commutator_component(j, s).unitary.matrix();
  } else {
    const RealVector delta = bracket_diagonal(j, kind);
    const double r = std::sqrt(s);
    const HermitianEigensystem es(j);
    component = diagonal_phases(delta, -r) * es.evolution(-r) * diagonal_phases(delta, r) * es.evolution(r);
  }
  const Unitary c = Unitary::check(Operator(std::move(component)));
  const QueryCount cost = step_queries(kind, j.dim(), frame_queries);

  RepeatedStep out{j.op(), {}, {hs_norm(offdiag(j))}, {}};
  Hermitian current = j;
  for (int k = 1; k <= repetitions; ++k) {
    current = Hermitian::project(conjugate(current, c));
    out.ledger.add(cost, fmt::format("repetition {}", k));
    out.offdiag_norms.push_back(hs_norm(offdiag(current)));
    out.sigma_decrease.push_back(out.offdiag_norms.back() - out.offdiag_norms.front());
  }
  out.hamiltonian = current.op();
  return out;
}

bool CertificationReport::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const CertificationRow& r) { return r.pass; });
}

std::string CertificationReport::to_csv() const {
  std::string out = "component,s,measured,bound,pass\n";
  for (const auto& r : rows) out += fmt::format("{},{},{},{},{}\n", r.component, r.s, r.measured, r.bound, r.pass ? 1 : 0);
  return out;
}

std::string CertificationReport::to_json() const {
  nlohmann::ordered_json j;
  j["all_pass"] = all_pass();
  auto& slopes_json = j["loglog_slopes"] = nlohmann::ordered_json::object();
  for (const auto& [name, slope] : slopes) {
    slopes_json[name] = std::isfinite(slope) ? nlohmann::ordered_json(slope) : nlohmann::ordered_json(nullptr);
  }
  auto& rows_json = j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"component", r.component}, {"s", r.s}, {"measured", r.measured}, {"bound", r.bound},
                         {"pass", r.pass}});
  }
  return j.dump(2) + "\n";
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_loglog_slope: size mismatch");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / denom;
}

CertificationReport certify_bounds(const Hermitian& j, const std::vector<double>& s_values,
                                   const std::optional<std::vector<BitString>>& order) {
  const double norm = op_norm(j);
  const AntiHermitian w = canonical_bracket(j);
  const RealVector delta = j.matrix().diagonal().real();
  CertificationReport report;
  std::vector<double> pinch_err, gc_err, exact_err;
  for (const double s : s_values) {
    if (!(s > 0.0)) throw std::invalid_argument("certify_bounds: durations must be positive");
    const Unitary vp = pinching_component(j, s, order).unitary;
    const double ep = op_norm(vp.op() - Operator(diagonal_phases(delta, s)));
    const double bp = 8.0 * s * s * norm * norm;
    report.rows.push_back({"pinching", s, ep, bp, ep <= bp});
    pinch_err.push_back(ep);

    const Unitary vg = group_commutator_component(j, s, order).unitary;
    const double eg = op_norm(vg.op() - exp_antihermitian(w, -s).op());
    const double bg = 256.0 * std::pow(s, 1.5) * norm * norm * norm + 16.0 * s * s * norm * norm;
    report.rows.push_back({"group_commutator_component", s, eg, bg, eg <= bg});
    gc_err.push_back(eg);

    const ComponentError ex = exact_group_commutator(j, s);
    report.rows.push_back({"group_commutator_exact", s, ex.measured, ex.bound, ex.pass()});
    exact_err.push_back(ex.measured);
  }
  report.slopes = {{"pinching", fit_loglog_slope(s_values, pinch_err)},
                   {"group_commutator_component", fit_loglog_slope(s_values, gc_err)},
                   {"group_commutator_exact", fit_loglog_slope(s_values, exact_err)}};
  return report;
}

}  // namespace dbf
