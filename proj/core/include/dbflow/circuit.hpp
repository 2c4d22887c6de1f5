#pragma once

// Exact emulation of the flow as a query circuit: pinching by phase flips,
// group-commutator components, recursive frame shifting, repeated steps and
// certification of the component error bounds.

#include "dbflow/flow.hpp"
#include "dbflow/operator.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>
#include <vector>

namespace dbf {

using QueryCount = boost::multiprecision::cpp_int;

// Number of invocations of the evolution e^{-itH}. Arbitrary precision, so
// counts never wrap.
class QueryLedger {
 public:
  struct Entry {
    std::string label;
    QueryCount total_after;
  };

  void add(const QueryCount& n, std::string label);
  void multiply(const QueryCount& factor, std::string label);

  const QueryCount& total() const { return total_; }
  // nullopt when the total does not fit in 64 bits.
  std::optional<std::uint64_t> total_u64() const;
  const std::vector<Entry>& breakdown() const { return breakdown_; }

 private:
  QueryCount total_ = 0;
  std::vector<Entry> breakdown_;
};

// (2D+2)^N
QueryCount query_count(int steps, Index dim);

std::vector<BitString> lexicographic_flips(int sites);

struct ComponentResult {
  Unitary unitary;
  QueryLedger ledger;
};

// Π_μ Z_μ e^{-i(s/D)J} Z_μ over `order` (default lexicographic). `order` must
// list every μ exactly once. With `inverse` the adjoint circuit is built:
// inverted factors in reversed order.
ComponentResult pinching_component(const Hermitian& j, double s,
                                   const std::optional<std::vector<BitString>>& order = std::nullopt,
                                   bool inverse = false);

// V^(Δ)_r(J)† e^{irJ} V^(Δ)_r(J) e^{-irJ} with r = √s, approximating e^{-sW}.
ComponentResult group_commutator_component(const Hermitian& j, double s,
                                           const std::optional<std::vector<BitString>>& order = std::nullopt,
                                           bool inverse = false);

struct ComponentError {
  double s = 0.0;
  double measured = 0.0;
  double bound = 0.0;
  // Distance to e^{-½s²W}, kept as a diagnostic.
  double half_convention = 0.0;
  bool pass() const { return measured <= bound; }
};

// e^{isΔJ} e^{isJ} e^{-isΔJ} e^{-isJ} against e^{-s²W}, bound 4‖J‖‖W‖s³.
ComponentError exact_group_commutator(const Hermitian& j, double s);

struct RecursiveRun {
  Unitary unitary;  // V_N
  Operator frame;   // J_N = V_N† H V_N
  QueryLedger ledger;
  std::vector<double> offdiag_norms;  // ‖σJ_k‖_HS, k = 0..N
};

// V_k = V_{k-1}·V^(GC)_s(J_{k-1}). J_k is cached as a matrix; the ledger
// reports the uncached count (2D+2)^N.
RecursiveRun recursive_algorithm(const Hermitian& h, int steps, double s);

struct RepeatedStep {
  Operator hamiltonian;  // after K repetitions
  QueryLedger ledger;
  std::vector<double> offdiag_norms;   // k = 0..K
  std::vector<double> sigma_decrease;  // cumulative, k = 1..K
};

// Number of H queries spent by one step of this kind at a frame whose
// evolution costs `frame_queries` queries.
QueryCount step_queries(const GeneratorKind& kind, Index dim, const QueryCount& frame_queries = 1);

// Applies the same component K times. Canonical uses V^(GC)_s(J); fixed or
// custom diagonals Δ use e^{irΔ}e^{irJ}e^{-irΔ}e^{-irJ} (two queries).
RepeatedStep repeated_step(const Hermitian& j, const GeneratorKind& kind, double s, int repetitions,
                           const QueryCount& frame_queries = 1);

struct CertificationRow {
  std::string component;
  double s = 0.0;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct CertificationReport {
  std::vector<CertificationRow> rows;
  std::vector<std::pair<std::string, double>> slopes;  // fitted log-log slope per component

  bool all_pass() const;
  std::string to_csv() const;
  std::string to_json() const;
};

// Least-squares slope of log y against log x over points with y > 0; NaN if
// fewer than two such points.
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Pinching (bound 8s²‖J‖²), group-commutator component (256s^1.5‖J‖³ + 16s²‖J‖²)
// and exact group commutator (4‖J‖‖W‖s³) at every s.
CertificationReport certify_bounds(const Hermitian& j, const std::vector<double>& s_values,
                                   const std::optional<std::vector<BitString>>& order = std::nullopt);

}  // namespace dbf
