#include "dbflow/circuit.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <random>

namespace {

using namespace dbf;

const Complex I1(0.0, 1.0);

Hermitian herm(const Matrix& m) { return Hermitian::check(Operator(m)); }

// Z_μ as a Kronecker word, site 1 leftmost.
Matrix z_word(int sites, std::uint32_t mu) {
  std::string w;
  for (int j = 0; j < sites; ++j) w += (mu >> (sites - 1 - j)) & 1u ? 'Z' : 'I';
  return oracle::word(w);
}

Matrix oracle_pinching(const Matrix& j, int sites, double s, const std::vector<std::uint32_t>& order) {
  const auto dim = j.rows();
  const Matrix e = oracle::expm(-I1 * (s / double(dim)) * j);
  Matrix u = Matrix::Identity(dim, dim);
  for (auto mu : order) u = u * z_word(sites, mu) * e * z_word(sites, mu);
  return u;
}

std::vector<std::uint32_t> lex(int sites) {
  std::vector<std::uint32_t> o(std::size_t{1} << sites);
  for (std::uint32_t i = 0; i < o.size(); ++i) o[i] = i;
  return o;
}

Matrix oracle_gc(const Matrix& j, int sites, double s) {
  const double r = std::sqrt(s);
  const Matrix a = oracle_pinching(j, sites, r, lex(sites));
  const Matrix b = oracle::expm(I1 * r * j);
  return a.adjoint() * b * a * b.adjoint();
}

Matrix oracle_canonical_w(const Matrix& h) {
  const Matrix d = h.diagonal().asDiagonal();
  return d * (h - d) - (h - d) * d;
}

TEST(QueryCount, Examples) {
  EXPECT_EQ(query_count(0, 8), 1);
  EXPECT_EQ(query_count(1, 8), 18);
  EXPECT_EQ(query_count(2, 8), 324);
  const QueryCount big = query_count(32, 512);
  QueryCount expected = 1;
  for (int i = 0; i < 32; ++i) expected *= 1026;
  EXPECT_EQ(big, expected);
  EXPECT_THROW(query_count(-1, 8), std::invalid_argument);
}

TEST(QueryLedger, AddMultiplyAndOverflow) {
  QueryLedger l;
  l.add(18, "a");
  l.multiply(18, "b");
  l.add(2, "c");
  EXPECT_EQ(l.total(), 326);
  ASSERT_EQ(l.breakdown().size(), 3u);
  EXPECT_EQ(l.breakdown()[1].total_after, 324);
  EXPECT_EQ(l.total_u64(), std::optional<std::uint64_t>(326));
  for (int i = 0; i < 10; ++i) l.multiply(1026, "big");
  EXPECT_FALSE(l.total_u64().has_value());
  EXPECT_GT(l.total(), QueryCount(0));
  EXPECT_THROW(l.add(-1, "neg"), std::invalid_argument);
}

TEST(Pinching, MatchesOracleProductAndLedger) {
  const Matrix j = oracle::tlfim(3, 2.0);
  const ComponentResult c = pinching_component(herm(j), 0.07);
  EXPECT_LE((c.unitary.matrix() - oracle_pinching(j, 3, 0.07, lex(3))).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(c.ledger.total(), 8);

  std::vector<std::uint32_t> perm = lex(3);
  std::mt19937_64 rng(29);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<BitString> order;
  for (auto mu : perm) order.emplace_back(3, mu);
  const ComponentResult p = pinching_component(herm(j), 0.07, order);
  EXPECT_LE((p.unitary.matrix() - oracle_pinching(j, 3, 0.07, perm)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Pinching, ZeroDurationAndDiagonalInputAreExact) {
  const Matrix j = oracle::tfim(2, 1.0);
  EXPECT_EQ(pinching_component(herm(j), 0.0).unitary.matrix(), Matrix::Identity(4, 4));
  RealVector d(4);
  d << 0.3, -1.2, 2.0, 0.7;
  const Hermitian diag = Hermitian::check(Operator::diagonal(d));
  const Matrix u = pinching_component(diag, 0.4).unitary.matrix();
  const Matrix expected = oracle::expm(-I1 * 0.4 * Matrix(d.cast<Complex>().asDiagonal()));
  EXPECT_LE((u - expected).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Pinching, RejectsInvalidOrders) {
  const Hermitian j = herm(oracle::tfim(2, 1.0));
  std::vector<BitString> short_order{BitString(2, 0), BitString(2, 1), BitString(2, 2)};
  EXPECT_THROW(pinching_component(j, 0.1, short_order), std::invalid_argument);
  std::vector<BitString> dup{BitString(2, 0), BitString(2, 1), BitString(2, 1), BitString(2, 3)};
  EXPECT_THROW(pinching_component(j, 0.1, dup), std::invalid_argument);
  std::vector<BitString> wrong{BitString(3, 0), BitString(3, 1), BitString(3, 2), BitString(3, 3)};
  EXPECT_THROW(pinching_component(j, 0.1, wrong), DimensionError);
}

TEST(Pinching, ErrorWithinBoundAndQuadratic) {
  const Matrix j = oracle::tlfim(3, 2.0);
  const Matrix dj = Matrix(j.diagonal().asDiagonal());
  const double norm = oracle::op_norm(j);
  std::vector<double> ss{1e-3, 3e-3, 1e-2, 3e-2};
  std::vector<double> errs;
  for (double s : ss) {
    const Matrix u = pinching_component(herm(j), s).unitary.matrix();
    const double e = oracle::op_norm(u - oracle::expm(-I1 * s * dj));
    EXPECT_LE(e, 8 * s * s * norm * norm) << s;
    errs.push_back(e);
  }
  EXPECT_NEAR(fit_loglog_slope(ss, errs), 2.0, 0.1);
}

TEST(GroupCommutator, MatchesOracleAndLedger) {
  const Matrix j = oracle::tfim(3, 1.0);
  const ComponentResult c = group_commutator_component(herm(j), 0.01);
  EXPECT_LE((c.unitary.matrix() - oracle_gc(j, 3, 0.01)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(c.ledger.total(), 18);
  EXPECT_EQ(group_commutator_component(herm(j), 0.0).unitary.matrix(), Matrix::Identity(8, 8));
  EXPECT_THROW(group_commutator_component(herm(j), -0.1), std::invalid_argument);
}

TEST(GroupCommutator, InverseComposesToIdentity) {
  const Hermitian j = herm(oracle::tlfim(3, 2.0));
  for (double s : {1e-3, 0.05}) {
    const Matrix v = group_commutator_component(j, s).unitary.matrix();
    const Matrix vi = group_commutator_component(j, s, std::nullopt, true).unitary.matrix();
    EXPECT_LE((vi * v - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((vi - v.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
    const Matrix p = pinching_component(j, s).unitary.matrix();
    const Matrix pi = pinching_component(j, s, std::nullopt, true).unitary.matrix();
    EXPECT_LE((pi * p - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(GroupCommutator, ApproximatesCanonicalStep) {
  const Matrix j = oracle::tfim(3, 1.0);
  const Matrix w = oracle_canonical_w(j);
  const double norm = oracle::op_norm(j);
  for (double s : {1e-4, 1e-3, 1e-2}) {
    const Matrix v = group_commutator_component(herm(j), s).unitary.matrix();
    const double e = oracle::op_norm(v - oracle::expm(-s * w));
    EXPECT_LE(e, 256 * std::pow(s, 1.5) * std::pow(norm, 3) + 16 * s * s * norm * norm) << s;
  }
}

TEST(ExactGroupCommutator, TargetsSquaredDurationWithCubicError) {
  const Matrix j = oracle::tlfim(3, 2.0);
  const Matrix w = oracle_canonical_w(j);
  const Matrix dj = Matrix(j.diagonal().asDiagonal());
  std::vector<double> ss{1e-3, 2e-3, 5e-3, 1e-2, 2e-2};
  std::vector<double> errs;
  for (double s : ss) {
    const ComponentError e = exact_group_commutator(herm(j), s);
    const Matrix gc = oracle::expm(I1 * s * dj) * oracle::expm(I1 * s * j) * oracle::expm(-I1 * s * dj) *
                      oracle::expm(-I1 * s * j);
    const double ref = oracle::op_norm(gc - oracle::expm(-s * s * w));
    EXPECT_NEAR(e.measured, ref, 1e-9);
    EXPECT_TRUE(e.pass()) << s;
    EXPECT_GT(e.half_convention, e.measured);
    errs.push_back(e.measured);
  }
  EXPECT_NEAR(fit_loglog_slope(ss, errs), 3.0, 0.15);
  EXPECT_EQ(exact_group_commutator(herm(j), 0.0).measured, 0.0);
}

TEST(Recursive, FrameConsistencyAndLedger) {
  const Matrix h = oracle::tfim(2, 1.0);
  const RecursiveRun run = recursive_algorithm(herm(h), 4, 0.05);
  const Matrix& v = run.unitary.matrix();
  EXPECT_LE((v.adjoint() * h * v - run.frame.matrix()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(run.ledger.total(), query_count(4, 4));
  ASSERT_EQ(run.offdiag_norms.size(), 5u);
  for (std::size_t k = 1; k < run.offdiag_norms.size(); ++k) {
    EXPECT_LT(run.offdiag_norms[k], run.offdiag_norms[k - 1]);
  }
  // Oracle recursion V_k = V_{k-1}·GC(J_{k-1}).
  Matrix jk = h;
  Matrix vk = Matrix::Identity(4, 4);
  for (int k = 0; k < 4; ++k) {
    const Matrix g = oracle_gc(jk, 2, 0.05);
    vk = vk * g;
    jk = g.adjoint() * jk * g;
  }
  EXPECT_LE((vk - v).cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_THROW(recursive_algorithm(herm(h), 0, 0.1), std::invalid_argument);
}

TEST(Recursive, ConvergesToDiscretizedFlow) {
  const Hermitian h = Hermitian::check(build_tfim(2, 1.0).to_operator());
  const double ell = 0.1;
  double previous = 1e300;
  for (int n : {4, 8, 16, 32}) {
    const RecursiveRun run = recursive_algorithm(h, n, ell / n);
    const DiscretizedFlow ref = discretized_flow(h, n, ell / n);
    const double d = op_norm(run.unitary.op() - ref.unitary);
    EXPECT_LT(d, previous) << n;
    previous = d;
  }
  EXPECT_LT(previous, 0.05);
}

TEST(StepQueries, Costs) {
  EXPECT_EQ(step_queries(Canonical{}, 8), 18);
  EXPECT_EQ(step_queries(FixedFlip{BitString(3, 1), 1}, 8), 2);
  EXPECT_EQ(step_queries(Canonical{}, 8, 18), 324);
}

TEST(RepeatedStep, MatchesOracleAndLedger) {
  const Matrix j = oracle::tlfim(3, 2.0);
  const RepeatedStep rep = repeated_step(herm(j), Canonical{}, 0.01, 3);
  const Matrix g = oracle_gc(j, 3, 0.01);
  Matrix jk = j;
  for (int k = 0; k < 3; ++k) jk = g.adjoint() * jk * g;
  EXPECT_LE((rep.hamiltonian.matrix() - jk).cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_EQ(rep.ledger.total(), 54);
  ASSERT_EQ(rep.offdiag_norms.size(), 4u);
  ASSERT_EQ(rep.sigma_decrease.size(), 3u);
  EXPECT_DOUBLE_EQ(rep.sigma_decrease[2], rep.offdiag_norms[3] - rep.offdiag_norms[0]);

  const FixedFlip flip{BitString::parse("100"), 1};
  const RepeatedStep rf = repeated_step(herm(j), flip, 0.04, 2);
  const Matrix z = z_word(3, 0b100);
  const double r = 0.2;
  const Matrix c = oracle::expm(I1 * r * z) * oracle::expm(I1 * r * j) * oracle::expm(-I1 * r * z) *
                   oracle::expm(-I1 * r * j);
  const Matrix j2 = c.adjoint() * c.adjoint() * j * c * c;
  EXPECT_LE((rf.hamiltonian.matrix() - j2).cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_EQ(rf.ledger.total(), 4);
}

TEST(Certification, BoundsHoldWithExpectedSlopes) {
  const Hermitian j = Hermitian::check(build_tfim(3, 1.0).to_operator());
  const std::vector<double> ss{1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1};
  const CertificationReport r = certify_bounds(j, ss);
  EXPECT_EQ(r.rows.size(), 3 * ss.size());
  EXPECT_TRUE(r.all_pass());
  for (const auto& [name, slope] : r.slopes) {
    // Quadratic or faster; the parity symmetry of this chain cancels the s² term.
    if (name == "pinching") EXPECT_GE(slope, 1.85);
    if (name == "group_commutator_exact") EXPECT_NEAR(slope, 3.0, 0.15);
  }
  const std::string csv = r.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "component,s,measured,bound,pass");
  const auto parsed = nlohmann::json::parse(r.to_json());
  EXPECT_TRUE(parsed.at("all_pass").get<bool>());
  EXPECT_EQ(parsed.at("rows").size(), r.rows.size());
  EXPECT_THROW(certify_bounds(j, {0.0}), std::invalid_argument);
}

TEST(Certification, LogLogSlope) {
  EXPECT_NEAR(fit_loglog_slope({1, 2, 4}, {3, 12, 48}), 2.0, 1e-12);
  EXPECT_TRUE(std::isnan(fit_loglog_slope({1, 2}, {0, 1})));
}

}  // namespace
