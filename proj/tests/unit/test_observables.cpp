#include "dbflow/observables.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace {

using namespace dbf;

Hermitian herm(const Matrix& m) { return Hermitian::check(Operator(m)); }

// √(⟨μ|H²|μ⟩ − ⟨μ|H|μ⟩²) from the full square.
double oracle_fluctuation(const Matrix& h, Index mu) {
  const Matrix h2 = h * h;
  const double e = h(mu, mu).real();
  return std::sqrt(std::max(0.0, h2(mu, mu).real() - e * e));
}

TEST(Spectrum, Examples) {
  RealVector d(3);
  d << 3, 1, 2;
  // dim 3 is not a register size but the spectrum does not need one.
  const RealVector s = exact_spectrum(Hermitian::check(Operator::diagonal(d)));
  EXPECT_EQ(s, (RealVector(3) << 1, 2, 3).finished());
  const RealVector zx = exact_spectrum(herm(oracle::word("Z") + oracle::word("X")));
  EXPECT_NEAR(zx(0), -std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(zx(1), std::sqrt(2.0), 1e-14);
}

TEST(Spectrum, MatchesOracleForChains) {
  const Matrix h = oracle::tlfim(6, 2.0);
  const RealVector s = exact_spectrum(herm(h));
  EXPECT_LE((s - oracle::sorted_eigenvalues(h)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT(s(0), -6.0);
  for (Index i = 1; i < s.size(); ++i) EXPECT_LE(s(i - 1), s(i));
}

TEST(Energy, Examples) {
  Matrix zsum = Matrix::Zero(8, 8);
  for (int j = 0; j < 3; ++j) zsum += oracle::word(oracle::single(3, j, 'Z'));
  EXPECT_DOUBLE_EQ(energy_expectation(Operator(zsum), BitString::zeros(3)), 3.0);
  EXPECT_DOUBLE_EQ(energy_expectation(Operator(zsum), BitString::parse("011")), -1.0);
  // Ising bonds have zero expectation in basis states.
  const Operator tf(oracle::tfim(4, 1.7));
  for (std::uint32_t mu = 0; mu < 16; ++mu) {
    const BitString b(4, mu);
    EXPECT_DOUBLE_EQ(energy_expectation(tf, b), 4.0 - 2.0 * b.weight());
  }
  EXPECT_THROW(energy_expectation(tf, BitString::zeros(3)), DimensionError);
}

TEST(Fluctuation, Examples) {
  RealVector d(4);
  d << 1, 2, 3, 4;
  for (std::uint32_t mu = 0; mu < 4; ++mu) {
    EXPECT_EQ(energy_fluctuation(Operator::diagonal(d), BitString(2, mu)), 0.0);
  }
  EXPECT_DOUBLE_EQ(energy_fluctuation(Operator(oracle::word("X")), BitString::zeros(1)), 1.0);
  const Matrix tf2 = oracle::tfim(2, 1.0);
  EXPECT_DOUBLE_EQ(energy_expectation(Operator(tf2), BitString::zeros(2)), 2.0);
  EXPECT_NEAR((tf2 * tf2)(0, 0).real(), 5.0, 1e-14);
  EXPECT_DOUBLE_EQ(energy_fluctuation(Operator(tf2), BitString::zeros(2)), 1.0);
}

TEST(Fluctuation, MatchesSquaredOperatorOracle) {
  std::mt19937_64 rng(37);
  const Matrix h = oracle::random_hermitian(16, rng);
  for (std::uint32_t mu = 0; mu < 16; ++mu) {
    EXPECT_NEAR(energy_fluctuation(Operator(h), BitString(4, mu)), oracle_fluctuation(h, mu), 1e-10);
  }
}

TEST(SpectrumComparison, Examples) {
  const Matrix h = oracle::tfim(3, 1.0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const Matrix diag = es.eigenvectors().adjoint() * h * es.eigenvectors();
  const SpectrumReport exact = spectrum_comparison(herm(h), Operator(diag));
  EXPECT_LE(exact.max_abs_deviation, 1e-9 * oracle::op_norm(h));

  const SpectrumReport k0 = spectrum_comparison(herm(h), Operator(h));
  EXPECT_GT(k0.max_abs_deviation, 0.1);
  const RealVector sd = oracle::sorted_eigenvalues(Matrix(h.diagonal().asDiagonal()));
  EXPECT_LE((k0.sorted_diagonal - sd).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(k0.max_abs_deviation, (k0.sorted_diagonal - oracle::sorted_eigenvalues(h)).cwiseAbs().maxCoeff(), 1e-12);

  RealVector e(2), d(2);
  e << -1, 1;
  d << 0.5, -0.75;
  EXPECT_DOUBLE_EQ(spectrum_comparison(e, d).max_abs_deviation, 0.5);
  EXPECT_THROW(spectrum_comparison(e, RealVector(3)), DimensionError);
}

TEST(StateFlow, MatchesSnapshots) {
  const Hermitian h = herm(oracle::tlfim(3, 2.0));
  const FlowTrace t = run_flow(h, FlowPolicy::canonical(), 5, {});
  ASSERT_TRUE(t.has_snapshots());
  const BitString mu = BitString::ones(3);
  const auto flow = state_flow(t, mu);
  ASSERT_EQ(flow.size(), 6u);
  for (std::size_t k = 0; k < flow.size(); ++k) {
    const Matrix& hk = t.snapshots[k].matrix();
    EXPECT_EQ(flow[k].k, static_cast<int>(k));
    EXPECT_NEAR(flow[k].energy, hk(7, 7).real(), 1e-12);
    EXPECT_NEAR(flow[k].fluctuation, oracle_fluctuation(hk, 7), 1e-10);
  }
  const std::string csv = state_flow_csv({flow});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "k,mu,energy,fluctuation");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
}

TEST(SpectrumCsv, Layout) {
  const Hermitian h = herm(oracle::tfim(3, 1.0));
  const FlowTrace t = run_flow(h, FlowPolicy::canonical(), 3, {});
  ASSERT_EQ(t.steps.size(), 3u);
  const std::string csv = spectrum_csv(exact_spectrum(h), t, {0, 3});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "rank,eigenvalue,sorted_diagonal_k0,sorted_diagonal_k3");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
}

TEST(Conventions, SelfTest) { EXPECT_NO_THROW(basis_convention_self_test()); }

}  // namespace
