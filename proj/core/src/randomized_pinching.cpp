#include "dbflow/randomized_pinching.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <random>

namespace dbf {

namespace {

// w[ν] <- Σ_b (−1)^{|b∩ν|} w[b], exact in integers.
void walsh_hadamard(std::vector<std::int64_t>& w) {
  const std::size_t n = w.size();
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t k = i; k < i + h; ++k) {
        const std::int64_t a = w[k];
        const std::int64_t b = w[k + h];
        w[k] = a + b;
        w[k + h] = a - b;
      }
    }
  }
}

}  // namespace

std::uint64_t required_samples(std::size_t sparsity, double max_coupling, double epsilon, double delta) {
  if (sparsity < 1) throw std::invalid_argument("required_samples: sparsity S must be >= 1");
  if (!(max_coupling >= 0.0) || !std::isfinite(max_coupling)) {
    throw std::invalid_argument("required_samples: max_coupling must be finite and >= 0");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("required_samples: epsilon must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("required_samples: delta must lie in (0, 1)");
  const double s = static_cast<double>(sparsity);
  const double value = s * s * max_coupling * max_coupling / (epsilon * epsilon) * std::log(2.0 * s / delta);
  if (!(value < 9.0e18)) throw std::overflow_error("required_samples: sample count exceeds 64 bits");
  // Absorb the last-ulp noise of the logarithm before rounding up.
  const double r = std::ceil(value * (1.0 - 1e-12));
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(r));
}

PinchPlan PinchPlan::make(int sites, std::size_t sparsity, double max_coupling, double epsilon, double delta,
                          std::uint64_t seed, bool full_enumeration_fallback) {
  PinchPlan p{sites,
              sparsity,
              max_coupling,
              epsilon,
              delta,
              required_samples(sparsity, max_coupling, epsilon, delta),
              seed,
              full_enumeration_fallback};
  p.validate();
  return p;
}

void PinchPlan::validate() const {
  if (sites < 1 || sites > 20) throw std::invalid_argument("PinchPlan: sites out of range");
  if (R < required_samples(S, max_coupling, epsilon, delta)) {
    throw std::invalid_argument("PinchPlan: R below the required sample count");
  }
}

bool PinchPlan::uses_full_enumeration() const {
  return full_enumeration_fallback && R >= (std::uint64_t{1} << sites);
}

FlipSample draw_flips(int sites, std::uint64_t count, std::uint64_t seed, std::uint64_t stream) {
  if (sites < 1 || sites > 30) throw DimensionError("draw_flips: sites out of range");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::mt19937_64 rng(seq);
  const std::uint64_t mask = (std::uint64_t{1} << sites) - 1;
  FlipSample out;
  out.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) out.emplace_back(sites, static_cast<std::uint32_t>(rng() & mask));
  return out;
}

FlipSample full_enumeration(int sites) {
  FlipSample out;
  for (std::uint32_t mu = 0; mu < (1u << sites); ++mu) out.emplace_back(sites, mu);
  return out;
}

RealVector balance_statistics(const FlipSample& flips, int sites) {
  if (flips.empty()) throw std::invalid_argument("balance statistics need at least one flip");
  const std::size_t dim = std::size_t{1} << sites;
  std::vector<std::int64_t> hist(dim, 0);
  for (const auto& eta : flips) {
    if (eta.length() != sites) throw DimensionError("flip length does not match the register");
    ++hist[eta.mask()];
  }
  walsh_hadamard(hist);
  RealVector beta(static_cast<Index>(dim));
  const double r = static_cast<double>(flips.size());
  for (std::size_t nu = 0; nu < dim; ++nu) beta(static_cast<Index>(nu)) = static_cast<double>(hist[nu]) / r;
  return beta;
}

double balance_statistic(const FlipSample& flips, const BitString& nu) {
  if (flips.empty()) throw std::invalid_argument("balance statistic needs at least one flip");
  std::int64_t sum = 0;
  for (const auto& eta : flips) {
    if (eta.length() != nu.length()) throw DimensionError("flip length does not match ν");
    sum += overlap_sign(eta.mask(), nu.mask());
  }
  return static_cast<double>(sum) / static_cast<double>(flips.size());
}

Operator approx_pinch(const Operator& j, const FlipSample& flips) {
  const int sites = sites_for_dim(j.dim());
  const RealVector beta = balance_statistics(flips, sites);
  const Index dim = j.dim();
  Matrix m(dim, dim);
  for (Index b = 0; b < dim; ++b) {
    for (Index a = 0; a < dim; ++a) m(a, b) = j(a, b) * beta(a ^ b);
  }
  return Operator(std::move(m));
}

FailureReport empirical_failure_rate(const Operator& j, const PinchPlan& plan, int trials) {
  if (trials < 1) throw std::invalid_argument("empirical_failure_rate: trials must be >= 1");
  plan.validate();
  if (sites_for_dim(j.dim()) != plan.sites) throw DimensionError("plan sites do not match the operator");
  const Operator exact = pinch(j);
  FailureReport out;
  out.trials = trials;
  double total = 0.0;
  for (int t = 0; t < trials; ++t) {
    const FlipSample flips = plan.uses_full_enumeration()
                                 ? full_enumeration(plan.sites)
                                 : draw_flips(plan.sites, plan.R, plan.seed, static_cast<std::uint64_t>(t));
    const double err = op_norm(exact - approx_pinch(j, flips));
    out.max_error = std::max(out.max_error, err);
    total += err;
    if (err > plan.epsilon) ++out.failures;
  }
  out.rate = static_cast<double>(out.failures) / trials;
  out.mean_error = total / trials;
  return out;
}

std::string pinch_bench_csv_header() { return "L,S,max_coupling,epsilon,delta,R,trials,failures,rate,seed\n"; }

std::string pinch_bench_csv_row(const PinchPlan& plan, const FailureReport& report) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{}\n", plan.sites, plan.S, plan.max_coupling, plan.epsilon,
                     plan.delta, plan.R, report.trials, report.failures, report.rate, plan.seed);
}

double hoeffding_tail(std::uint64_t samples, double epsilon) {
  return 2.0 * std::exp(-static_cast<double>(samples) * epsilon * epsilon / 2.0);
}

EnvelopeCheck balance_envelope(int sites, const BitString& nu, std::uint64_t R, double epsilon, int resamples,
                               std::uint64_t seed, double tail) {
  if (resamples < 1) throw std::invalid_argument("balance_envelope: resamples must be >= 1");
  if (nu.length() != sites) throw DimensionError("balance_envelope: ν length does not match sites");
  EnvelopeCheck out;
  out.R = R;
  out.epsilon = epsilon;
  out.resamples = resamples;
  for (int k = 0; k < resamples; ++k) {
    const FlipSample flips = draw_flips(sites, R, seed, static_cast<std::uint64_t>(k));
    if (std::abs(balance_statistic(flips, nu)) > epsilon) ++out.exceedances;
  }
  out.fraction = static_cast<double>(out.exceedances) / resamples;
  const double p = std::min(tail, 1.0);
  out.envelope = p + 3.0 * std::sqrt(p * (1.0 - p) / resamples);
  out.holds = out.fraction <= out.envelope;
  return out;
}

}  // namespace dbf
