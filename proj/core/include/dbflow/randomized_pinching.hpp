#pragma once

// Approximate pinching by uniformly random phase flips, the sample-size
// planner, and Monte-Carlo validation.

#include "dbflow/operator.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dbf {

// ⌈S²·c²·ε⁻²·ln(2S/δ)⌉ with c = ‖J‖_max, at least 1. Natural log.
std::uint64_t required_samples(std::size_t sparsity, double max_coupling, double epsilon, double delta);

struct PinchPlan {
  int sites = 0;
  std::size_t S = 0;
  double max_coupling = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  std::uint64_t R = 0;
  std::uint64_t seed = 0;
  // Use every flip once instead of sampling when R ≥ D.
  bool full_enumeration_fallback = false;

  static PinchPlan make(int sites, std::size_t sparsity, double max_coupling, double epsilon, double delta,
                        std::uint64_t seed, bool full_enumeration_fallback = false);
  void validate() const;
  bool uses_full_enumeration() const;
};

using FlipSample = std::vector<BitString>;

// R i.i.d. uniform flips from the stream (seed, stream). Same arguments give
// the same sample.
FlipSample draw_flips(int sites, std::uint64_t count, std::uint64_t seed, std::uint64_t stream);
FlipSample full_enumeration(int sites);

// (1/R) Σ_k (−1)^{|η_k ∩ ν|} for every ν, indexed by the mask of ν.
RealVector balance_statistics(const FlipSample& flips, int sites);
double balance_statistic(const FlipSample& flips, const BitString& nu);

// (1/R) Σ_k Z_η J Z_η, i.e. entry (a,b) scaled by the balance statistic of a⊕b.
Operator approx_pinch(const Operator& j, const FlipSample& flips);

struct FailureReport {
  int trials = 0;
  int failures = 0;
  double rate = 0.0;
  double max_error = 0.0;
  double mean_error = 0.0;
};

// Fraction of trials (stream = trial index) with ‖ΔJ − approx_pinch(J)‖ > ε.
FailureReport empirical_failure_rate(const Operator& j, const PinchPlan& plan, int trials);

// "L,S,max_coupling,epsilon,delta,R,trials,failures,rate,seed"
std::string pinch_bench_csv_header();
std::string pinch_bench_csv_row(const PinchPlan& plan, const FailureReport& report);

// 2e^{−Rε²/2}, the Hoeffding tail for a mean of R independent ±1 variables.
double hoeffding_tail(std::uint64_t samples, double epsilon);

struct EnvelopeCheck {
  std::uint64_t R = 0;
  double epsilon = 0.0;
  int resamples = 0;
  int exceedances = 0;
  double fraction = 0.0;
  double envelope = 0.0;  // bound + 3σ sampling slack
  bool holds = false;
};

// Over `resamples` independent FlipSamples of size R, the fraction with
// |balance_statistic(ν)| > ε must not exceed `tail` + 3√(tail(1−tail)/resamples).
EnvelopeCheck balance_envelope(int sites, const BitString& nu, std::uint64_t R, double epsilon, int resamples,
                               std::uint64_t seed, double tail);

}  // namespace dbf
