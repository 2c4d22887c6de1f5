#include "dbflow/runner.hpp"

#include "dbflow/circuit.hpp"
#include "dbflow/observables.hpp"
#include "dbflow/randomized_pinching.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <random>

#ifndef DBFLOW_VERSION
#define DBFLOW_VERSION "dev"
#endif

namespace dbf {

namespace {

using json = nlohmann::ordered_json;

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
  }

  void write(const std::string& name, const std::string& content) {
    const auto path = root_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path.string()));
    out << content;
    out.close();
    if (!out) throw std::runtime_error(fmt::format("failed writing '{}'", path.string()));
    entries_.push_back({name, sha256_hex(content), content.size()});
  }

  const std::filesystem::path& root() const { return root_; }
  const std::vector<ManifestEntry>& entries() const { return entries_; }

 private:
  std::filesystem::path root_;
  std::vector<ManifestEntry> entries_;
};

struct Outcome {
  int code = exit_success;
  std::string status = "ok";
};

std::string model_label(const RunConfig& c) {
  if (c.model == ModelKind::custom) return fmt::format("custom:{} L={}", c.model_file.filename().string(), c.sites);
  return fmt::format("{} L={} J={}", to_string(c.model), c.sites, c.coupling);
}

Hermitian model_hamiltonian(const RunConfig& c) {
  return Hermitian::check(build_model(c).to_operator());
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string duration_scan_csv(const FlowTrace& trace, const StepSearchConfig& cfg) {
  std::string out = "k,s,offdiag_norm\n";
  const double ratio = std::log(cfg.s_max / cfg.s_min);
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    const DurationScan scan(Hermitian::project(trace.snapshots[k]), AntiHermitian::project(trace.generators[k]));
    for (int i = 0; i < cfg.grid_points; ++i) {
      const double s = cfg.s_min * std::exp(ratio * i / (cfg.grid_points - 1));
      out += fmt::format("{},{},{}\n", k + 1, s, scan.offdiag_norm(s));
    }
  }
  return out;
}

std::string matrices_csv(const FlowTrace& trace) {
  std::string out = "k,row,col,re,im\n";
  for (std::size_t k = 0; k < trace.snapshots.size(); ++k) {
    const Matrix& m = trace.snapshots[k].matrix();
    for (Index r = 0; r < m.rows(); ++r) {
      for (Index c = 0; c < m.cols(); ++c) out += fmt::format("{},{},{},{},{}\n", k, r, c, m(r, c).real(), m(r, c).imag());
    }
  }
  return out;
}

std::string deviation_csv(const RealVector& eigenvalues, const FlowTrace& trace) {
  std::string out = "k,max_abs_deviation\n";
  for (std::size_t k = 0; k < trace.diagonals.size(); ++k) {
    out += fmt::format("{},{}\n", k, spectrum_comparison(eigenvalues, trace.diagonals[k]).max_abs_deviation);
  }
  return out;
}

std::string states_csv(const FlowTrace& trace, const std::vector<BitString>& states) {
  std::vector<std::vector<StateDiagnostics>> flows;
  for (const auto& mu : states) flows.push_back(state_flow(trace, mu));
  return state_flow_csv(flows);
}

Outcome run_flow_experiment(const RunConfig& c, OutputDir& dir) {
  const Hermitian h = model_hamiltonian(c);
  dir.write("model.txt", build_model(c).to_text());
  const FlowOptions options{c.snapshots, c.saturation};
  const bool need_snapshots = c.duration_scan || c.write_matrices;
  FlowOptions run_options = options;
  if (need_snapshots && !run_options.keep_snapshots) run_options.keep_snapshots = true;
  const FlowTrace trace = run_flow(h, build_policy(c), c.steps, c.search, run_options, model_label(c));

  dir.write("trace.csv", trace_csv(trace));
  dir.write("trace.json", trace_json(trace));
  const auto states = selected_states(c);
  if (!states.empty()) dir.write("states.csv", states_csv(trace, states));

  if (!c.spectrum_steps.empty() || c.experiment == Experiment::spectrum) {
    const RealVector eig = exact_spectrum(h);
    std::vector<int> steps = c.spectrum_steps;
    if (steps.empty()) steps = {0, static_cast<int>(trace.steps.size())};
    dir.write("spectrum.csv", spectrum_csv(eig, trace, steps));
    dir.write("spectrum_deviation.csv", deviation_csv(eig, trace));
  }
  if (!trace.generators.empty()) dir.write("precompiled.txt", precompile(trace).to_text());
  if (c.duration_scan && trace.has_snapshots()) dir.write("duration_scan.csv", duration_scan_csv(trace, c.search));
  if (c.write_matrices && trace.has_snapshots()) dir.write("matrices.csv", matrices_csv(trace));

  if (c.baseline_canonical) {
    const FlowTrace base = run_flow(h, FlowPolicy::canonical(), c.steps, c.search, options, model_label(c));
    dir.write("baseline_trace.csv", trace_csv(base));
    if (!states.empty()) dir.write("baseline_states.csv", states_csv(base, states));
  }

  if (trace.termination != Termination::completed) {
    return {exit_early_termination, fmt::format("early termination ({}): {}", to_string(trace.termination),
                                                trace.termination_reason)};
  }
  return {};
}

Outcome run_emulate(const RunConfig& c, OutputDir& dir) {
  const Hermitian h = model_hamiltonian(c);
  if (!c.emulate_steps.empty()) {
    std::string out = "N,s,distance,queries,frame_consistency,offdiag_norm_recursive,offdiag_norm_discretized\n";
    for (int n : c.emulate_steps) {
      const double s = c.emulate_duration / n;
      const RecursiveRun rec = recursive_algorithm(h, n, s);
      const DiscretizedFlow disc = discretized_flow(h, n, s);
      const double distance = op_norm(rec.unitary.op() - disc.unitary);
      const double frame = hs_norm(conjugate(h, rec.unitary) - rec.frame) / hs_norm(h);
      out += fmt::format("{},{},{},{},{},{},{}\n", n, s, distance, rec.ledger.total().str(), frame,
                         rec.offdiag_norms.back(), hs_norm(offdiag(disc.hamiltonian)));
    }
    dir.write("convergence.csv", out);
  }
  if (!c.repeat_durations.empty()) {
    std::string out =
        "s,K,offdiag_norm,sigma_decrease,queries,single_step_sigma_decrease,exact_flow_sigma_decrease\n";
    const double before = hs_norm(offdiag(h));
    const DurationScan exact(h, canonical_bracket(h));
    for (double s : c.repeat_durations) {
      const RepeatedStep rep = repeated_step(h, Canonical{}, s, c.repetitions);
      for (int k = 1; k <= c.repetitions; ++k) {
        const double ks = k * s;
        double single = std::numeric_limits<double>::quiet_NaN();
        if (c.compare_single) {
          const Unitary v = group_commutator_component(h, ks).unitary;
          single = hs_norm(offdiag(conjugate(h, v))) - before;
        }
        out += fmt::format("{},{},{},{},{},{},{}\n", s, k, rep.offdiag_norms[static_cast<std::size_t>(k)],
                           rep.sigma_decrease[static_cast<std::size_t>(k - 1)],
                           rep.ledger.breakdown()[static_cast<std::size_t>(k - 1)].total_after.str(), single,
                           exact.offdiag_norm(ks) - before);
      }
    }
    dir.write("repetitions.csv", out);
  }
  return {};
}

Outcome run_certify(const RunConfig& c, OutputDir& dir) {
  const Hermitian h = model_hamiltonian(c);
  CertificationReport report = certify_bounds(h, c.certify_durations);
  std::mt19937_64 rng(c.seed);
  for (int k = 1; k <= c.flip_orders; ++k) {
    auto order = lexicographic_flips(c.sites);
    std::shuffle(order.begin(), order.end(), rng);
    const CertificationReport extra = certify_bounds(h, c.certify_durations, order);
    for (auto row : extra.rows) {
      row.component += fmt::format("@order{}", k);
      report.rows.push_back(row);
    }
    for (auto [name, slope] : extra.slopes) report.slopes.emplace_back(fmt::format("{}@order{}", name, k), slope);
  }
  dir.write("certification.csv", report.to_csv());
  dir.write("certification.json", report.to_json());
  if (!report.all_pass()) {
    const auto n = std::count_if(report.rows.begin(), report.rows.end(), [](const auto& r) { return !r.pass; });
    return {exit_certification_failure, fmt::format("{} bound violations", n)};
  }
  return {};
}

Outcome run_pinch_bench(const RunConfig& c, OutputDir& dir) {
  const Hermitian h = model_hamiltonian(c);
  const SparsitySummary sp = sparsity_of(h, c.sites);
  const std::size_t S = std::max<std::size_t>(1, c.sparsity.value_or(sp.S));
  double epsilon = c.epsilon.value_or(c.epsilon_factor * static_cast<double>(S) * sp.max_coupling);
  if (!(epsilon > 0.0)) epsilon = c.epsilon_factor;
  const PinchPlan plan = PinchPlan::make(c.sites, S, sp.max_coupling, epsilon, c.delta, c.seed);
  const FailureReport rep = empirical_failure_rate(h, plan, c.trials);
  dir.write("pinch_bench.csv", pinch_bench_csv_header() + pinch_bench_csv_row(plan, rep));

  std::string env = "R,epsilon,nu,resamples,exceedances,fraction,tail,envelope,holds\n";
  bool envelope_ok = true;
  const BitString nu(c.sites, 1u);
  for (std::uint64_t r : c.envelope_samples) {
    const double eps = std::sqrt(c.envelope_exponent / static_cast<double>(r));
    const double tail = hoeffding_tail(r, eps);
    const EnvelopeCheck e = balance_envelope(c.sites, nu, r, eps, c.envelope_resamples, c.seed, tail);
    envelope_ok = envelope_ok && e.holds;
    env += fmt::format("{},{},{},{},{},{},{},{},{}\n", r, eps, nu.to_string(), e.resamples, e.exceedances, e.fraction,
                       tail, e.envelope, e.holds ? 1 : 0);
  }
  dir.write("envelope.csv", env);
  if (rep.rate > c.delta) {
    return {exit_certification_failure, fmt::format("failure rate {} exceeds delta {}", rep.rate, c.delta)};
  }
  if (!envelope_ok) return {exit_certification_failure, "balance-statistic envelope violated"};
  return {};
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string RunManifest::to_json() const {
  json j;
  j["version"] = version;
  j["started_utc"] = started_utc;
  j["wall_seconds"] = wall_seconds;
  j["exit_code"] = exit_code;
  j["status"] = status;
  j["config"] = config_echo;
  auto& files_json = j["files"] = json::array();
  for (const auto& f : files) files_json.push_back({{"file", f.file}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  return j.dump(2) + "\n";
}

std::string trace_csv(const FlowTrace& trace) {
  std::string out = "k,generator,s,offdiag_norm_before,offdiag_norm_after,sigma_decrease,generator_hs_norm\n";
  for (const auto& st : trace.steps) {
    out += fmt::format("{},{},{},{},{},{},{}\n", st.index, describe(st.kind), st.s, st.offdiag_norm_before,
                       st.offdiag_norm_after, st.sigma_decrease, st.generator_hs_norm);
  }
  return out;
}

std::string trace_json(const FlowTrace& trace) {
  json j;
  j["model"] = trace.model;
  j["sites"] = trace.sites;
  j["termination"] = to_string(trace.termination);
  j["termination_reason"] = trace.termination_reason;
  j["offdiag_norms"] = trace.offdiag_norms;
  auto& steps = j["steps"] = json::array();
  for (const auto& st : trace.steps) {
    steps.push_back({{"k", st.index},
                     {"generator", describe(st.kind)},
                     {"s", st.s},
                     {"offdiag_norm_before", st.offdiag_norm_before},
                     {"offdiag_norm_after", st.offdiag_norm_after},
                     {"sigma_decrease", st.sigma_decrease},
                     {"generator_hs_norm", st.generator_hs_norm}});
  }
  return j.dump(2) + "\n";
}

RunManifest execute(const RunConfig& config) {
  config.validate();
  basis_convention_self_test();
  const auto t0 = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.version = DBFLOW_VERSION;
  manifest.started_utc = utc_now();
  manifest.config_echo = config.to_ini();

  OutputDir dir(config.out);
  dir.write("config.ini", manifest.config_echo);
  Outcome outcome;
  switch (config.experiment) {
    case Experiment::flow:
    case Experiment::spectrum: outcome = run_flow_experiment(config, dir); break;
    case Experiment::emulate: outcome = run_emulate(config, dir); break;
    case Experiment::certify: outcome = run_certify(config, dir); break;
    case Experiment::pinch_bench: outcome = run_pinch_bench(config, dir); break;
  }
  manifest.files = dir.entries();
  manifest.exit_code = outcome.code;
  manifest.status = outcome.status;
  manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ofstream out(dir.root() / "manifest.json", std::ios::trunc);
  out << manifest.to_json();
  if (!out) throw std::runtime_error("failed writing manifest.json");
  return manifest;
}

}  // namespace dbf
