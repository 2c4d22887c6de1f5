#include "dbflow/config.hpp"
#include "dbflow/runner.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <unistd.h>

namespace {

using namespace dbf;
namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("dbflow_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

TEST(Config, Defaults) {
  const RunConfig c = parse_config_text("");
  EXPECT_EQ(c.experiment, Experiment::flow);
  EXPECT_EQ(c.model, ModelKind::tfim);
  EXPECT_EQ(c.sites, 3);
  EXPECT_EQ(c.steps, 15);
  EXPECT_EQ(c.search.grid_points, 60);
  EXPECT_EQ(c.search.refine_iterations, 20);
}

TEST(Config, ParsesSections) {
  const RunConfig c = parse_config_text(
      "[experiment]\nkind = pinch-bench\nseed = 99\n"
      "[model]\nname = tlfim\nsites = 5\ncoupling = 2\n"
      "[flow]\nsteps = 7\npolicy = list\ncandidates = canonical, -Z:00101\nrefine_iterations = 0\n"
      "[pinch]\nepsilon = 0.5\ndelta = 0.1\nenvelope_samples = 10,20\n");
  EXPECT_EQ(c.experiment, Experiment::pinch_bench);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(c.model, ModelKind::tlfim);
  EXPECT_EQ(c.sites, 5);
  EXPECT_DOUBLE_EQ(c.coupling, 2.0);
  EXPECT_EQ(c.steps, 7);
  EXPECT_EQ(c.search.refine_iterations, 0);
  ASSERT_EQ(c.epsilon, std::optional<double>(0.5));
  EXPECT_EQ(c.envelope_samples, (std::vector<std::uint64_t>{10, 20}));
  const FlowPolicy p = build_policy(c);
  ASSERT_EQ(p.candidates.size(), 2u);
  EXPECT_EQ(p.candidates[1], GeneratorKind(FixedFlip{BitString::parse("00101"), -1}));
}

TEST(Config, RejectsUnknownAndInvalid) {
  EXPECT_THROW(parse_config_text("[flow]\nstepz = 3\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[nonsense]\nx = 1\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[flow]\nsteps = 0\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[flow]\nsteps = three\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[model]\nsites = 1\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[model]\nname = heisenberg\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[flow]\npolicy = list\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[flow]\npolicy = list\ncandidates = Z:000\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[flow]\npolicy = list\ncandidates = Z:01\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[pinch]\ndelta = 1.5\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[flow]\ns_min = 5\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[flow]\nspectrum_steps = 16\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[model]\nname = custom\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[experiment]\nkind = sing\n"), ConfigError);
}

TEST(Config, OverridesWin) {
  CliOverrides o;
  o.sites = 4;
  o.steps = 2;
  o.policy = "variational";
  o.seed = 5;
  o.model = "tlfim";
  const RunConfig c = parse_config_text("[model]\nsites = 6\n[flow]\nsteps = 9\n", o);
  EXPECT_EQ(c.sites, 4);
  EXPECT_EQ(c.steps, 2);
  EXPECT_EQ(c.policy, "variational");
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.model, ModelKind::tlfim);
  o.steps = 0;
  EXPECT_THROW(config_from_overrides(o), ConfigError);
}

TEST(Config, IniRoundTrip) {
  RunConfig c = parse_config_text(
      "[model]\nname = tlfim\nsites = 4\ncoupling = 0.1\n[flow]\nsaturation = 1e-9\nstates = all\n"
      "spectrum_steps = 0,5\n[emulate]\nrepeat_durations = 0.005,0.01\n[pinch]\nsparsity = 3\n");
  const RunConfig back = parse_config_text(c.to_ini());
  EXPECT_EQ(back.to_ini(), c.to_ini());
  EXPECT_DOUBLE_EQ(back.coupling, 0.1);
  EXPECT_EQ(back.sparsity, std::optional<std::size_t>(3));
  EXPECT_EQ(back.repeat_durations, c.repeat_durations);
}

TEST(Config, CustomModelFile) {
  TempDir dir;
  write(dir.path() / "chain.txt", "# three sites\n1.0 XXI\n1.0 IXX\n0.5 ZII\n");
  write(dir.path() / "run.ini", "[model]\nname = custom\nfile = chain.txt\n");
  const RunConfig c = parse_config(dir.path() / "run.ini");
  EXPECT_EQ(c.sites, 3);
  EXPECT_EQ(build_model(c).terms().size(), 3u);

  write(dir.path() / "complex.txt", "(1,1) XX\n");
  write(dir.path() / "bad.ini", "[model]\nname = custom\nfile = complex.txt\n");
  EXPECT_THROW(parse_config(dir.path() / "bad.ini"), ConfigError);
  write(dir.path() / "missing.ini", "[model]\nname = custom\nfile = nope.txt\n");
  EXPECT_THROW(parse_config(dir.path() / "missing.ini"), ConfigError);
  CliOverrides o;
  o.sites = 5;
  EXPECT_THROW(parse_config(dir.path() / "run.ini", o), ConfigError);
}

TEST(Config, SelectedStates) {
  RunConfig c;
  c.sites = 3;
  c.states = "all";
  EXPECT_EQ(selected_states(c).size(), 8u);
  c.states = "polarized";
  const auto pol = selected_states(c);
  ASSERT_EQ(pol.size(), 2u);
  c.states = "101,011";
  EXPECT_EQ(selected_states(c)[0], BitString::parse("101"));
  c.states = "1010";
  EXPECT_THROW(selected_states(c), ConfigError);
}

TEST(Runner, FlowRunIsDeterministicWithManifest) {
  TempDir dir;
  RunConfig c = parse_config_text("[model]\nname = tlfim\nsites = 3\ncoupling = 2\n[flow]\nsteps = 4\nstates = all\n");
  c.out = dir.path() / "a";
  const RunManifest m1 = execute(c);
  c.out = dir.path() / "b";
  const RunManifest m2 = execute(c);
  EXPECT_EQ(m1.exit_code, exit_success);
  ASSERT_EQ(m1.files.size(), m2.files.size());
  for (std::size_t i = 0; i < m1.files.size(); ++i) {
    EXPECT_EQ(m1.files[i].file, m2.files[i].file);
    if (m1.files[i].file == "config.ini") continue;  // echoes the output path
    EXPECT_EQ(m1.files[i].sha256, m2.files[i].sha256) << m1.files[i].file;
    EXPECT_EQ(slurp(dir.path() / "a" / m1.files[i].file), slurp(dir.path() / "b" / m1.files[i].file));
  }
  const auto manifest = nlohmann::json::parse(slurp(dir.path() / "a" / "manifest.json"));
  EXPECT_EQ(manifest.at("exit_code").get<int>(), 0);
  const std::string trace = slurp(dir.path() / "a" / "trace.csv");
  EXPECT_EQ(trace.substr(0, trace.find('\n')),
            "k,generator,s,offdiag_norm_before,offdiag_norm_after,sigma_decrease,generator_hs_norm");
  EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), 5);
  // Manifest digests match the files on disk.
  for (const auto& f : m1.files) EXPECT_EQ(sha256_hex(slurp(dir.path() / "a" / f.file)), f.sha256) << f.file;
  // The echoed config reproduces the run configuration.
  const RunConfig echo = parse_config(dir.path() / "a" / "config.ini");
  EXPECT_EQ(echo.to_ini(), parse_config_text(m1.config_echo).to_ini());
}

TEST(Runner, CsvUsesRoundTripPrecision) {
  TempDir dir;
  RunConfig c = parse_config_text("[flow]\nsteps = 2\n");
  c.out = dir.path();
  execute(c);
  std::istringstream in(slurp(dir.path() / "trace.csv"));
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  // Row for k=1 carries the step duration; its text must parse back to the traced double.
  std::vector<std::string> cells;
  std::stringstream row(line);
  for (std::string cell; std::getline(row, cell, ',');) cells.push_back(cell);
  ASSERT_GE(cells.size(), 7u);
  const FlowTrace t = run_flow(Hermitian::check(build_tfim(3, 1.0).to_operator()), FlowPolicy::canonical(), 2, c.search);
  EXPECT_EQ(std::stod(cells[2]), t.steps[0].s);
  EXPECT_EQ(std::stod(cells[4]), t.steps[0].offdiag_norm_after);
}

TEST(Runner, ExitCodes) {
  TempDir dir;
  RunConfig diag;
  diag.out = dir.path() / "zero";
  write(dir.path() / "diag.txt", "1 ZI\n0.5 IZ\n");
  diag = parse_config_text("[model]\nname = custom\nfile = diag.txt\n[flow]\nsteps = 3\n", {}, dir.path());
  diag.out = dir.path() / "zero";
  EXPECT_EQ(execute(diag).exit_code, exit_early_termination);

  RunConfig cert = parse_config_text("[experiment]\nkind = certify\n[model]\nsites = 2\n[certify]\ndurations = 0.01,0.02\n");
  cert.out = dir.path() / "cert";
  EXPECT_EQ(execute(cert).exit_code, exit_success);
  EXPECT_TRUE(fs::exists(dir.path() / "cert" / "certification.csv"));

  RunConfig fail = parse_config_text(
      "[experiment]\nkind = pinch-bench\n[model]\nsites = 3\n[pinch]\nepsilon = 0.9\ndelta = 0.9\nsparsity = 1\n"
      "trials = 50\nenvelope_samples = 10\nenvelope_resamples = 20\n");
  fail.out = dir.path() / "pinch";
  // R from the planner for these parameters is far too small to reach ε; the run reports it.
  const RunManifest m = execute(fail);
  EXPECT_EQ(m.exit_code, exit_certification_failure);
  EXPECT_TRUE(fs::exists(dir.path() / "pinch" / "pinch_bench.csv"));
}

}  // namespace
