#include "dbflow/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace dbf {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& domain) {
  throw ConfigError(fmt::format("invalid value '{}' for key {}: expected {}", value, key, domain));
}

template <class T>
T parse_number(const std::string& key, const std::string& raw, const std::string& domain) {
  const std::string text = trim(raw);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) bad(key, raw, domain);
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) bad(key, raw, domain);
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string v = lower(trim(raw));
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  bad(key, raw, "a boolean (true/false)");
}

std::vector<std::string> split_list(const std::string& raw) {
  std::vector<std::string> out;
  std::stringstream in(raw);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& raw, const std::string& domain) {
  std::vector<T> out;
  if (lower(trim(raw)) == "none") return out;
  for (const auto& item : split_list(raw)) out.push_back(parse_number<T>(key, item, domain));
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"experiment",
       {
           {"kind", [](RunConfig& c, const std::string& v) { c.experiment = parse_experiment(trim(v)); }},
           {"seed",
            [](RunConfig& c, const std::string& v) {
              c.seed = parse_number<std::uint64_t>("experiment.seed", v, "an unsigned 64-bit integer");
            }},
           {"out", [](RunConfig& c, const std::string& v) { c.out = trim(v); }},
       }},
      {"model",
       {
           {"name",
            [](RunConfig& c, const std::string& v) {
              const std::string n = lower(trim(v));
              if (n == "tfim") c.model = ModelKind::tfim;
              else if (n == "tlfim") c.model = ModelKind::tlfim;
              else if (n == "custom") c.model = ModelKind::custom;
              else bad("model.name", v, "one of tfim, tlfim, custom");
            }},
           {"sites",
            [](RunConfig& c, const std::string& v) { c.sites = parse_number<int>("model.sites", v, "an integer in [2, 12]"); }},
           {"coupling",
            [](RunConfig& c, const std::string& v) {
              c.coupling = parse_number<double>("model.coupling", v, "a finite real number");
            }},
           {"file", [](RunConfig& c, const std::string& v) { c.model_file = trim(v); }},
       }},
      {"flow",
       {
           {"steps",
            [](RunConfig& c, const std::string& v) { c.steps = parse_number<int>("flow.steps", v, "an integer >= 1"); }},
           {"policy", [](RunConfig& c, const std::string& v) { c.policy = lower(trim(v)); }},
           {"candidates", [](RunConfig& c, const std::string& v) { c.candidates = split_list(v); }},
           {"s_min",
            [](RunConfig& c, const std::string& v) { c.search.s_min = parse_number<double>("flow.s_min", v, "a real > 0"); }},
           {"s_max",
            [](RunConfig& c, const std::string& v) {
              c.search.s_max = parse_number<double>("flow.s_max", v, "a real > s_min");
            }},
           {"grid_points",
            [](RunConfig& c, const std::string& v) {
              c.search.grid_points = parse_number<int>("flow.grid_points", v, "an integer >= 8");
            }},
           {"refine_iterations",
            [](RunConfig& c, const std::string& v) {
              c.search.refine_iterations = parse_number<int>("flow.refine_iterations", v, "an integer >= 0");
            }},
           {"snapshots",
            [](RunConfig& c, const std::string& v) {
              if (lower(trim(v)) == "auto") c.snapshots.reset();
              else c.snapshots = parse_bool("flow.snapshots", v);
            }},
           {"saturation",
            [](RunConfig& c, const std::string& v) {
              c.saturation = parse_number<double>("flow.saturation", v, "a real >= 0");
            }},
           {"baseline",
            [](RunConfig& c, const std::string& v) {
              const std::string b = lower(trim(v));
              if (b == "canonical") c.baseline_canonical = true;
              else if (b == "none") c.baseline_canonical = false;
              else bad("flow.baseline", v, "one of none, canonical");
            }},
           {"states", [](RunConfig& c, const std::string& v) { c.states = trim(v); }},
           {"spectrum_steps",
            [](RunConfig& c, const std::string& v) {
              c.spectrum_steps = parse_list<int>("flow.spectrum_steps", v, "a list of step indices >= 0");
            }},
           {"duration_scan",
            [](RunConfig& c, const std::string& v) { c.duration_scan = parse_bool("flow.duration_scan", v); }},
           {"write_matrices",
            [](RunConfig& c, const std::string& v) { c.write_matrices = parse_bool("flow.write_matrices", v); }},
       }},
      {"emulate",
       {
           {"duration",
            [](RunConfig& c, const std::string& v) {
              c.emulate_duration = parse_number<double>("emulate.duration", v, "a real > 0");
            }},
           {"steps",
            [](RunConfig& c, const std::string& v) {
              c.emulate_steps = parse_list<int>("emulate.steps", v, "a list of integers >= 1 or none");
            }},
           {"repeat_durations",
            [](RunConfig& c, const std::string& v) {
              c.repeat_durations = parse_list<double>("emulate.repeat_durations", v, "a list of reals > 0 or none");
            }},
           {"repetitions",
            [](RunConfig& c, const std::string& v) {
              c.repetitions = parse_number<int>("emulate.repetitions", v, "an integer >= 1");
            }},
           {"compare_single",
            [](RunConfig& c, const std::string& v) { c.compare_single = parse_bool("emulate.compare_single", v); }},
       }},
      {"certify",
       {
           {"durations",
            [](RunConfig& c, const std::string& v) {
              c.certify_durations = parse_list<double>("certify.durations", v, "a list of reals > 0");
            }},
           {"flip_orders",
            [](RunConfig& c, const std::string& v) {
              c.flip_orders = parse_number<int>("certify.flip_orders", v, "an integer >= 0");
            }},
       }},
      {"pinch",
       {
           {"epsilon",
            [](RunConfig& c, const std::string& v) {
              if (lower(trim(v)) == "auto") c.epsilon.reset();
              else c.epsilon = parse_number<double>("pinch.epsilon", v, "a real > 0 or auto");
            }},
           {"epsilon_factor",
            [](RunConfig& c, const std::string& v) {
              c.epsilon_factor = parse_number<double>("pinch.epsilon_factor", v, "a real > 0");
            }},
           {"delta",
            [](RunConfig& c, const std::string& v) { c.delta = parse_number<double>("pinch.delta", v, "a real in (0, 1)"); }},
           {"trials",
            [](RunConfig& c, const std::string& v) { c.trials = parse_number<int>("pinch.trials", v, "an integer >= 1"); }},
           {"sparsity",
            [](RunConfig& c, const std::string& v) {
              if (lower(trim(v)) == "auto") c.sparsity.reset();
              else c.sparsity = parse_number<std::size_t>("pinch.sparsity", v, "an integer >= 1 or auto");
            }},
           {"envelope_samples",
            [](RunConfig& c, const std::string& v) {
              c.envelope_samples = parse_list<std::uint64_t>("pinch.envelope_samples", v, "a list of integers >= 1");
            }},
           {"envelope_resamples",
            [](RunConfig& c, const std::string& v) {
              c.envelope_resamples = parse_number<int>("pinch.envelope_resamples", v, "an integer >= 1");
            }},
           {"envelope_exponent",
            [](RunConfig& c, const std::string& v) {
              c.envelope_exponent = parse_number<double>("pinch.envelope_exponent", v, "a real > 0 (R·ε²)");
            }},
       }},
  };
  return table;
}

void apply_overrides(RunConfig& c, const CliOverrides& o) {
  if (o.experiment) c.experiment = *o.experiment;
  if (o.model) {
    const std::string m = lower(*o.model);
    if (m == "tfim") {
      c.model = ModelKind::tfim;
    } else if (m == "tlfim") {
      c.model = ModelKind::tlfim;
    } else {
      c.model = ModelKind::custom;
      c.model_file = *o.model;
    }
  }
  if (o.sites) c.sites = *o.sites;
  if (o.coupling) c.coupling = *o.coupling;
  if (o.steps) c.steps = *o.steps;
  if (o.policy) c.policy = lower(*o.policy);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out = *o.out;
}

PauliSum load_custom(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(fmt::format("model.file: cannot read '{}'", file.string()));
  try {
    return PauliSum::from_text(in);
  } catch (const std::exception& e) {
    throw ConfigError(fmt::format("model.file '{}': {}", file.string(), e.what()));
  }
}

void finish(RunConfig& c, const CliOverrides& o, const std::filesystem::path& base_dir) {
  apply_overrides(c, o);
  if (c.model == ModelKind::custom) {
    if (c.model_file.empty()) throw ConfigError("model.file: required when model.name = custom");
    if (c.model_file.is_relative() && !o.model) c.model_file = base_dir / c.model_file;
    const PauliSum sum = load_custom(c.model_file);
    if (o.sites && *o.sites != sum.sites()) {
      throw ConfigError(fmt::format("model.sites: override {} does not match the {} sites of the model file",
                                    *o.sites, sum.sites()));
    }
    c.sites = sum.sites();
  }
  c.validate();
}

GeneratorKind parse_candidate(const std::string& text, int sites) {
  const std::string t = trim(text);
  if (lower(t) == "canonical") return Canonical{};
  int sign = 1;
  std::string rest = t;
  if (!rest.empty() && (rest[0] == '-' || rest[0] == '+')) {
    sign = rest[0] == '-' ? -1 : 1;
    rest = rest.substr(1);
  }
  if (rest.size() < 3 || (rest[0] != 'Z' && rest[0] != 'z') || rest[1] != ':') {
    bad("flow.candidates", text, "canonical or [+|-]Z:<bit string>");
  }
  BitString mu = BitString::zeros(0);
  try {
    mu = BitString::parse(rest.substr(2));
  } catch (const std::exception&) {
    bad("flow.candidates", text, "canonical or [+|-]Z:<bit string>");
  }
  if (mu.length() != sites) bad("flow.candidates", text, fmt::format("a bit string of length {}", sites));
  if (mu.mask() == 0) bad("flow.candidates", text, "a nonzero bit string (Z_0 is the identity)");
  return FixedFlip{mu, sign};
}

std::string render_list(const auto& values) {
  if (values.empty()) return "none";
  return fmt::format("{}", fmt::join(values, ","));
}

}  // namespace

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::flow: return "flow";
    case Experiment::emulate: return "emulate";
    case Experiment::pinch_bench: return "pinch-bench";
    case Experiment::certify: return "certify";
    case Experiment::spectrum: return "spectrum";
  }
  return "flow";
}

Experiment parse_experiment(const std::string& text) {
  const std::string t = lower(trim(text));
  if (t == "flow") return Experiment::flow;
  if (t == "emulate") return Experiment::emulate;
  if (t == "pinch-bench" || t == "pinch_bench") return Experiment::pinch_bench;
  if (t == "certify") return Experiment::certify;
  if (t == "spectrum") return Experiment::spectrum;
  bad("experiment.kind", text, "one of flow, emulate, pinch-bench, certify, spectrum");
}

std::string to_string(ModelKind m) {
  switch (m) {
    case ModelKind::tfim: return "tfim";
    case ModelKind::tlfim: return "tlfim";
    case ModelKind::custom: return "custom";
  }
  return "tfim";
}

void RunConfig::validate() const {
  if (sites < 2 || sites > 12) bad("model.sites", std::to_string(sites), "an integer in [2, 12]");
  if (!std::isfinite(coupling)) bad("model.coupling", fmt::format("{}", coupling), "a finite real number");
  if (model == ModelKind::custom && !std::filesystem::exists(model_file)) {
    throw ConfigError(fmt::format("model.file: '{}' does not exist", model_file.string()));
  }
  if (steps < 1) bad("flow.steps", std::to_string(steps), "an integer >= 1");
  if (policy != "canonical" && policy != "variational" && policy != "list") {
    bad("flow.policy", policy, "one of canonical, variational, list");
  }
  if (policy == "list" && candidates.empty()) bad("flow.candidates", "", "a non-empty list when flow.policy = list");
  for (const auto& c : candidates) parse_candidate(c, sites);
  try {
    search.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("flow.s_min/s_max/grid_points/refine_iterations: {}", e.what()));
  }
  if (!(saturation >= 0.0)) bad("flow.saturation", fmt::format("{}", saturation), "a real >= 0");
  (void)selected_states(*this);
  for (int k : spectrum_steps) {
    if (k < 0 || k > steps) bad("flow.spectrum_steps", std::to_string(k), fmt::format("indices in [0, {}]", steps));
  }
  if (!(emulate_duration > 0.0)) bad("emulate.duration", fmt::format("{}", emulate_duration), "a real > 0");
  for (int n : emulate_steps) {
    if (n < 1) bad("emulate.steps", std::to_string(n), "integers >= 1");
  }
  for (double s : repeat_durations) {
    if (!(s > 0.0)) bad("emulate.repeat_durations", fmt::format("{}", s), "reals > 0");
  }
  if (repetitions < 1) bad("emulate.repetitions", std::to_string(repetitions), "an integer >= 1");
  if (certify_durations.empty()) bad("certify.durations", "none", "a non-empty list of reals > 0");
  for (double s : certify_durations) {
    if (!(s > 0.0)) bad("certify.durations", fmt::format("{}", s), "reals > 0");
  }
  if (flip_orders < 0) bad("certify.flip_orders", std::to_string(flip_orders), "an integer >= 0");
  if (epsilon && !(*epsilon > 0.0)) bad("pinch.epsilon", fmt::format("{}", *epsilon), "a real > 0 or auto");
  if (!(epsilon_factor > 0.0)) bad("pinch.epsilon_factor", fmt::format("{}", epsilon_factor), "a real > 0");
  if (!(delta > 0.0 && delta < 1.0)) bad("pinch.delta", fmt::format("{}", delta), "a real in (0, 1)");
  if (trials < 1) bad("pinch.trials", std::to_string(trials), "an integer >= 1");
  if (sparsity && *sparsity < 1) bad("pinch.sparsity", std::to_string(*sparsity), "an integer >= 1 or auto");
  for (auto r : envelope_samples) {
    if (r < 1) bad("pinch.envelope_samples", std::to_string(r), "integers >= 1");
  }
  if (envelope_resamples < 1) bad("pinch.envelope_resamples", std::to_string(envelope_resamples), "an integer >= 1");
  if (!(envelope_exponent > 0.0)) bad("pinch.envelope_exponent", fmt::format("{}", envelope_exponent), "a real > 0");
}

std::string RunConfig::to_ini() const {
  std::string s;
  s += fmt::format("[experiment]\nkind = {}\nseed = {}\nout = {}\n\n", to_string(experiment), seed, out.string());
  s += fmt::format("[model]\nname = {}\nsites = {}\ncoupling = {}\n", to_string(model), sites, coupling);
  if (model == ModelKind::custom) s += fmt::format("file = {}\n", model_file.string());
  s += fmt::format(
      "\n[flow]\nsteps = {}\npolicy = {}\ncandidates = {}\ns_min = {}\ns_max = {}\ngrid_points = {}\n"
      "refine_iterations = {}\nsnapshots = {}\nsaturation = {}\nbaseline = {}\nstates = {}\n"
      "spectrum_steps = {}\nduration_scan = {}\nwrite_matrices = {}\n\n",
      steps, policy, candidates.empty() ? std::string() : render_list(candidates), search.s_min, search.s_max,
      search.grid_points, search.refine_iterations, snapshots ? (*snapshots ? "true" : "false") : "auto", saturation,
      baseline_canonical ? "canonical" : "none", states, render_list(spectrum_steps), duration_scan, write_matrices);
  s += fmt::format("[emulate]\nduration = {}\nsteps = {}\nrepeat_durations = {}\nrepetitions = {}\ncompare_single = {}\n\n",
                   emulate_duration, render_list(emulate_steps), render_list(repeat_durations), repetitions,
                   compare_single);
  s += fmt::format("[certify]\ndurations = {}\nflip_orders = {}\n\n", render_list(certify_durations), flip_orders);
  s += fmt::format(
      "[pinch]\nepsilon = {}\nepsilon_factor = {}\ndelta = {}\ntrials = {}\nsparsity = {}\nenvelope_samples = {}\n"
      "envelope_resamples = {}\nenvelope_exponent = {}\n",
      epsilon ? fmt::format("{}", *epsilon) : "auto", epsilon_factor, delta, trials,
      sparsity ? std::to_string(*sparsity) : "auto", render_list(envelope_samples), envelope_resamples,
      envelope_exponent);
  return s;
}

RunConfig parse_config_text(const std::string& text, const CliOverrides& overrides,
                            const std::filesystem::path& base_dir) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config syntax error at line {}: {}", e.line(), e.message()));
  }
  RunConfig c;
  const auto& table = schema();
  for (const auto& [section, body] : tree) {
    const auto sit = table.find(section);
    if (sit == table.end()) {
      if (body.empty()) throw ConfigError(fmt::format("unknown key '{}' outside any section", section));
      throw ConfigError(fmt::format("unknown section [{}]", section));
    }
    for (const auto& [key, value] : body) {
      const auto kit = sit->second.find(key);
      if (kit == sit->second.end()) throw ConfigError(fmt::format("unknown key {}.{}", section, key));
      kit->second(c, value.data());
    }
  }
  finish(c, overrides, base_dir);
  return c;
}

RunConfig parse_config(const std::filesystem::path& path, const CliOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config file '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), overrides, path.parent_path());
}

RunConfig config_from_overrides(const CliOverrides& overrides) {
  RunConfig c;
  finish(c, overrides, ".");
  return c;
}

PauliSum build_model(const RunConfig& config) {
  switch (config.model) {
    case ModelKind::tfim: return build_tfim(config.sites, config.coupling);
    case ModelKind::tlfim: return build_tlfim(config.sites, config.coupling);
    case ModelKind::custom: return load_custom(config.model_file);
  }
  throw ConfigError("model.name: unsupported");
}

FlowPolicy build_policy(const RunConfig& config) {
  if (config.policy == "canonical") return FlowPolicy::canonical();
  if (config.policy == "variational") return FlowPolicy::variational(config.sites);
  FlowPolicy p{{}};
  for (const auto& c : config.candidates) p.candidates.push_back(parse_candidate(c, config.sites));
  return p;
}

std::vector<BitString> selected_states(const RunConfig& config) {
  const std::string s = lower(trim(config.states));
  std::vector<BitString> out;
  if (s == "none") return out;
  if (s == "all") {
    for (std::uint32_t mu = 0; mu < (1u << config.sites); ++mu) out.emplace_back(config.sites, mu);
    return out;
  }
  if (s == "polarized") return {BitString::zeros(config.sites), BitString::ones(config.sites)};
  for (const auto& item : split_list(config.states)) {
    try {
      out.push_back(BitString::parse(item));
    } catch (const std::exception&) {
      bad("flow.states", item, "all, polarized, none or comma-separated bit strings");
    }
    if (out.back().length() != config.sites) {
      bad("flow.states", item, fmt::format("bit strings of length {}", config.sites));
    }
  }
  return out;
}

}  // namespace dbf
