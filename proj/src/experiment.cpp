#include "ggaf/experiment.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>

namespace ggaf {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

std::string q(const std::string& s) { return "\"" + s + "\""; }

void check_keys(const json& j, const std::string& context,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) {
    fail(context + ": expected an object");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      fail(context + ": unknown key " + q(it.key()));
    }
  }
}

const json& require_key(const json& j, const std::string& context,
                        const char* key) {
  auto it = j.find(key);
  if (it == j.end()) {
    fail(context + ": missing key " + q(key));
  }
  return *it;
}

double as_number(const json& v, const std::string& context, const char* key) {
  if (!v.is_number()) {
    fail(context + ": " + q(key) + " must be a number");
  }
  const double x = v.get<double>();
  if (!std::isfinite(x)) {
    fail(context + ": " + q(key) + " must be finite");
  }
  return x;
}

double get_number(const json& j, const std::string& context, const char* key) {
  return as_number(require_key(j, context, key), context, key);
}

double number_or(const json& j, const std::string& context, const char* key,
                 double dflt) {
  auto it = j.find(key);
  return it == j.end() ? dflt : as_number(*it, context, key);
}

long long get_integer(const json& j, const std::string& context,
                      const char* key) {
  const json& v = require_key(j, context, key);
  if (!v.is_number_integer()) {
    fail(context + ": " + q(key) + " must be an integer");
  }
  return v.get<long long>();
}

long long integer_or(const json& j, const std::string& context,
                     const char* key, long long dflt) {
  auto it = j.find(key);
  if (it == j.end()) {
    return dflt;
  }
  if (!it->is_number_integer()) {
    fail(context + ": " + q(key) + " must be an integer");
  }
  return it->get<long long>();
}

std::string get_string(const json& j, const std::string& context,
                       const char* key) {
  const json& v = require_key(j, context, key);
  if (!v.is_string()) {
    fail(context + ": " + q(key) + " must be a string");
  }
  return v.get<std::string>();
}

FilterVariant parse_variant(const std::string& s, const std::string& context) {
  if (s == "kf") return FilterVariant::KF;
  if (s == "vkf") return FilterVariant::VKF;
  if (s == "skf") return FilterVariant::SKF;
  if (s == "fkf") return FilterVariant::FKF;
  if (s == "sg") return FilterVariant::SG;
  fail(context + ": unknown variant " + q(s) +
       " (expected kf, vkf, skf, fkf or sg)");
}

TuneParam parse_param(const std::string& s, const std::string& context) {
  if (s == "mu") return TuneParam::Mu;
  if (s == "reg") return TuneParam::Reg;
  if (s == "epsilon") return TuneParam::Epsilon;
  fail(context + ": unknown param " + q(s) + " (expected mu, reg or epsilon)");
}

// Knob positivity: mu and reg must be > 0, epsilon only >= 0.
void check_knob_value(TuneParam param, double value,
                      const std::string& context) {
  const bool ok =
      param == TuneParam::Epsilon ? value >= 0 && std::isfinite(value)
                                  : value > 0 && std::isfinite(value);
  if (!ok) {
    fail(context + ": " + tune_param_name(param) +
         (param == TuneParam::Epsilon ? " must be >= 0" : " must be > 0"));
  }
}

std::vector<double> parse_grid(const json& v, TuneParam param,
                               const std::string& context) {
  std::vector<double> grid;
  if (v.is_array()) {
    if (v.empty()) {
      fail(context + ": \"grid\" must not be empty");
    }
    for (const json& item : v) {
      if (!item.is_number()) {
        fail(context + ": \"grid\" entries must be numbers");
      }
      grid.push_back(item.get<double>());
    }
  } else if (v.is_object()) {
    check_keys(v, context + ".grid", {"min", "max", "points"});
    const double lo = get_number(v, context + ".grid", "min");
    const double hi = get_number(v, context + ".grid", "max");
    const long long points = get_integer(v, context + ".grid", "points");
    if (!(lo > 0)) {
      fail(context + ".grid: \"min\" must be > 0 for log spacing");
    }
    if (!(hi >= lo)) {
      fail(context + ".grid: \"max\" must be >= \"min\"");
    }
    if (points < 1 || points > 100000) {
      fail(context + ".grid: \"points\" must be in [1, 100000]");
    }
    grid.reserve(static_cast<std::size_t>(points));
    if (points == 1) {
      grid.push_back(lo);
    } else {
      const double ratio = hi / lo;
      for (long long i = 0; i < points; ++i) {
        grid.push_back(lo * std::pow(ratio, static_cast<double>(i) /
                                                static_cast<double>(points - 1)));
      }
    }
  } else {
    fail(context + ": \"grid\" must be an array or a {min, max, points} object");
  }
  for (double value : grid) {
    check_knob_value(param, value, context + ".grid");
  }
  return grid;
}

TuneSpec<double> parse_tune(const json& v, FilterVariant variant,
                            const std::string& context) {
  check_keys(v, context, {"param", "grid", "target_db", "tol_db", "tail_frac"});
  TuneSpec<double> spec;
  spec.param = parse_param(get_string(v, context, "param"), context);
  if (spec.param != variant_knob(variant)) {
    fail(context + ": param " + q(tune_param_name(spec.param)) +
         " does not apply to variant " + q(variant_name(variant)) +
         " (its knob is " + q(tune_param_name(variant_knob(variant))) + ")");
  }
  spec.grid = parse_grid(require_key(v, context, "grid"), spec.param, context);
  spec.target_db = get_number(v, context, "target_db");
  spec.tol_db = number_or(v, context, "tol_db", 1.0);
  spec.tail_frac = number_or(v, context, "tail_frac", 0.2);
  if (!(spec.tol_db > 0)) {
    fail(context + ": \"tol_db\" must be > 0");
  }
  if (!(spec.tail_frac > 0 && spec.tail_frac <= 1)) {
    fail(context + ": \"tail_frac\" must be in (0, 1]");
  }
  return spec;
}

AlgorithmSpec parse_algorithm(const json& v, std::size_t index) {
  const std::string context = "algorithms[" + std::to_string(index) + "]";
  check_keys(v, context,
             {"label", "variant", "beta", "I", "v0", "mu", "reg", "epsilon",
              "tune"});
  AlgorithmSpec spec;
  spec.label = get_string(v, context, "label");
  if (spec.label.empty() ||
      spec.label.find_first_of(",\n\r") != std::string::npos) {
    fail(context + ": \"label\" must be non-empty and free of commas");
  }
  spec.variant = parse_variant(get_string(v, context, "variant"), context);
  spec.beta = get_number(v, context, "beta");
  if (!(spec.beta >= 1 && spec.beta <= 2)) {
    fail(context + ": \"beta\" must be in [1, 2]");
  }
  const long long iters = integer_or(v, context, "I", 0);
  if (iters < 0 || iters > 1000) {
    fail(context + ": \"I\" must be in [0, 1000]");
  }
  if (spec.variant == FilterVariant::SG && iters != 0) {
    fail(context + ": \"I\" does not apply to variant \"sg\"");
  }
  spec.refine_iters = static_cast<int>(iters);

  const bool covariance_tracking = spec.variant == FilterVariant::KF ||
                                   spec.variant == FilterVariant::VKF ||
                                   spec.variant == FilterVariant::SKF;
  if (v.contains("v0") && !covariance_tracking) {
    fail(context + ": \"v0\" does not apply to variant " +
         q(variant_name(spec.variant)));
  }
  spec.v0 = number_or(v, context, "v0", 1.0);
  if (!(spec.v0 > 0)) {
    fail(context + ": \"v0\" must be > 0");
  }

  const TuneParam knob = variant_knob(spec.variant);
  int given = 0;
  for (const char* key : {"mu", "reg", "epsilon"}) {
    if (!v.contains(key)) {
      continue;
    }
    ++given;
    if (std::string(key) != tune_param_name(knob)) {
      fail(context + ": " + q(key) + " does not apply to variant " +
           q(variant_name(spec.variant)) + " (its knob is " +
           q(tune_param_name(knob)) + ")");
    }
    const double value = get_number(v, context, key);
    check_knob_value(knob, value, context);
    spec.knob = value;
  }
  if (v.contains("tune")) {
    ++given;
    spec.tune = parse_tune(v["tune"], spec.variant, context + ".tune");
  }
  if (given != 1) {
    fail(context + ": give exactly one of " +
         q(tune_param_name(knob)) + " or \"tune\"");
  }
  return spec;
}

Scenario<double> parse_scenario(const json& v,
                                const std::filesystem::path& base_dir) {
  const std::string context = "scenario";
  check_keys(v, context,
             {"M", "ir_file", "ir_synth", "a", "v_u", "snr_db", "beta_star",
              "T", "N"});
  Scenario<double> sc;

  const bool has_file = v.contains("ir_file");
  const bool has_synth = v.contains("ir_synth");
  if (has_file == has_synth) {
    fail(context + ": give exactly one of \"ir_file\" or \"ir_synth\"");
  }
  if (has_file) {
    std::filesystem::path p = get_string(v, context, "ir_file");
    if (p.is_relative()) {
      p = base_dir / p;
    }
    sc.h = load_impulse_response(p.string());
    if (v.contains("M") &&
        get_integer(v, context, "M") != static_cast<long long>(sc.h.size())) {
      fail(context + ": \"M\" disagrees with the impulse-response length " +
           std::to_string(sc.h.size()));
    }
  } else {
    const json& synth = v["ir_synth"];
    check_keys(synth, context + ".ir_synth", {"decay", "seed", "scale"});
    const long long m = get_integer(v, context, "M");
    if (m < 1 || m > 1000000) {
      fail(context + ": \"M\" must be in [1, 1000000]");
    }
    const double decay = get_number(synth, context + ".ir_synth", "decay");
    if (!(decay > 0)) {
      fail(context + ".ir_synth: \"decay\" must be > 0");
    }
    const long long seed = get_integer(synth, context + ".ir_synth", "seed");
    if (seed < 0) {
      fail(context + ".ir_synth: \"seed\" must be >= 0");
    }
    const double scale = number_or(synth, context + ".ir_synth", "scale", 1.0);
    if (!(scale > 0)) {
      fail(context + ".ir_synth: \"scale\" must be > 0");
    }
    sc.h = scale * synthetic_impulse_response<double>(
                       static_cast<Eigen::Index>(m), decay,
                       static_cast<std::uint64_t>(seed));
  }

  sc.a = get_number(v, context, "a");
  if (!(std::abs(sc.a) < 1)) {
    fail(context + ": \"a\" must satisfy |a| < 1");
  }
  sc.v_u = number_or(v, context, "v_u", 1.0);
  if (!(sc.v_u >= 0)) {
    fail(context + ": \"v_u\" must be >= 0");
  }
  sc.snr_db = get_number(v, context, "snr_db");
  sc.beta_star = get_number(v, context, "beta_star");
  if (!(sc.beta_star > 0)) {
    fail(context + ": \"beta_star\" must be > 0");
  }
  const long long horizon = get_integer(v, context, "T");
  if (horizon < 1 || horizon > 100000000) {
    fail(context + ": \"T\" must be in [1, 1e8]");
  }
  sc.T = static_cast<long>(horizon);
  const long long trials = get_integer(v, context, "N");
  if (trials < 1 || trials > 1000000) {
    fail(context + ": \"N\" must be in [1, 1e6]");
  }
  sc.N = static_cast<int>(trials);
  return sc;
}

AlgorithmSpec preset_alg(const char* label, FilterVariant variant, double beta,
                         int iters, double knob) {
  AlgorithmSpec spec;
  spec.label = label;
  spec.variant = variant;
  spec.beta = beta;
  spec.refine_iters = iters;
  spec.knob = knob;
  return spec;
}

// Shared scenario for the shipped presets: exponentially decaying synthetic
// response, strongly correlated input, 5 dB SNR, very impulsive noise.
// The response carries a typical small-room acoustic channel gain (a
// direct path at ~1.4 m plus early reflections) instead of unit norm, so
// the shipped absolute knob values (mu, reg, epsilon) stay meaningful.
constexpr double kPresetA = 0.9;
constexpr double kPresetSnrDb = 5.0;
constexpr double kPresetBetaStar = 0.2;
constexpr std::uint64_t kPresetIrSeed = 42;
constexpr double kPresetIrAmplitude = 0.075;
constexpr int kPresetTaps = 128;
constexpr int kPresetTrials = 100;
constexpr long kPresetHorizonFig3 = 400000;
constexpr long kPresetHorizonFig5 = 400000;

Scenario<double> preset_scenario(double scale, long horizon_full) {
  Scenario<double> sc;
  const auto taps = static_cast<Eigen::Index>(
      std::max(1.0, std::round(kPresetTaps * scale)));
  sc.h = kPresetIrAmplitude *
         synthetic_impulse_response<double>(
             taps, std::max(1.0, static_cast<double>(taps) / 4.0),
             kPresetIrSeed);
  sc.a = kPresetA;
  sc.v_u = 1.0;
  sc.snr_db = kPresetSnrDb;
  sc.beta_star = kPresetBetaStar;
  sc.T = static_cast<long>(std::max(2.0, std::round(horizon_full * scale)));
  sc.N = static_cast<int>(std::max(1.0, std::round(kPresetTrials * scale)));
  return sc;
}

void check_scale(double scale) {
  if (!(scale > 0 && scale <= 1)) {
    throw ConfigError("scale must be in (0, 1]");
  }
}

}  // namespace

TuneParam variant_knob(FilterVariant v) {
  switch (v) {
    case FilterVariant::SG:
      return TuneParam::Mu;
    case FilterVariant::FKF:
      return TuneParam::Reg;
    default:
      return TuneParam::Epsilon;
  }
}

const char* variant_name(FilterVariant v) {
  switch (v) {
    case FilterVariant::KF:
      return "kf";
    case FilterVariant::VKF:
      return "vkf";
    case FilterVariant::SKF:
      return "skf";
    case FilterVariant::FKF:
      return "fkf";
    case FilterVariant::SG:
      return "sg";
  }
  return "?";
}

VectorX<double> load_impulse_response(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    fail("cannot open impulse-response file " + q(path));
  }
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    std::istringstream ss(line);
    double value;
    std::string trailing;
    if (!(ss >> value) || (ss >> trailing)) {
      fail(q(path) + ":" + std::to_string(line_no) +
           ": expected one coefficient per line");
    }
    if (!std::isfinite(value)) {
      fail(q(path) + ":" + std::to_string(line_no) + ": non-finite value");
    }
    values.push_back(value);
  }
  if (values.empty()) {
    fail(q(path) + ": no coefficients found");
  }
  VectorX<double> h(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    h[static_cast<Eigen::Index>(i)] = values[i];
  }
  if (!(h.norm() > 0)) {
    fail(q(path) + ": impulse response is identically zero");
  }
  return h;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    fail("cannot open config file " + q(path));
  }
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(q(path) + ": " + e.what());
  }
  check_keys(root, "config", {"scenario", "algorithms", "base_seed", "output"});

  ExperimentConfig cfg;
  cfg.scenario =
      parse_scenario(require_key(root, "config", "scenario"),
                     std::filesystem::path(path).parent_path());

  const long long seed = integer_or(root, "config", "base_seed", 1);
  if (seed < 0) {
    fail("config: \"base_seed\" must be >= 0");
  }
  cfg.base_seed = static_cast<std::uint64_t>(seed);

  if (root.contains("output")) {
    cfg.output = get_string(root, "config", "output");
  }

  const json& algs = require_key(root, "config", "algorithms");
  if (!algs.is_array() || algs.empty()) {
    fail("config: \"algorithms\" must be a non-empty array");
  }
  std::set<std::string> labels;
  for (std::size_t i = 0; i < algs.size(); ++i) {
    cfg.algorithms.push_back(parse_algorithm(algs[i], i));
    if (!labels.insert(cfg.algorithms.back().label).second) {
      fail("algorithms[" + std::to_string(i) + "]: duplicate label " +
           q(cfg.algorithms.back().label));
    }
  }
  return cfg;
}

FilterConfig<double> make_filter_config(const AlgorithmSpec& spec,
                                        const Scenario<double>& scenario) {
  const double v_eta = noise_variance_for_snr<double>(
      scenario.h, scenario.a, scenario.v_u, scenario.snr_db);
  double sigma = std::sqrt(v_eta);
  if (!(sigma > 0)) {
    if (variant_knob(spec.variant) == TuneParam::Epsilon) {
      fail(spec.label +
           ": scenario has zero noise power, so the gain's noise scale is "
           "undefined; use variant fkf or sg");
    }
    sigma = 1;  // beta still shapes the update; the scale goes unused
  }
  FilterConfig<double> cfg{.variant = spec.variant,
                           .noise = NoiseModel<double>(spec.beta, sigma),
                           .refine_iters = spec.refine_iters,
                           .v0 = spec.v0};
  if (spec.knob) {
    apply_tuned_value(cfg, variant_knob(spec.variant), *spec.knob);
    try {
      validate_config(cfg);
    } catch (const std::invalid_argument& e) {
      fail(spec.label + ": " + e.what());
    }
  }
  return cfg;
}

ResolvedAlgorithm resolve_algorithm(const AlgorithmSpec& spec,
                                    const Scenario<double>& scenario,
                                    std::uint64_t base_seed, int threads,
                                    std::ostream* log) {
  ResolvedAlgorithm out{spec.label, make_filter_config(spec, scenario), {}};
  if (spec.tune) {
    out.tuning = grid_search(scenario, out.config, *spec.tune, base_seed,
                             threads);
    apply_tuned_value(out.config, spec.tune->param, out.tuning->best.value);
    if (log) {
      const GridPoint<double>& best = out.tuning->best;
      (*log) << spec.label << ": tuned "
             << tune_param_name(spec.tune->param) << " = " << best.value
             << ", steady state " << best.steady_db << " dB"
             << (out.tuning->in_band ? "" : " (outside the target band)")
             << '\n';
    }
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config, int threads,
                                std::ostream* log) {
  validate_scenario(config.scenario);
  if (config.algorithms.empty()) {
    fail("config: no algorithms");
  }
  ExperimentResult result;
  std::vector<FilterConfig<double>> filter_configs;
  for (const AlgorithmSpec& spec : config.algorithms) {
    result.algorithms.push_back(resolve_algorithm(
        spec, config.scenario, config.base_seed, threads, log));
    filter_configs.push_back(result.algorithms.back().config);
  }
  result.means = run_ensemble_multi(config.scenario, filter_configs,
                                    config.base_seed, threads);
  return result;
}

void write_csv(const std::string& path, const std::vector<std::string>& labels,
               const std::vector<Trajectory<double>>& means) {
  if (labels.size() != means.size() || means.empty()) {
    throw std::invalid_argument("write_csv: labels and series must match");
  }
  const std::size_t len = means[0].misalignment.size();
  for (const Trajectory<double>& m : means) {
    if (m.misalignment.size() != len) {
      throw std::invalid_argument("write_csv: series lengths differ");
    }
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open output file \"" + path + "\"");
  }
  out << 't';
  for (const std::string& label : labels) {
    out << ',' << label;
  }
  out << '\n';
  char buf[64];
  for (std::size_t t = 1; t < len; ++t) {
    out << t;
    for (const Trajectory<double>& m : means) {
      const double value = m.misalignment[t];
      if (value <= 0) {
        out << ",-inf";
      } else {
        std::snprintf(buf, sizeof buf, "%.6g", to_db(value));
        out << ',' << buf;
      }
    }
    out << '\n';
  }
  out.flush();
  if (!out) {
    throw std::runtime_error("failed writing \"" + path + "\"");
  }
}

ExperimentConfig builtin_fig3(double scale, std::uint64_t base_seed) {
  check_scale(scale);
  ExperimentConfig cfg;
  cfg.scenario = preset_scenario(scale, kPresetHorizonFig3);
  cfg.base_seed = base_seed;
  cfg.output = "fig3.csv";
  cfg.algorithms = {
      preset_alg("SG_b2", FilterVariant::SG, 2, 0, 1.1e-4),
      preset_alg("fKF_b2", FilterVariant::FKF, 2, 0, 8.2e3),
      preset_alg("sKF_b2", FilterVariant::SKF, 2, 0, 3.2e-10),
      preset_alg("KF_b2", FilterVariant::KF, 2, 0, 3.6e-11),
      preset_alg("SG_b1", FilterVariant::SG, 1, 0, 2.7e-5),
      preset_alg("fKF_b1", FilterVariant::FKF, 1, 0, 1.1e4),
      preset_alg("sKF_b1", FilterVariant::SKF, 1, 0, 2.7e-8),
      preset_alg("KF_b1", FilterVariant::KF, 1, 0, 2.2e-8),
  };
  return cfg;
}

std::vector<TargetedExperiment> builtin_fig5(double scale,
                                             std::uint64_t base_seed) {
  check_scale(scale);
  struct Row {
    double target_db;
    const char* suffix;
    double sg_mu;
    double fkf_reg[2];  // I = 0, 1
    double skf_eps[2];
    double kf_eps[2];
  };
  // Knob presets per steady-state target for the robust (beta = 1) family.
  const Row rows[] = {
      {-15, "_m15", 5.4e-5, {3.5e3, 5.0e3}, {1.0e-7, 7.1e-8}, {7.3e-8, 6.0e-8}},
      {-20, "_m20", 2.7e-5, {1.1e4, 1.6e4}, {2.7e-8, 2.2e-8}, {2.2e-8, 2.2e-8}},
      {-25, "_m25", 1.4e-5, {3.4e4, 4.3e4}, {7.7e-9, 6.6e-9}, {6.0e-9, 6.0e-9}},
  };
  std::vector<TargetedExperiment> out;
  for (const Row& row : rows) {
    TargetedExperiment te;
    te.target_db = row.target_db;
    te.suffix = row.suffix;
    te.config.scenario = preset_scenario(scale, kPresetHorizonFig5);
    te.config.base_seed = base_seed;
    te.config.output = "fig5.csv";
    te.config.algorithms = {
        preset_alg("SG_I0", FilterVariant::SG, 1, 0, row.sg_mu),
        preset_alg("fKF_I0", FilterVariant::FKF, 1, 0, row.fkf_reg[0]),
        preset_alg("fKF_I1", FilterVariant::FKF, 1, 1, row.fkf_reg[1]),
        preset_alg("sKF_I0", FilterVariant::SKF, 1, 0, row.skf_eps[0]),
        preset_alg("sKF_I1", FilterVariant::SKF, 1, 1, row.skf_eps[1]),
        preset_alg("KF_I0", FilterVariant::KF, 1, 0, row.kf_eps[0]),
        preset_alg("KF_I1", FilterVariant::KF, 1, 1, row.kf_eps[1]),
    };
    out.push_back(std::move(te));
  }
  return out;
}

std::string insert_suffix(const std::string& path, const std::string& suffix) {
  const std::size_t slash = path.find_last_of("/\\");
  const std::size_t dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return path + suffix;
  }
  return path.substr(0, dot) + suffix + path.substr(dot);
}

}  // namespace ggaf
