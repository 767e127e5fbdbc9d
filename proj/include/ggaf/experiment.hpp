#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ggaf/filters.hpp"
#include "ggaf/simulate.hpp"
#include "ggaf/tune.hpp"

namespace ggaf {

/// Invalid user input: malformed config file, bad value, unknown key.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One adaptive filter entry from a config file. Exactly one of `knob`
/// (a fixed value for the variant's free parameter) or `tune` is set.
struct AlgorithmSpec {
  std::string label;
  FilterVariant variant = FilterVariant::KF;
  double beta = 2;
  int refine_iters = 0;
  double v0 = 1;
  std::optional<double> knob;
  std::optional<TuneSpec<double>> tune;
};

struct ExperimentConfig {
  Scenario<double> scenario;
  std::uint64_t base_seed = 1;
  std::vector<AlgorithmSpec> algorithms;
  std::string output;  // default CSV path; may be empty
};

// The free parameter each variant exposes.
TuneParam variant_knob(FilterVariant v);

const char* variant_name(FilterVariant v);

// Text file, one coefficient per line; blank lines ignored.
VectorX<double> load_impulse_response(const std::string& path);

// Strict JSON load: unknown or ill-typed keys raise ConfigError naming the
// key. Relative ir_file paths resolve against the config file's directory.
ExperimentConfig load_experiment_config(const std::string& path);

// Filter config for the scenario's measurement-noise level. The knob value
// comes from spec.knob; tuned entries get it from resolve_algorithm.
FilterConfig<double> make_filter_config(const AlgorithmSpec& spec,
                                        const Scenario<double>& scenario);

struct ResolvedAlgorithm {
  std::string label;
  FilterConfig<double> config;
  std::optional<GridSearchResult<double>> tuning;
};

struct ExperimentResult {
  std::vector<ResolvedAlgorithm> algorithms;
  std::vector<Trajectory<double>> means;  // ensemble means, one per entry
};

// Fixes the entry's knob, running the grid search when one is requested.
ResolvedAlgorithm resolve_algorithm(const AlgorithmSpec& spec,
                                    const Scenario<double>& scenario,
                                    std::uint64_t base_seed, int threads,
                                    std::ostream* log = nullptr);

// Resolve every entry, then run one shared-signal ensemble over all of them.
ExperimentResult run_experiment(const ExperimentConfig& config, int threads,
                                std::ostream* log = nullptr);

// Rows t = 1..T: sample index and ensemble-mean misalignment in dB, six
// significant digits, "-inf" for exact zero.
void write_csv(const std::string& path, const std::vector<std::string>& labels,
               const std::vector<Trajectory<double>>& means);

// Shipped presets. fig3 compares the conventional (beta = 2) and robust
// (beta = 1) families under heavy-tailed noise; fig5 sweeps the robust
// family across three steady-state targets with and without one refinement
// pass. scale in (0, 1] shrinks M, N and T together for quick previews;
// knob values stay as shipped.
ExperimentConfig builtin_fig3(double scale, std::uint64_t base_seed);

struct TargetedExperiment {
  double target_db = 0;
  std::string suffix;  // inserted before the output extension
  ExperimentConfig config;
};

std::vector<TargetedExperiment> builtin_fig5(double scale,
                                             std::uint64_t base_seed);

// "name.csv" + "_m20" -> "name_m20.csv"; no extension appends the suffix.
std::string insert_suffix(const std::string& path, const std::string& suffix);

}  // namespace ggaf
