// Command-line harness around the adaptive-filter library: run configured
// simulations, tune knobs by grid search, or regenerate the shipped
// comparison experiments.
//
// Exit codes: 0 on success, 2 on bad usage or a bad config, 1 on runtime
// failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "ggaf/experiment.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool needs_config) {
  if (needs_config) {
    cmd->add_option("--config", flags.config_path, "JSON experiment config")
        ->required();
  }
  cmd->add_option("--out", flags.out_path, "output path (overrides config)");
  cmd->add_option("--seed", flags.seed, "ensemble base seed")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--threads", flags.threads, "worker threads")
      ->check(CLI::PositiveNumber)
      ->default_val(1);
}

ggaf::ExperimentConfig load_for(const CommonFlags& flags) {
  ggaf::ExperimentConfig cfg = ggaf::load_experiment_config(flags.config_path);
  if (flags.seed_given) {
    cfg.base_seed = flags.seed;
  }
  if (!flags.out_path.empty()) {
    cfg.output = flags.out_path;
  }
  return cfg;
}

std::vector<std::string> labels_of(const ggaf::ExperimentResult& result) {
  std::vector<std::string> labels;
  labels.reserve(result.algorithms.size());
  for (const ggaf::ResolvedAlgorithm& alg : result.algorithms) {
    labels.push_back(alg.label);
  }
  return labels;
}

int cmd_simulate(const CommonFlags& flags) {
  ggaf::ExperimentConfig cfg = load_for(flags);
  if (cfg.output.empty()) {
    throw ggaf::ConfigError(
        "no output path: set \"output\" in the config or pass --out");
  }
  ggaf::ExperimentResult result =
      ggaf::run_experiment(cfg, flags.threads, &std::cerr);
  ggaf::write_csv(cfg.output, labels_of(result), result.means);
  std::cout << "wrote " << cfg.output << '\n';
  return 0;
}

int cmd_tune(const CommonFlags& flags) {
  ggaf::ExperimentConfig cfg = load_for(flags);
  nlohmann::json report = nlohmann::json::array();
  for (const ggaf::AlgorithmSpec& spec : cfg.algorithms) {
    ggaf::ResolvedAlgorithm resolved = ggaf::resolve_algorithm(
        spec, cfg.scenario, cfg.base_seed, flags.threads);
    const char* knob = ggaf::tune_param_name(ggaf::variant_knob(spec.variant));
    nlohmann::json entry{{"label", resolved.label},
                         {"param", knob},
                         {"tuned", resolved.tuning.has_value()}};
    if (resolved.tuning) {
      const ggaf::GridSearchResult<double>& gs = *resolved.tuning;
      std::cout << resolved.label << ": " << knob << '\n';
      for (const ggaf::GridPoint<double>& pt : gs.points) {
        std::cout << "  " << pt.value << "  " << pt.steady_db << " dB";
        if (pt.conv_time) {
          std::cout << "  converges by t = " << *pt.conv_time;
        } else {
          std::cout << "  does not settle";
        }
        std::cout << '\n';
      }
      std::cout << "  chosen: " << gs.best.value << " (steady "
                << gs.best.steady_db << " dB"
                << (gs.in_band ? "" : ", outside the target band") << ")\n";
      entry["value"] = gs.best.value;
      entry["steady_db"] = gs.best.steady_db;
      entry["in_band"] = gs.in_band;
      if (gs.best.conv_time) {
        entry["conv_time"] = *gs.best.conv_time;
      } else {
        entry["conv_time"] = nullptr;
      }
      nlohmann::json points = nlohmann::json::array();
      for (const ggaf::GridPoint<double>& pt : gs.points) {
        nlohmann::json p{{"value", pt.value}, {"steady_db", pt.steady_db}};
        if (pt.conv_time) {
          p["conv_time"] = *pt.conv_time;
        } else {
          p["conv_time"] = nullptr;
        }
        points.push_back(std::move(p));
      }
      entry["points"] = std::move(points);
    } else {
      std::cout << resolved.label << ": " << knob << " fixed at "
                << *spec.knob << '\n';
      entry["value"] = *spec.knob;
    }
    report.push_back(std::move(entry));
  }
  if (!flags.out_path.empty()) {
    std::ofstream out(flags.out_path);
    if (!out) {
      throw std::runtime_error("cannot open output file \"" + flags.out_path +
                               "\"");
    }
    out << report.dump(2) << '\n';
    if (!out.flush()) {
      throw std::runtime_error("failed writing \"" + flags.out_path + "\"");
    }
    std::cout << "wrote " << flags.out_path << '\n';
  }
  return 0;
}

int cmd_reproduce(const std::string& which, double scale,
                  const CommonFlags& flags) {
  const std::uint64_t seed = flags.seed_given ? flags.seed : 1;
  if (which == "fig3") {
    ggaf::ExperimentConfig cfg = ggaf::builtin_fig3(scale, seed);
    if (!flags.out_path.empty()) {
      cfg.output = flags.out_path;
    }
    ggaf::ExperimentResult result =
        ggaf::run_experiment(cfg, flags.threads, &std::cerr);
    ggaf::write_csv(cfg.output, labels_of(result), result.means);
    std::cout << "wrote " << cfg.output << '\n';
    return 0;
  }
  if (which == "fig5") {
    for (ggaf::TargetedExperiment& te : ggaf::builtin_fig5(scale, seed)) {
      if (!flags.out_path.empty()) {
        te.config.output = flags.out_path;
      }
      const std::string path = ggaf::insert_suffix(te.config.output, te.suffix);
      ggaf::ExperimentResult result =
          ggaf::run_experiment(te.config, flags.threads, &std::cerr);
      ggaf::write_csv(path, labels_of(result), result.means);
      std::cout << "wrote " << path << '\n';
    }
    return 0;
  }
  throw ggaf::ConfigError("unknown experiment \"" + which +
                          "\" (expected fig3 or fig5)");
}

int run(int argc, char** argv) {
  CLI::App app{"Adaptive-filter simulation and tuning harness"};
  app.require_subcommand(1);

  CommonFlags sim_flags;
  CLI::App* sim = app.add_subcommand(
      "simulate", "run the configured ensemble and write a misalignment CSV");
  add_common(sim, sim_flags, true);

  CommonFlags tune_flags;
  CLI::App* tune = app.add_subcommand(
      "tune", "resolve tuned knobs by grid search and report them");
  add_common(tune, tune_flags, true);

  CommonFlags repro_flags;
  std::string which;
  double scale = 1.0;
  CLI::App* repro = app.add_subcommand(
      "reproduce", "regenerate a shipped experiment (fig3 or fig5)");
  repro->add_option("experiment", which, "fig3 or fig5")->required();
  repro->add_option("--scale", scale,
                    "shrink taps, trials and horizon by this factor")
      ->check(CLI::Range(1e-6, 1.0))
      ->default_val(1.0);
  add_common(repro, repro_flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  sim_flags.seed_given = sim->count("--seed") > 0;
  tune_flags.seed_given = tune->count("--seed") > 0;
  repro_flags.seed_given = repro->count("--seed") > 0;

  if (sim->parsed()) {
    return cmd_simulate(sim_flags);
  }
  if (tune->parsed()) {
    return cmd_tune(tune_flags);
  }
  return cmd_reproduce(which, scale, repro_flags);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ggaf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
