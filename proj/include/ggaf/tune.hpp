#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ggaf/filters.hpp"
#include "ggaf/simulate.hpp"

namespace ggaf {

enum class TuneParam { Mu, Reg, Epsilon };

inline const char* tune_param_name(TuneParam p) {
  switch (p) {
    case TuneParam::Mu:
      return "mu";
    case TuneParam::Reg:
      return "reg";
    case TuneParam::Epsilon:
      return "epsilon";
  }
  return "?";
}

/// One free knob, a candidate grid, and the steady-state target band.
template <typename Scalar = double>
struct TuneSpec {
  TuneParam param = TuneParam::Mu;
  std::vector<Scalar> grid;
  Scalar target_db = -20;
  Scalar tol_db = 1;
  Scalar tail_frac = Scalar(0.2);
};

template <typename Scalar>
void apply_tuned_value(FilterConfig<Scalar>& config, TuneParam param,
                       Scalar value) {
  switch (param) {
    case TuneParam::Mu:
      config.mu = value;
      break;
    case TuneParam::Reg:
      config.reg = value;
      break;
    case TuneParam::Epsilon:
      config.epsilon = value;
      break;
  }
}

// Mean misalignment over the trailing ceil(tail_frac * n) entries, in dB.
template <typename Scalar>
Scalar steady_state_level(const Trajectory<Scalar>& traj, Scalar tail_frac) {
  const std::size_t n = traj.misalignment.size();
  if (n == 0) {
    throw std::invalid_argument("steady_state_level: empty trajectory");
  }
  if (!(tail_frac > Scalar(0)) || !(tail_frac <= Scalar(1))) {
    throw std::invalid_argument("steady_state_level: tail_frac in (0, 1]");
  }
  const std::size_t window = static_cast<std::size_t>(
      std::ceil(tail_frac * static_cast<Scalar>(n)));
  Scalar sum = 0;
  for (std::size_t k = n - window; k < n; ++k) {
    sum += traj.misalignment[k];
  }
  return to_db(sum / static_cast<Scalar>(window));
}

// First sample count after which the trajectory stays at or below
// target_db + 1 dB for good. 0 if it never rises above the band; empty if it
// is still above it at the end of the horizon.
template <typename Scalar>
std::optional<long> convergence_time(const Trajectory<Scalar>& traj,
                                     Scalar target_db) {
  const Scalar threshold =
      std::pow(Scalar(10), (target_db + Scalar(1)) / Scalar(10));
  const std::size_t n = traj.misalignment.size();
  std::size_t last_above = n;  // sentinel: none
  for (std::size_t k = 0; k < n; ++k) {
    if (traj.misalignment[k] > threshold) {
      last_above = k;
    }
  }
  if (last_above == n) {
    return 0;
  }
  if (last_above == n - 1) {
    return std::nullopt;
  }
  return static_cast<long>(last_above) + 1;
}

template <typename Scalar = double>
struct GridPoint {
  Scalar value = 0;
  Scalar steady_db = 0;
  std::optional<long> conv_time;
};

template <typename Scalar = double>
struct GridSearchResult {
  GridPoint<Scalar> best;
  bool in_band = false;               // best point hit the target band
  std::vector<GridPoint<Scalar>> points;  // every grid point, ascending
};

namespace detail {

template <typename Scalar>
Scalar conv_key(const std::optional<long>& ct) {
  return ct ? static_cast<Scalar>(*ct)
            : std::numeric_limits<Scalar>::infinity();
}

// Preference order: in-band beats off-band; in-band ties break on faster
// convergence, then target proximity, then smaller knob; off-band points
// compete on target proximity, then smaller knob. Grid order is irrelevant.
template <typename Scalar>
bool better_point(const GridPoint<Scalar>& a, bool a_band,
                  const GridPoint<Scalar>& b, bool b_band, Scalar target_db) {
  if (a_band != b_band) {
    return a_band;
  }
  const Scalar da = std::abs(a.steady_db - target_db);
  const Scalar db = std::abs(b.steady_db - target_db);
  if (a_band) {
    const Scalar ca = conv_key<Scalar>(a.conv_time);
    const Scalar cb = conv_key<Scalar>(b.conv_time);
    if (ca != cb) {
      return ca < cb;
    }
  }
  if (da != db) {
    return da < db;
  }
  return a.value < b.value;
}

}  // namespace detail

// Evaluate the knob over the grid (ensemble mean per point, trial signals
// shared across points) and pick the preferred point.
template <typename Scalar>
GridSearchResult<Scalar> grid_search(const Scenario<Scalar>& scenario,
                                     const FilterConfig<Scalar>& base,
                                     const TuneSpec<Scalar>& spec,
                                     std::uint64_t base_seed,
                                     int threads = 1) {
  if (spec.grid.empty()) {
    throw std::invalid_argument("grid_search: empty grid");
  }
  std::vector<Scalar> grid = spec.grid;
  std::sort(grid.begin(), grid.end());

  std::vector<FilterConfig<Scalar>> configs;
  configs.reserve(grid.size());
  for (Scalar value : grid) {
    FilterConfig<Scalar> cfg = base;
    apply_tuned_value(cfg, spec.param, value);
    validate_config(cfg);
    configs.push_back(cfg);
  }

  const std::vector<Trajectory<Scalar>> means =
      run_ensemble_multi(scenario, configs, base_seed, threads);

  GridSearchResult<Scalar> result;
  result.points.resize(grid.size());
  std::size_t best_idx = 0;
  bool best_band = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    GridPoint<Scalar>& pt = result.points[i];
    pt.value = grid[i];
    pt.steady_db = steady_state_level(means[i], spec.tail_frac);
    pt.conv_time = convergence_time(means[i], spec.target_db);
    const bool band = std::abs(pt.steady_db - spec.target_db) <= spec.tol_db;
    if (i == 0 || detail::better_point(pt, band, result.points[best_idx],
                                       best_band, spec.target_db)) {
      best_idx = i;
      best_band = band;
    }
  }
  result.best = result.points[best_idx];
  result.in_band = best_band;
  return result;
}

}  // namespace ggaf
