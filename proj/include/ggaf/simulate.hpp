#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "ggaf/filters.hpp"
#include "ggaf/noise.hpp"

namespace ggaf {

/// System-identification scenario: true response h, AR(1) input, generalized
/// Gaussian measurement noise pinned by the output SNR.
template <typename Scalar = double>
struct Scenario {
  VectorX<Scalar> h;  // true impulse response, ||h|| > 0
  Scalar a = 0;       // AR(1) coefficient, |a| < 1
  Scalar v_u = 1;     // innovation variance (0 allowed as the degenerate case)
  Scalar snr_db = 0;  // output SNR in dB
  Scalar beta_star = 2;  // true noise shape
  long T = 0;            // horizon in samples
  int N = 1;             // independent realizations
};

template <typename Scalar>
void validate_scenario(const Scenario<Scalar>& sc) {
  if (!(std::abs(sc.a) < Scalar(1))) {
    throw std::invalid_argument("Scenario: |a| must be < 1");
  }
  if (!(sc.v_u >= Scalar(0))) {
    throw std::invalid_argument("Scenario: v_u must be >= 0");
  }
  if (sc.T < 1 || sc.N < 1) {
    throw std::invalid_argument("Scenario: T and N must be >= 1");
  }
  if (!(sc.h.norm() > Scalar(0))) {
    throw std::invalid_argument("Scenario: ||h|| must be > 0");
  }
  if (!(sc.beta_star > Scalar(0))) {
    throw std::invalid_argument("Scenario: beta_star must be > 0");
  }
}

/// Misalignment-vs-time series. misalignment[k] is ||w - h||^2 / ||h||^2 after
/// k processed samples; entry 0 is the initial state (1 for w = 0). A horizon
/// of T samples therefore yields T + 1 entries.
template <typename Scalar = double>
struct Trajectory {
  std::vector<Scalar> misalignment;

  std::size_t size() const { return misalignment.size(); }
  Scalar db(std::size_t k) const {
    return Scalar(10) * std::log10(misalignment[k]);
  }
};

template <typename Scalar>
Scalar to_db(Scalar m) {
  return Scalar(10) * std::log10(m);
}

namespace detail {

// splitmix64; spreads a trial seed into independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + stream * 0x9E3779B97F4A7C15ULL + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kInputStream = 1;
inline constexpr std::uint64_t kNoiseStream = 2;

}  // namespace detail

// AR(1) input x_t = -a x_{t-1} + u_t with x_0 from the stationary law
// (variance v_u / (1 - a^2)). v_u = 0 degenerates to the all-zero signal.
template <typename Scalar = double>
std::vector<Scalar> generate_ar1(Scalar a, Scalar v_u, long T,
                                 std::uint64_t seed) {
  if (!(std::abs(a) < Scalar(1))) {
    throw std::invalid_argument("generate_ar1: |a| must be < 1");
  }
  if (T < 0) {
    throw std::invalid_argument("generate_ar1: T must be >= 0");
  }
  if (!(v_u >= Scalar(0))) {
    throw std::invalid_argument("generate_ar1: v_u must be >= 0");
  }
  std::vector<Scalar> x(static_cast<std::size_t>(T), Scalar(0));
  if (T == 0 || v_u == Scalar(0)) {
    return x;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<Scalar> gauss(Scalar(0), Scalar(1));
  x[0] = std::sqrt(v_u / (Scalar(1) - a * a)) * gauss(rng);
  const Scalar sd_u = std::sqrt(v_u);
  for (long t = 1; t < T; ++t) {
    x[t] = -a * x[t - 1] + sd_u * gauss(rng);
  }
  return x;
}

// E[|x' h|^2] for the stationary AR(1) regressor: h' R h with
// R_ij = v_x (-a)^{|i-j|}, v_x = v_u / (1 - a^2).
template <typename Scalar>
Scalar analytic_signal_power(const VectorX<Scalar>& h, Scalar a, Scalar v_u) {
  if (!(std::abs(a) < Scalar(1))) {
    throw std::invalid_argument("analytic_signal_power: |a| must be < 1");
  }
  const Scalar v_x = v_u / (Scalar(1) - a * a);
  const Eigen::Index m = h.size();
  Scalar power = h.squaredNorm();
  Scalar lag_coeff = Scalar(1);
  for (Eigen::Index d = 1; d < m; ++d) {
    lag_coeff *= -a;
    Scalar cross = Scalar(0);
    for (Eigen::Index i = 0; i + d < m; ++i) {
      cross += h[i] * h[i + d];
    }
    power += Scalar(2) * lag_coeff * cross;
  }
  return v_x * power;
}

template <typename Scalar>
Scalar noise_variance_for_snr(const VectorX<Scalar>& h, Scalar a, Scalar v_u,
                              Scalar snr_db) {
  return analytic_signal_power(h, a, v_u) /
         std::pow(Scalar(10), snr_db / Scalar(10));
}

// Gaussian coefficients under an exponential decay envelope, normalized to
// unit norm. Stands in for a measured impulse response.
template <typename Scalar = double>
VectorX<Scalar> synthetic_impulse_response(Eigen::Index M, Scalar decay,
                                           std::uint64_t seed) {
  if (M < 1) {
    throw std::invalid_argument("synthetic_impulse_response: M must be >= 1");
  }
  if (!(decay > Scalar(0))) {
    throw std::invalid_argument(
        "synthetic_impulse_response: decay must be > 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<Scalar> gauss(Scalar(0), Scalar(1));
  VectorX<Scalar> h(M);
  for (Eigen::Index m = 0; m < M; ++m) {
    h[m] = gauss(rng) * std::exp(-Scalar(m) / decay);
  }
  const Scalar norm = h.norm();
  if (norm > Scalar(0)) {
    h /= norm;
  }
  return h;
}

template <typename Scalar = double>
struct TrialSignals {
  std::vector<Scalar> input;   // x_t
  std::vector<Scalar> output;  // y_t = x_t' h + eta_t
};

// Input and noisy output for one realization. Input and noise streams are
// split off the trial seed by fixed offsets.
template <typename Scalar>
TrialSignals<Scalar> make_trial_signals(const Scenario<Scalar>& scenario,
                                        std::uint64_t seed) {
  validate_scenario(scenario);
  const long T = scenario.T;
  const Eigen::Index M = scenario.h.size();
  TrialSignals<Scalar> sig;
  sig.input = generate_ar1(scenario.a, scenario.v_u, T,
                           detail::mix_seed(seed, detail::kInputStream));
  const Scalar v_eta = noise_variance_for_snr(scenario.h, scenario.a,
                                              scenario.v_u, scenario.snr_db);
  std::vector<Scalar> noise(static_cast<std::size_t>(T), Scalar(0));
  if (v_eta > Scalar(0)) {
    noise = sample_noise(NoiseModel<Scalar>(scenario.beta_star,
                                            std::sqrt(v_eta)),
                         detail::mix_seed(seed, detail::kNoiseStream),
                         static_cast<std::size_t>(T));
  }
  sig.output.resize(static_cast<std::size_t>(T));
  VectorX<Scalar> regressor = VectorX<Scalar>::Zero(M);
  for (long t = 0; t < T; ++t) {
    for (Eigen::Index j = 0; j < M; ++j) {
      regressor[j] = t - j >= 0 ? sig.input[static_cast<std::size_t>(t - j)]
                                : Scalar(0);
    }
    sig.output[static_cast<std::size_t>(t)] =
        regressor.dot(scenario.h) + noise[static_cast<std::size_t>(t)];
  }
  return sig;
}

// Run one filter over prepared signals, recording misalignment after every
// sample. Regressor pre-history is zero.
template <typename Scalar>
Trajectory<Scalar> run_filter(const TrialSignals<Scalar>& signals,
                              const VectorX<Scalar>& h,
                              const FilterConfig<Scalar>& config) {
  const Eigen::Index M = h.size();
  const long T = static_cast<long>(signals.output.size());
  const Scalar h2 = h.squaredNorm();
  FilterState<Scalar> state = init_state(config, M);
  Trajectory<Scalar> traj;
  traj.misalignment.resize(static_cast<std::size_t>(T) + 1);
  traj.misalignment[0] = (state.w - h).squaredNorm() / h2;
  VectorX<Scalar> regressor = VectorX<Scalar>::Zero(M);
  for (long t = 0; t < T; ++t) {
    for (Eigen::Index j = 0; j < M; ++j) {
      regressor[j] = t - j >= 0 ? signals.input[static_cast<std::size_t>(t - j)]
                                : Scalar(0);
    }
    auto [next, record] =
        step(state, config, regressor, signals.output[static_cast<std::size_t>(t)]);
    state = std::move(next);
    traj.misalignment[static_cast<std::size_t>(t) + 1] =
        (state.w - h).squaredNorm() / h2;
  }
  return traj;
}

// One realization: signals from the trial seed, then T filter steps.
template <typename Scalar>
Trajectory<Scalar> run_trial(const Scenario<Scalar>& scenario,
                             const FilterConfig<Scalar>& config,
                             std::uint64_t seed) {
  return run_filter(make_trial_signals(scenario, seed), scenario.h, config);
}

namespace detail {

inline constexpr int kTrialsPerBlock = 8;

}  // namespace detail

// Ensemble means for several filters over shared realizations. Trial i is
// seeded base_seed + i and every config sees the same signals. Trials are
// fanned out over worker threads in fixed-size blocks and accumulated in
// block order, so the result is bitwise independent of the thread count.
template <typename Scalar>
std::vector<Trajectory<Scalar>> run_ensemble_multi(
    const Scenario<Scalar>& scenario,
    const std::vector<FilterConfig<Scalar>>& configs, std::uint64_t base_seed,
    int threads = 1) {
  validate_scenario(scenario);
  if (configs.empty()) {
    return {};
  }
  const int n_trials = scenario.N;
  const std::size_t len = static_cast<std::size_t>(scenario.T) + 1;
  const std::size_t n_cfg = configs.size();
  const int n_blocks =
      (n_trials + detail::kTrialsPerBlock - 1) / detail::kTrialsPerBlock;

  std::vector<std::vector<Scalar>> total(n_cfg,
                                         std::vector<Scalar>(len, Scalar(0)));

  std::atomic<int> next_block{0};
  std::mutex merge_mutex;
  std::condition_variable merge_cv;
  int merge_turn = 0;
  std::exception_ptr first_error;

  auto worker = [&]() {
    std::vector<std::vector<Scalar>> block_sum(
        n_cfg, std::vector<Scalar>(len, Scalar(0)));
    for (;;) {
      const int b = next_block.fetch_add(1);
      if (b >= n_blocks) {
        break;
      }
      for (auto& acc : block_sum) {
        std::fill(acc.begin(), acc.end(), Scalar(0));
      }
      std::exception_ptr block_error;
      const int lo = b * detail::kTrialsPerBlock;
      const int hi = std::min(n_trials, lo + detail::kTrialsPerBlock);
      try {
        for (int i = lo; i < hi; ++i) {
          const TrialSignals<Scalar> signals = make_trial_signals(
              scenario, base_seed + static_cast<std::uint64_t>(i));
          for (std::size_t c = 0; c < n_cfg; ++c) {
            const Trajectory<Scalar> traj =
                run_filter(signals, scenario.h, configs[c]);
            for (std::size_t k = 0; k < len; ++k) {
              block_sum[c][k] += traj.misalignment[k];
            }
          }
        }
      } catch (...) {
        block_error = std::current_exception();
      }
      {
        std::unique_lock<std::mutex> lock(merge_mutex);
        merge_cv.wait(lock, [&] { return merge_turn == b; });
        if (block_error && !first_error) {
          first_error = block_error;
        }
        if (!first_error) {
          for (std::size_t c = 0; c < n_cfg; ++c) {
            for (std::size_t k = 0; k < len; ++k) {
              total[c][k] += block_sum[c][k];
            }
          }
        }
        ++merge_turn;
      }
      merge_cv.notify_all();
    }
  };

  const int n_workers = std::max(1, std::min(threads, n_blocks));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int i = 0; i < n_workers; ++i) {
      pool.emplace_back(worker);
    }
    for (auto& th : pool) {
      th.join();
    }
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }

  std::vector<Trajectory<Scalar>> means(n_cfg);
  for (std::size_t c = 0; c < n_cfg; ++c) {
    means[c].misalignment.resize(len);
    for (std::size_t k = 0; k < len; ++k) {
      means[c].misalignment[k] = total[c][k] / Scalar(n_trials);
    }
  }
  return means;
}

template <typename Scalar>
Trajectory<Scalar> run_ensemble(const Scenario<Scalar>& scenario,
                                const FilterConfig<Scalar>& config,
                                std::uint64_t base_seed, int threads = 1) {
  return run_ensemble_multi<Scalar>(scenario, {config}, base_seed,
                                    threads)[0];
}

}  // namespace ggaf
