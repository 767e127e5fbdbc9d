#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <variant>

#include "ggaf/noise.hpp"

namespace ggaf {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

namespace detail {
template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;
}  // namespace detail

// The filter family. KF keeps the full posterior covariance; vKF a diagonal
// (per-coefficient variances); sKF one shared variance; fKF a variance that
// never updates; SG is the stochastic-gradient limit with no covariance at all.
enum class FilterVariant { KF, VKF, SKF, FKF, SG };

// Posterior covariance payloads, one per model of the estimate spread.
template <typename Scalar>
struct FullCovariance {
  MatrixX<Scalar> V;  // symmetric positive definite
};
template <typename Scalar>
struct VectorCovariance {
  VectorX<Scalar> v;  // strictly positive entries
};
template <typename Scalar>
struct ScalarCovariance {
  Scalar v;  // strictly positive
};
template <typename Scalar>
struct FixedCovariance {
  Scalar v;  // strictly positive, never updated
};

template <typename Scalar>
using CovarianceRepr =
    std::variant<FullCovariance<Scalar>, VectorCovariance<Scalar>,
                 ScalarCovariance<Scalar>, FixedCovariance<Scalar>>;

/// Static configuration of one adaptive filter.
///
/// Knobs are variant-specific: mu drives SG only, reg (= tau / v_bar) drives
/// fKF only, epsilon and v0 drive the covariance-tracking variants. SG ignores
/// epsilon and v0; fKF ignores epsilon and v0 as well, since its whole
/// covariance model collapses into reg.
template <typename Scalar = double>
struct FilterConfig {
  FilterVariant variant;
  NoiseModel<Scalar> noise;
  Scalar epsilon = 0;    // process-noise variance added per sample
  int refine_iters = 0;  // extra gain-multiplier refinements (I)
  Scalar v0 = 1;         // prior variance of the state elements
  Scalar mu = 0;         // SG adaptation step
  Scalar reg = 0;        // fKF regularization factor tau / v_bar
};

template <typename Scalar>
void validate_config(const FilterConfig<Scalar>& config) {
  if (!(config.noise.beta >= Scalar(1) && config.noise.beta <= Scalar(2))) {
    throw std::invalid_argument("FilterConfig: filters require beta in [1, 2]");
  }
  if (config.refine_iters < 0) {
    throw std::invalid_argument("FilterConfig: refine_iters must be >= 0");
  }
  switch (config.variant) {
    case FilterVariant::SG:
      if (!(config.mu > Scalar(0))) {
        throw std::invalid_argument("FilterConfig: SG requires mu > 0");
      }
      break;
    case FilterVariant::FKF:
      if (!(config.reg > Scalar(0))) {
        throw std::invalid_argument("FilterConfig: fKF requires reg > 0");
      }
      break;
    default:
      if (!(config.epsilon >= Scalar(0))) {
        throw std::invalid_argument("FilterConfig: epsilon must be >= 0");
      }
      if (!(config.v0 > Scalar(0))) {
        throw std::invalid_argument("FilterConfig: v0 must be > 0");
      }
      break;
  }
}

template <typename Scalar = double>
struct FilterState {
  VectorX<Scalar> w;            // posterior mean
  CovarianceRepr<Scalar> cov;   // posterior covariance payload
  long t = 0;                   // samples processed
};

/// Per-sample diagnostics from step().
template <typename Scalar = double>
struct StepRecord {
  Scalar e = 0;             // prediction error at the pre-update mean
  Scalar s = 0;             // predicted-output second moment x' kappa
  std::optional<Scalar> h;  // surrogate coefficient at e; empty = limit form
  Scalar alpha = 0;         // final gain multiplier
  int iters_used = 0;       // gain evaluations that moved the mean
};

// Fresh state: w = 0 and a variant-shaped prior spread. The fKF stores
// v_bar = 1; its regularization lives entirely in config.reg. SG reuses the
// same placeholder payload and never reads it.
template <typename Scalar>
FilterState<Scalar> init_state(const FilterConfig<Scalar>& config,
                               Eigen::Index M) {
  validate_config(config);
  if (M < 1) {
    throw std::invalid_argument("init_state: M must be >= 1");
  }
  FilterState<Scalar> state;
  state.w = VectorX<Scalar>::Zero(M);
  switch (config.variant) {
    case FilterVariant::KF:
      state.cov = FullCovariance<Scalar>{
          MatrixX<Scalar>(config.v0 * MatrixX<Scalar>::Identity(M, M))};
      break;
    case FilterVariant::VKF:
      state.cov =
          VectorCovariance<Scalar>{VectorX<Scalar>::Constant(M, config.v0)};
      break;
    case FilterVariant::SKF:
      state.cov = ScalarCovariance<Scalar>{config.v0};
      break;
    case FilterVariant::FKF:
    case FilterVariant::SG:
      state.cov = FixedCovariance<Scalar>{Scalar(1)};
      break;
  }
  return state;
}

template <typename Scalar>
struct Prediction {
  CovarianceRepr<Scalar> cov;  // predicted payload (posterior + epsilon)
  VectorX<Scalar> kappa;       // preliminary gain
  Scalar s;                    // x' kappa, always >= 0
};

// Time update: inflate the covariance payload by epsilon and form the
// preliminary gain kappa and the predicted-output second moment s.
template <typename Derived, typename Scalar = typename Derived::Scalar>
Prediction<Scalar> predict(const FilterState<Scalar>& state,
                           const FilterConfig<Scalar>& config,
                           const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != state.w.size()) {
    throw std::invalid_argument("predict: regressor dimension mismatch");
  }
  Prediction<Scalar> out;
  std::visit(
      detail::Overloaded{
          [&](const FullCovariance<Scalar>& full) {
            MatrixX<Scalar> v_bar = full.V;
            v_bar.diagonal().array() += config.epsilon;
            out.kappa.noalias() = v_bar * x;
            out.s = x.dot(out.kappa);
            out.cov = FullCovariance<Scalar>{std::move(v_bar)};
          },
          [&](const VectorCovariance<Scalar>& vec) {
            VectorX<Scalar> v_bar = vec.v.array() + config.epsilon;
            out.kappa = v_bar.cwiseProduct(x);
            out.s = x.dot(out.kappa);
            out.cov = VectorCovariance<Scalar>{std::move(v_bar)};
          },
          [&](const ScalarCovariance<Scalar>& sc) {
            const Scalar v_bar = sc.v + config.epsilon;
            out.kappa = v_bar * x;
            out.s = v_bar * x.squaredNorm();
            out.cov = ScalarCovariance<Scalar>{v_bar};
          },
          [&](const FixedCovariance<Scalar>& fx) {
            out.kappa = fx.v * x;
            out.s = fx.v * x.squaredNorm();
            out.cov = fx;
          }},
      state.cov);
  return out;
}

// alpha = 1 / (tau |e|^{2-beta} + s). When the error vanishes with beta < 2
// the gain tends to the finite limit 1/s (0 if s is zero as well).
template <typename Scalar>
Scalar gain_multiplier_tau(Scalar beta, Scalar tau, Scalar e, Scalar s) {
  if (!(s >= Scalar(0))) {
    throw std::invalid_argument("gain_multiplier: s must be >= 0");
  }
  const Scalar abs_e = std::abs(e);
  if (beta < Scalar(2) && abs_e < Scalar(kSingularErrorFloor)) {
    return s > Scalar(0) ? Scalar(1) / s : Scalar(0);
  }
  return Scalar(1) / (tau * std::pow(abs_e, Scalar(2) - beta) + s);
}

template <typename Scalar>
Scalar gain_multiplier(const NoiseModel<Scalar>& noise, Scalar e, Scalar s) {
  return gain_multiplier_tau(noise.beta, noise.tau, e, s);
}

namespace detail {

template <typename Scalar>
Scalar sign(Scalar e) {
  return e > Scalar(0) ? Scalar(1) : (e < Scalar(0) ? Scalar(-1) : Scalar(0));
}

// Surrogate coefficient for the diagnostics record; empty on the limit form.
template <typename Scalar>
std::optional<Scalar> record_h(Scalar beta, Scalar tau, Scalar e) {
  const Scalar abs_e = std::abs(e);
  if (beta < Scalar(2) && abs_e < Scalar(kSingularErrorFloor)) {
    return std::nullopt;
  }
  return std::pow(abs_e, beta - Scalar(2)) / tau;
}

}  // namespace detail

// One measurement update. Returns the new state and the step diagnostics.
//
// Non-SG variants run the refinement loop
//   e_i   = y - x' w_i
//   a_i   = 1 / (tau |e_i|^{2-beta} + s)
//   w_{i+1} = w_prev + kappa a_i e_0
// for i = 0..I; only the gain multiplier is refined, the innovation stays
// e_0. The loop exits early once the multiplier stops changing (relative
// 1e-12), so beta = 2 never pays for extra passes. The covariance payload is
// updated once with the final multiplier.
//
// SG bypasses all of it: w += mu x |e|^{beta-1} sign(e), with sign(0) = 0.
template <typename Derived, typename Scalar = typename Derived::Scalar>
std::pair<FilterState<Scalar>, StepRecord<Scalar>> step(
    const FilterState<Scalar>& state, const FilterConfig<Scalar>& config,
    const Eigen::MatrixBase<Derived>& x, Scalar y) {
  validate_config(config);
  if (x.size() != state.w.size()) {
    throw std::invalid_argument("step: regressor dimension mismatch");
  }
  if (!x.allFinite() || !std::isfinite(y)) {
    throw std::invalid_argument("step: non-finite input");
  }
  const Scalar beta = config.noise.beta;

  FilterState<Scalar> next;
  StepRecord<Scalar> record;

  if (config.variant == FilterVariant::SG) {
    const Scalar e = y - x.dot(state.w);
    const Scalar sgn = detail::sign(e);
    next.w = state.w;
    if (sgn != Scalar(0)) {
      next.w += (config.mu * std::pow(std::abs(e), beta - Scalar(1)) * sgn) * x;
    }
    next.cov = state.cov;
    next.t = state.t + 1;
    record.e = e;
    record.s = 0;
    record.h = detail::record_h(beta, config.noise.tau, e);
    record.alpha = 0;
    record.iters_used = 0;
    if (!next.w.allFinite()) {
      throw std::runtime_error("step: update produced non-finite state");
    }
    return {std::move(next), record};
  }

  const Scalar tau =
      config.variant == FilterVariant::FKF ? config.reg : config.noise.tau;
  Prediction<Scalar> pred = predict(state, config, x);

  const Scalar e0 = y - x.dot(state.w);
  Scalar alpha = gain_multiplier_tau(beta, tau, e0, pred.s);
  VectorX<Scalar> w = state.w + pred.kappa * (alpha * e0);
  int iters = 1;
  for (int i = 1; i <= config.refine_iters; ++i) {
    const Scalar e_i = y - x.dot(w);
    const Scalar alpha_i = gain_multiplier_tau(beta, tau, e_i, pred.s);
    if (std::abs(alpha_i - alpha) <= Scalar(1e-12) * alpha) {
      break;
    }
    alpha = alpha_i;
    w = state.w + pred.kappa * (alpha * e0);
    ++iters;
  }

  next.w = std::move(w);
  next.cov = std::visit(
      detail::Overloaded{
          [&](FullCovariance<Scalar>& full) -> CovarianceRepr<Scalar> {
            // V = Vbar (I - x kappa' alpha) = Vbar - alpha kappa kappa',
            // symmetrized against floating-point drift.
            MatrixX<Scalar> v = std::move(full.V);
            v.noalias() -= alpha * pred.kappa * pred.kappa.transpose();
            v = ((v + v.transpose()) / Scalar(2)).eval();
            return FullCovariance<Scalar>{std::move(v)};
          },
          [&](VectorCovariance<Scalar>& vec) -> CovarianceRepr<Scalar> {
            VectorX<Scalar> v =
                vec.v.array() *
                (Scalar(1) - pred.kappa.array() * x.array() * alpha);
            return VectorCovariance<Scalar>{std::move(v)};
          },
          [&](ScalarCovariance<Scalar>& sc) -> CovarianceRepr<Scalar> {
            return ScalarCovariance<Scalar>{
                sc.v * (Scalar(1) - pred.s * alpha / Scalar(x.size()))};
          },
          [&](FixedCovariance<Scalar>& fx) -> CovarianceRepr<Scalar> {
            return fx;
          }},
      pred.cov);
  next.t = state.t + 1;

  record.e = e0;
  record.s = pred.s;
  record.h = detail::record_h(beta, tau, e0);
  record.alpha = alpha;
  record.iters_used = iters;

  if (!next.w.allFinite()) {
    throw std::runtime_error("step: update produced non-finite state");
  }
  return {std::move(next), record};
}

// Objective maximized by the measurement update, up to the log-prior constant:
//   ell(y - x'w) - (w - w_prev)' Vbar^{-1} (w - w_prev) / 2.
// Monotonicity across refinement iterations is the MM guarantee; this exists
// to let tests check it.
template <typename Scalar>
Scalar posterior_objective(const VectorX<Scalar>& w_prev,
                           const CovarianceRepr<Scalar>& cov_pred,
                           const NoiseModel<Scalar>& noise,
                           const VectorX<Scalar>& x, Scalar y,
                           const VectorX<Scalar>& w) {
  const VectorX<Scalar> d = w - w_prev;
  const Scalar quad = std::visit(
      detail::Overloaded{
          [&](const FullCovariance<Scalar>& full) -> Scalar {
            Eigen::LLT<MatrixX<Scalar>> llt(full.V);
            if (llt.info() != Eigen::Success) {
              throw std::runtime_error(
                  "posterior_objective: predicted covariance not positive "
                  "definite");
            }
            return d.dot(llt.solve(d));
          },
          [&](const VectorCovariance<Scalar>& vec) -> Scalar {
            if (!(vec.v.array() > Scalar(0)).all()) {
              throw std::runtime_error(
                  "posterior_objective: non-positive predicted variance");
            }
            return (d.array().square() / vec.v.array()).sum();
          },
          [&](const ScalarCovariance<Scalar>& sc) -> Scalar {
            if (!(sc.v > Scalar(0))) {
              throw std::runtime_error(
                  "posterior_objective: non-positive predicted variance");
            }
            return d.squaredNorm() / sc.v;
          },
          [&](const FixedCovariance<Scalar>& fx) -> Scalar {
            if (!(fx.v > Scalar(0))) {
              throw std::runtime_error(
                  "posterior_objective: non-positive predicted variance");
            }
            return d.squaredNorm() / fx.v;
          }},
      cov_pred);
  return ell(noise, y - x.dot(w)) - quad / Scalar(2);
}

}  // namespace ggaf
