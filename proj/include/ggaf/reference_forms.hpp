#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "ggaf/filters.hpp"

namespace ggaf {

// Printed closed forms of the specialized algorithms, implemented directly
// from their one-line equations. These are deliberately independent of the
// step() recursion and serve as cross-check oracles for it.

template <typename Scalar>
VectorX<Scalar> lms_update(const VectorX<Scalar>& w, const VectorX<Scalar>& x,
                           Scalar e, Scalar mu) {
  return w + mu * e * x;
}

template <typename Scalar>
VectorX<Scalar> sign_lms_update(const VectorX<Scalar>& w,
                                const VectorX<Scalar>& x, Scalar e, Scalar mu) {
  return w + mu * detail::sign(e) * x;
}

template <typename Scalar>
VectorX<Scalar> nlms_update(const VectorX<Scalar>& w, const VectorX<Scalar>& x,
                            Scalar e) {
  const Scalar x2 = x.squaredNorm();
  if (x2 == Scalar(0)) {
    throw std::domain_error("nlms_update: zero regressor");
  }
  return w + (e / x2) * x;
}

template <typename Scalar>
VectorX<Scalar> regularized_nlms_update(const VectorX<Scalar>& w,
                                        const VectorX<Scalar>& x, Scalar e,
                                        Scalar reg) {
  const Scalar denom = reg + x.squaredNorm();
  if (denom == Scalar(0)) {
    throw std::domain_error("regularized_nlms_update: zero denominator");
  }
  return w + (e / denom) * x;
}

// w += x e / (|e|^{2-beta} reg + ||x||^2); the sign-error family at beta = 1.
template <typename Scalar>
VectorX<Scalar> robust_fkf_update(const VectorX<Scalar>& w,
                                  const VectorX<Scalar>& x, Scalar e,
                                  Scalar reg, Scalar beta) {
  const Scalar denom =
      std::pow(std::abs(e), Scalar(2) - beta) * reg + x.squaredNorm();
  if (denom == Scalar(0)) {
    throw std::domain_error("robust_fkf_update: zero denominator");
  }
  return w + (e / denom) * x;
}

// Broadband Kalman recursion: time-varying regularization v_eta / v_bar_t and
// the shared-variance update. Returns the new (w, v).
template <typename Scalar>
std::pair<VectorX<Scalar>, Scalar> broadband_kalman_step(
    const VectorX<Scalar>& w, Scalar v, const VectorX<Scalar>& x, Scalar y,
    Scalar v_eta, Scalar epsilon) {
  const Scalar v_bar = v + epsilon;
  const Scalar e = y - x.dot(w);
  const Scalar denom = v_eta / v_bar + x.squaredNorm();
  if (denom == Scalar(0)) {
    throw std::domain_error("broadband_kalman_step: zero denominator");
  }
  VectorX<Scalar> w_next = w + (e / denom) * x;
  const Scalar m = Scalar(x.size());
  const Scalar v_next = v_bar * (Scalar(1) - x.squaredNorm() / (m * denom));
  return {std::move(w_next), v_next};
}

// Robust sKF closed form with the |e|^{2-beta} tau / v_bar_t regularization.
template <typename Scalar>
std::pair<VectorX<Scalar>, Scalar> robust_skf_step(const VectorX<Scalar>& w,
                                                   Scalar v,
                                                   const VectorX<Scalar>& x,
                                                   Scalar y, Scalar tau,
                                                   Scalar epsilon,
                                                   Scalar beta) {
  const Scalar v_bar = v + epsilon;
  const Scalar e = y - x.dot(w);
  const Scalar denom =
      std::pow(std::abs(e), Scalar(2) - beta) * tau / v_bar + x.squaredNorm();
  if (denom == Scalar(0)) {
    throw std::domain_error("robust_skf_step: zero denominator");
  }
  VectorX<Scalar> w_next = w + (e / denom) * x;
  const Scalar m = Scalar(x.size());
  const Scalar v_next = v_bar * (Scalar(1) - x.squaredNorm() / (m * denom));
  return {std::move(w_next), v_next};
}

}  // namespace ggaf
