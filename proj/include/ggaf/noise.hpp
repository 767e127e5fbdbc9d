#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace ggaf {

// |e| below this floor counts as a vanishing prediction error. The surrogate
// curvature h(e) diverges there for beta < 2; callers must switch to the
// limit-form gain (see gain_multiplier).
inline constexpr double kSingularErrorFloor = 1e-30;

// Thrown when a quadratic surrogate is requested at a vanishing anchor error.
struct SingularAnchorError : std::domain_error {
  using std::domain_error::domain_error;
};

// kappa(beta) = sqrt(Gamma(1/beta) / Gamma(3/beta)).
// Scales the distribution so that c = sigma * kappa(beta) yields variance
// sigma^2. Evaluated through lgamma so small beta does not overflow.
template <typename Scalar>
Scalar kappa(Scalar beta) {
  if (!(beta > Scalar(0))) {
    throw std::domain_error("kappa: beta must be > 0");
  }
  const Scalar lg =
      std::lgamma(Scalar(1) / beta) - std::lgamma(Scalar(3) / beta);
  return std::exp(Scalar(0.5) * lg);
}

/// Zero-mean generalized Gaussian measurement-noise model,
/// density(e) proportional to exp(-(|e|/c)^beta).
///
/// beta = 2 is Gaussian, beta = 1 Laplace, beta < 1 heavy-tailed. The derived
/// members c (scale) and tau = c^beta / beta are kept consistent with
/// (beta, sigma) on construction; tau equals the noise variance at beta = 2.
template <typename Scalar = double>
struct NoiseModel {
  Scalar beta;
  Scalar sigma;
  Scalar c;
  Scalar tau;

  NoiseModel(Scalar beta_, Scalar sigma_) : beta(beta_), sigma(sigma_) {
    if (!(beta > Scalar(0))) {
      throw std::invalid_argument("NoiseModel: beta must be > 0");
    }
    if (!(sigma > Scalar(0))) {
      throw std::invalid_argument("NoiseModel: sigma must be > 0");
    }
    c = sigma * kappa(beta);
    tau = std::pow(c, beta) / beta;
  }

  // Model with a prescribed surrogate scale tau; sigma is implied.
  static NoiseModel from_tau(Scalar beta_, Scalar tau_) {
    if (!(tau_ > Scalar(0))) {
      throw std::invalid_argument("NoiseModel::from_tau: tau must be > 0");
    }
    const Scalar scale = std::pow(beta_ * tau_, Scalar(1) / beta_);
    return NoiseModel(beta_, scale / kappa(beta_));
  }
};

// Log-likelihood of a prediction error, -(|e|/c)^beta.
// The density's normalization constant is dropped.
template <typename Scalar>
Scalar ell(const NoiseModel<Scalar>& model, Scalar e) {
  return -std::pow(std::abs(e) / model.c, model.beta);
}

// Curvature coefficient of the quadratic surrogate anchored at e:
// h(e) = (beta / c^beta) |e|^{beta-2} = |e|^{beta-2} / tau, strictly positive.
// Diverges as e -> 0 for beta < 2; such anchors raise SingularAnchorError.
template <typename Scalar>
Scalar h_coeff(const NoiseModel<Scalar>& model, Scalar e) {
  const Scalar abs_e = std::abs(e);
  if (model.beta < Scalar(2) && abs_e < Scalar(kSingularErrorFloor)) {
    throw SingularAnchorError("h_coeff: vanishing error with beta < 2");
  }
  return std::pow(abs_e, model.beta - Scalar(2)) / model.tau;
}

// Quadratic minorizer of ell built at e_anchor, evaluated at e:
//   q(e) = -h(e_anchor) e^2 / 2 + C_q,
//   C_q  = (|e_anchor|/c)^beta (beta/2 - 1).
// Touches ell at the anchor and lower-bounds it everywhere for beta in [1,2].
template <typename Scalar>
Scalar surrogate_q(const NoiseModel<Scalar>& model, Scalar e, Scalar e_anchor) {
  const Scalar h = h_coeff(model, e_anchor);
  const Scalar c_q = std::pow(std::abs(e_anchor) / model.c, model.beta) *
                     (model.beta / Scalar(2) - Scalar(1));
  return -Scalar(0.5) * h * e * e + c_q;
}

// i.i.d. draws from the model: G ~ Gamma(1/beta, 1), value = sign * c * G^{1/beta}.
// Deterministic for a given seed.
template <typename Scalar = double>
std::vector<Scalar> sample_noise(const NoiseModel<Scalar>& model,
                                 std::uint64_t seed, std::size_t count) {
  std::vector<Scalar> draws(count);
  std::mt19937_64 rng(seed);
  std::gamma_distribution<Scalar> gamma(Scalar(1) / model.beta, Scalar(1));
  std::uniform_int_distribution<int> coin(0, 1);
  const Scalar inv_beta = Scalar(1) / model.beta;
  for (Scalar& e : draws) {
    const Scalar magnitude = model.c * std::pow(gamma(rng), inv_beta);
    e = coin(rng) ? magnitude : -magnitude;
  }
  return draws;
}

}  // namespace ggaf
