#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "ggaf/filters.hpp"

namespace test_support {

// Plain linear Kalman filter for a constant state observed through scalar
// products: w_t = w_{t-1} (process noise q I), y_t = x_t' w_t + v_t with
// Var v = r. Written straight from the standard predict/update equations as
// an independent check on the unified recursion.
struct TextbookKf {
  Eigen::VectorXd w;
  Eigen::MatrixXd P;

  TextbookKf(Eigen::Index m, double p0)
      : w(Eigen::VectorXd::Zero(m)),
        P(p0 * Eigen::MatrixXd::Identity(m, m)) {}

  void step(const Eigen::VectorXd& x, double y, double r, double q) {
    P.diagonal().array() += q;
    const double innovation_var = r + x.dot(P * x);
    const Eigen::VectorXd gain = P * x / innovation_var;
    w += gain * (y - x.dot(w));
    const Eigen::MatrixXd reduced =
        (Eigen::MatrixXd::Identity(w.size(), w.size()) - gain * x.transpose()) *
        P;
    P = (reduced + reduced.transpose()) / 2.0;
  }
};

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

inline double rel_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

struct Rng {
  std::mt19937_64 engine;

  explicit Rng(std::uint64_t seed) : engine(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine);
  }
  double gauss(double sd = 1.0) {
    return std::normal_distribution<double>(0.0, sd)(engine);
  }
  int integer(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(engine);
  }
  Eigen::VectorXd vector(Eigen::Index m, double sd = 1.0) {
    Eigen::VectorXd v(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      v[i] = gauss(sd);
    }
    return v;
  }
  // Random symmetric positive definite matrix with unit-ish scale.
  Eigen::MatrixXd spd(Eigen::Index m) {
    Eigen::MatrixXd a(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        a(i, j) = gauss();
      }
    }
    Eigen::MatrixXd s = a * a.transpose() / double(m);
    s.diagonal().array() += 0.1;
    return s;
  }
};

// Central-difference derivative with step scaled to the argument.
template <typename F>
double fd_derivative(F f, double x) {
  const double h = std::max(std::abs(x), 1.0) * 1e-6;
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace test_support
