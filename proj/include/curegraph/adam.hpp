#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

namespace curegraph {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // L2 penalty folded into the gradient
};

/// One bias-corrected Adam step on `param`; `step` counts from 1.
template <typename P, typename G, typename S>
void adam_update(Eigen::MatrixBase<P>& param, const Eigen::MatrixBase<G>& grad,
                 Eigen::MatrixBase<S>& m, Eigen::MatrixBase<S>& v, const AdamConfig& cfg,
                 std::uint64_t step) {
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (Eigen::Index i = 0; i < param.rows(); ++i) {
    for (Eigen::Index j = 0; j < param.cols(); ++j) {
      const double g = grad(i, j) + cfg.weight_decay * param(i, j);
      m(i, j) = cfg.beta1 * m(i, j) + (1.0 - cfg.beta1) * g;
      v(i, j) = cfg.beta2 * v(i, j) + (1.0 - cfg.beta2) * g * g;
      const double mhat = m(i, j) / c1;
      const double vhat = v(i, j) / c2;
      param(i, j) -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace curegraph
