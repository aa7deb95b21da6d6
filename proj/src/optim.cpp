#include "harkit/optim.hpp"

#include <cmath>

#include "harkit/errors.hpp"

namespace harkit {

void AdamWState::step(ParamStore& params, const GradientMap& grads) {
  for (const auto& [name, g] : grads) {
    if (!g.all_finite()) {
      throw NumericError("adamw: non-finite gradient for " + name);
    }
    if (!g.same_shape(params.at(name))) {
      throw DimensionError("adamw: gradient shape mismatch for " + name);
    }
  }

  ++step_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));

  for (const auto& [name, g] : grads) {
    Tensor& theta = params.at(name);
    auto mi = m_.find(name);
    if (mi == m_.end()) {
      mi = m_.emplace(name, Tensor(theta.shape())).first;
      v_.emplace(name, Tensor(theta.shape()));
    }
    Tensor& m = mi->second;
    Tensor& v = v_.at(name);

    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      theta[i] -= config_.learning_rate *
                  (m_hat / (std::sqrt(v_hat) + config_.epsilon) +
                   config_.weight_decay * theta[i]);
    }
  }
}

}  // namespace harkit
