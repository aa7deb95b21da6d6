#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "harkit/param_store.hpp"
#include "harkit/tensor.hpp"

namespace harkit {

struct AdamWConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

// Decoupled-weight-decay Adam with bias correction. Deterministic; a step
// with any non-finite gradient aborts before touching parameters or state.
class AdamWState {
public:
  explicit AdamWState(AdamWConfig config = {}) : config_(config) {}

  const AdamWConfig& config() const { return config_; }
  std::uint64_t step_count() const { return step_; }

  void step(ParamStore& params, const GradientMap& grads);

  const Tensor& first_moment(const std::string& name) const { return m_.at(name); }
  const Tensor& second_moment(const std::string& name) const { return v_.at(name); }

private:
  AdamWConfig config_;
  std::uint64_t step_ = 0;
  std::map<std::string, Tensor> m_;
  std::map<std::string, Tensor> v_;
};

}  // namespace harkit
