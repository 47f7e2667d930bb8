#pragma once

#include <cstdint>
#include <vector>

#include "laker/tensor.hpp"

namespace laker {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam over a fixed set of parameter tensors. State holds first and
// second moments plus the step count; step() reads each parameter's
// accumulated gradient and updates values in place.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig cfg);

  void step();
  void zero_grad();
  std::uint64_t step_count() const { return step_; }
  AdamConfig& config() { return cfg_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  AdamConfig cfg_;
  std::uint64_t step_ = 0;
};

}  // namespace laker
