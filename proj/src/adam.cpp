#include "laker/adam.hpp"

#include <cmath>

namespace laker {

Adam::Adam(std::vector<Tensor> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void Adam::step() {
  ++step_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t pi = 0; pi < params_.size(); ++pi) {
    auto& p = params_[pi];
    auto& node = p.node();
    if (node.value.size() != m_[pi].size()) {
      throw Error(ErrorKind::ShapeMismatch, "Adam state does not match parameter shape");
    }
    const bool has_grad = !node.grad.empty();
    for (std::size_t i = 0; i < node.value.size(); ++i) {
      double g = has_grad ? node.grad[i] : 0.0;
      m_[pi][i] = cfg_.beta1 * m_[pi][i] + (1.0 - cfg_.beta1) * g;
      v_[pi][i] = cfg_.beta2 * v_[pi][i] + (1.0 - cfg_.beta2) * g * g;
      double mhat = m_[pi][i] / bc1;
      double vhat = v_[pi][i] / bc2;
      node.value[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace laker
