#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "laker/errors.hpp"
#include "laker/rng.hpp"

namespace laker {

class Rng;

namespace detail {

struct Node {
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on first accumulation
  bool requires_grad = false;
  bool is_leaf = true;
  bool consumed = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;

  std::size_t numel() const { return value.size(); }
};

void ensure_grad(Node& n);

}  // namespace detail

// Dense tensor of 64-bit reals with reverse-mode gradient support. A Tensor is
// a cheap shared handle; ops record the graph while grad mode is on.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor full(std::vector<std::size_t> shape, double fill, bool requires_grad = false);
  static Tensor from(std::vector<std::size_t> shape, std::vector<double> data,
                     bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor randn(std::vector<std::size_t> shape, Rng& rng, double stddev,
                      bool requires_grad = false);

  bool defined() const { return static_cast<bool>(n_); }
  const std::vector<std::size_t>& shape() const { return node().shape; }
  std::size_t numel() const { return node().numel(); }
  std::size_t rank() const { return node().shape.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  const std::vector<double>& values() const { return node().value; }
  std::vector<double>& mutable_values() { return node().value; }
  double item() const;
  double at(std::size_t i) const { return node().value.at(i); }

  bool requires_grad() const { return node().requires_grad; }
  void set_requires_grad(bool v);
  bool has_grad() const { return !node().grad.empty(); }
  const std::vector<double>& grad() const;
  void zero_grad();

  // Copy of values with no graph link.
  Tensor detached() const;

  detail::Node& node() const;
  const std::shared_ptr<detail::Node>& node_ptr() const { return n_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> n) : n_(std::move(n)) {}
  std::shared_ptr<detail::Node> n_;

  friend Tensor make_op_result(std::vector<std::size_t> shape, std::vector<double> value,
                               std::vector<Tensor> parents,
                               std::function<void(detail::Node&)> backprop);
};

// ---- grad mode -------------------------------------------------------------

bool grad_enabled();

struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// ---- forward ops -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor add_rowvec(const Tensor& m, const Tensor& v);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor mul_rowvec(const Tensor& m, const Tensor& v);
Tensor scale(const Tensor& a, double c);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor gather_rows(const Tensor& m, const std::vector<std::size_t>& indices);
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
Tensor mean_axis(const Tensor& a, std::size_t axis);
Tensor sum_last(const Tensor& a);
Tensor softmax(const Tensor& a);
Tensor layer_norm(const Tensor& a, double eps);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor l2_norm(const Tensor& a);
Tensor l2_normalize(const Tensor& a, double eps = 1e-12);
Tensor cosine_sim(const Tensor& a, const Tensor& b, double eps = 1e-12);
Tensor cross_entropy(const Tensor& logits, const std::vector<std::size_t>& targets);
Tensor bce(const Tensor& logits, const std::vector<double>& labels);

// ---- backward --------------------------------------------------------------

// Backpropagates from a scalar loss into every requires_grad leaf, then frees
// the recorded graph. Gradients accumulate (+=) across calls on fresh graphs.
void backward(const Tensor& loss);

}  // namespace laker
