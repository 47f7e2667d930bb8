#include "laker/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace laker {

namespace detail {

void ensure_grad(Node& n) {
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
}

}  // namespace detail

using detail::Node;

namespace {

thread_local bool g_grad_enabled = true;

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

void check_finite(const Tensor& t, const char* op) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::NonFiniteInput, std::string(op) + " received non-finite input");
    }
  }
}

[[noreturn]] void shape_fail(const char* op) {
  throw Error(ErrorKind::ShapeMismatch, std::string("incompatible shapes in ") + op);
}

// Rows/cols view: rank-1 {d} reads as one row, rank-2 {n,d} as n rows.
std::pair<std::size_t, std::size_t> rows_cols(const Tensor& t) {
  const auto& s = t.shape();
  if (s.size() == 1) return {1, s[0]};
  if (s.size() == 2) return {s[0], s[1]};
  shape_fail("rows_cols (rank > 2 unsupported)");
}

}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

// ---- Tensor basics ----------------------------------------------------------

Tensor make_op_result(std::vector<std::size_t> shape, std::vector<double> value,
                      std::vector<Tensor> parents,
                      std::function<void(Node&)> backprop) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->is_leaf = false;
  if (g_grad_enabled) {
    bool needs = false;
    for (const auto& p : parents) {
      if (p.defined() && p.requires_grad()) needs = true;
    }
    if (needs) {
      node->requires_grad = true;
      for (const auto& p : parents) node->parents.push_back(p.node_ptr());
      node->backprop = std::move(backprop);
    }
  }
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  return from(std::move(shape), {}, requires_grad);
}

Tensor Tensor::full(std::vector<std::size_t> shape, double fill, bool requires_grad) {
  std::vector<double> data(shape_numel(shape), fill);
  return from(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> data,
                    bool requires_grad) {
  std::size_t n = shape_numel(shape);
  if (data.empty()) data.assign(n, 0.0);
  if (data.size() != n) {
    throw Error(ErrorKind::ShapeMismatch, "data length does not match shape extents");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  node->is_leaf = true;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from({1}, {v}, requires_grad);
}

Tensor Tensor::randn(std::vector<std::size_t> shape, Rng& rng, double stddev,
                     bool requires_grad) {
  std::vector<double> data(shape_numel(shape));
  for (auto& v : data) v = rng.normal(0.0, stddev);
  return from(std::move(shape), std::move(data), requires_grad);
}

Node& Tensor::node() const {
  if (!n_) throw Error(ErrorKind::ValidationError, "use of undefined Tensor");
  return *n_;
}

std::size_t Tensor::rows() const { return rows_cols(*this).first; }
std::size_t Tensor::cols() const { return rows_cols(*this).second; }

double Tensor::item() const {
  if (numel() != 1) throw Error(ErrorKind::NotScalar, "item() on non-scalar tensor");
  return node().value[0];
}

void Tensor::set_requires_grad(bool v) {
  if (!node().is_leaf) {
    throw Error(ErrorKind::ValidationError, "requires_grad may only be toggled on leaves");
  }
  node().requires_grad = v;
}

const std::vector<double>& Tensor::grad() const {
  if (node().grad.empty()) {
    throw Error(ErrorKind::ValidationError, "tensor has no gradient");
  }
  return node().grad;
}

void Tensor::zero_grad() {
  auto& g = node().grad;
  std::fill(g.begin(), g.end(), 0.0);
}

Tensor Tensor::detached() const {
  return Tensor::from(shape(), values(), false);
}

// ---- op implementations ------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) shape_fail("matmul");
  std::size_t m = a.shape()[0], k = a.shape()[1];
  std::size_t k2 = b.shape()[0], n = b.shape()[1];
  if (k != k2) shape_fail("matmul");
  std::vector<double> out(m * n, 0.0);
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = av.data() + i * k;
    double* orow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      double s = arow[p];
      if (s == 0.0) continue;
      const double* brow = bv.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += s * brow[j];
    }
  }
  auto an = a.node_ptr();
  auto bn = b.node_ptr();
  return make_op_result({m, n}, std::move(out), {a, b}, [an, bn, m, k, n](Node& self) {
    const auto& g = self.grad;
    if (an->requires_grad) {
      detail::ensure_grad(*an);
      // dA += dC @ B^T
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          const double* grow = g.data() + i * n;
          const double* brow = bn->value.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
          an->grad[i * k + p] += s;
        }
      }
    }
    if (bn->requires_grad) {
      detail::ensure_grad(*bn);
      // dB += A^T @ dC
      for (std::size_t i = 0; i < m; ++i) {
        const double* arow = an->value.data() + i * k;
        const double* grow = g.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          double s = arow[p];
          if (s == 0.0) continue;
          double* brow = bn->grad.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) brow[j] += s * grow[j];
        }
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) shape_fail("transpose");
  std::size_t m = a.shape()[0], n = a.shape()[1];
  std::vector<double> out(m * n);
  const auto& av = a.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  auto an = a.node_ptr();
  return make_op_result({n, m}, std::move(out), {a}, [an, m, n](Node& self) {
    if (!an->requires_grad) return;
    detail::ensure_grad(*an);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) an->grad[i * n + j] += self.grad[j * m + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  auto an = a.node_ptr();
  auto bn = b.node_ptr();
  return make_op_result(a.shape(), std::move(out), {a, b}, [an, bn](Node& self) {
    for (auto& pn : {an, bn}) {
      if (!pn->requires_grad) continue;
      detail::ensure_grad(*pn);
      for (std::size_t i = 0; i < self.grad.size(); ++i) pn->grad[i] += self.grad[i];
    }
  });
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
  auto [rows, cols] = rows_cols(m);
  if (v.rank() != 1 || v.shape()[0] != cols) shape_fail("add_rowvec");
  std::vector<double> out(m.numel());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out[i * cols + j] = m.values()[i * cols + j] + v.values()[j];
  auto mn = m.node_ptr();
  auto vn = v.node_ptr();
  return make_op_result(m.shape(), std::move(out), {m, v}, [mn, vn, rows, cols](Node& self) {
    if (mn->requires_grad) {
      detail::ensure_grad(*mn);
      for (std::size_t i = 0; i < self.grad.size(); ++i) mn->grad[i] += self.grad[i];
    }
    if (vn->requires_grad) {
      detail::ensure_grad(*vn);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) vn->grad[j] += self.grad[i * cols + j];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  auto an = a.node_ptr();
  auto bn = b.node_ptr();
  return make_op_result(a.shape(), std::move(out), {a, b}, [an, bn](Node& self) {
    if (an->requires_grad) {
      detail::ensure_grad(*an);
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        an->grad[i] += self.grad[i] * bn->value[i];
    }
    if (bn->requires_grad) {
      detail::ensure_grad(*bn);
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        bn->grad[i] += self.grad[i] * an->value[i];
    }
  });
}

Tensor mul_rowvec(const Tensor& m, const Tensor& v) {
  auto [rows, cols] = rows_cols(m);
  if (v.rank() != 1 || v.shape()[0] != cols) shape_fail("mul_rowvec");
  std::vector<double> out(m.numel());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out[i * cols + j] = m.values()[i * cols + j] * v.values()[j];
  auto mn = m.node_ptr();
  auto vn = v.node_ptr();
  return make_op_result(m.shape(), std::move(out), {m, v}, [mn, vn, rows, cols](Node& self) {
    if (mn->requires_grad) {
      detail::ensure_grad(*mn);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
          mn->grad[i * cols + j] += self.grad[i * cols + j] * vn->value[j];
    }
    if (vn->requires_grad) {
      detail::ensure_grad(*vn);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
          vn->grad[j] += self.grad[i * cols + j] * mn->value[i * cols + j];
    }
  });
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * c;
  auto an = a.node_ptr();
  return make_op_result(a.shape(), std::move(out), {a}, [an, c](Node& self) {
    if (!an->requires_grad) return;
    detail::ensure_grad(*an);
    for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += c * self.grad[i];
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) shape_fail("concat (no inputs)");
  if (axis > 1) shape_fail("concat");
  for (const auto& p : parts)
    if (p.rank() != 2) shape_fail("concat (rank-2 inputs required)");

  std::size_t rows = 0, cols = 0;
  if (axis == 0) {
    cols = parts[0].shape()[1];
    for (const auto& p : parts) {
      if (p.shape()[1] != cols) shape_fail("concat axis 0");
      rows += p.shape()[0];
    }
  } else {
    rows = parts[0].shape()[0];
    for (const auto& p : parts) {
      if (p.shape()[0] != rows) shape_fail("concat axis 1");
      cols += p.shape()[1];
    }
  }

  std::vector<double> out(rows * cols);
  if (axis == 0) {
    std::size_t off = 0;
    for (const auto& p : parts) {
      std::copy(p.values().begin(), p.values().end(), out.begin() + off);
      off += p.numel();
    }
  } else {
    std::size_t coff = 0;
    for (const auto& p : parts) {
      std::size_t pc = p.shape()[1];
      for (std::size_t i = 0; i < rows; ++i)
        std::copy(p.values().begin() + i * pc, p.values().begin() + (i + 1) * pc,
                  out.begin() + i * cols + coff);
      coff += pc;
    }
  }

  std::vector<std::shared_ptr<Node>> pnodes;
  pnodes.reserve(parts.size());
  for (const auto& p : parts) pnodes.push_back(p.node_ptr());
  return make_op_result({rows, cols}, std::move(out), parts,
                        [pnodes, axis, rows, cols](Node& self) {
    if (axis == 0) {
      std::size_t off = 0;
      for (auto& pn : pnodes) {
        std::size_t n = pn->value.size();
        if (pn->requires_grad) {
          detail::ensure_grad(*pn);
          for (std::size_t i = 0; i < n; ++i) pn->grad[i] += self.grad[off + i];
        }
        off += n;
      }
    } else {
      std::size_t coff = 0;
      for (auto& pn : pnodes) {
        std::size_t pc = pn->shape[1];
        if (pn->requires_grad) {
          detail::ensure_grad(*pn);
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < pc; ++j)
              pn->grad[i * pc + j] += self.grad[i * cols + coff + j];
        }
        coff += pc;
      }
    }
  });
}

Tensor gather_rows(const Tensor& m, const std::vector<std::size_t>& indices) {
  if (m.rank() != 2) shape_fail("gather_rows");
  std::size_t cols = m.shape()[1];
  for (auto idx : indices) {
    if (idx >= m.shape()[0]) {
      throw Error(ErrorKind::BadSlot, "gather_rows index out of range");
    }
  }
  std::vector<double> out(indices.size() * cols);
  for (std::size_t i = 0; i < indices.size(); ++i)
    std::copy(m.values().begin() + indices[i] * cols,
              m.values().begin() + (indices[i] + 1) * cols, out.begin() + i * cols);
  auto mn = m.node_ptr();
  auto idx = indices;
  return make_op_result({indices.size(), cols}, std::move(out), {m},
                        [mn, idx, cols](Node& self) {
    if (!mn->requires_grad) return;
    detail::ensure_grad(*mn);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < cols; ++j)
        mn->grad[idx[i] * cols + j] += self.grad[i * cols + j];
  });
}

Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  auto an = a.node_ptr();
  return make_op_result({1}, {s}, {a}, [an](Node& self) {
    if (!an->requires_grad) return;
    detail::ensure_grad(*an);
    for (auto& g : an->grad) g += self.grad[0];
  });
}

Tensor mean_all(const Tensor& a) {
  std::size_t n = a.numel();
  if (n == 0) shape_fail("mean_all (empty)");
  double s = 0.0;
  for (double v : a.values()) s += v;
  auto an = a.node_ptr();
  double inv = 1.0 / static_cast<double>(n);
  return make_op_result({1}, {s * inv}, {a}, [an, inv](Node& self) {
    if (!an->requires_grad) return;
    detail::ensure_grad(*an);
    for (auto& g : an->grad) g += self.grad[0] * inv;
  });
}

Tensor mean_axis(const Tensor& a, std::size_t axis) {
  if (a.rank() != 2 || axis > 1) shape_fail("mean_axis");
  std::size_t rows = a.shape()[0], cols = a.shape()[1];
  auto an = a.node_ptr();
  if (axis == 0) {
    std::vector<double> out(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) out[j] += a.values()[i * cols + j];
    double inv = 1.0 / static_cast<double>(rows);
    for (auto& v : out) v *= inv;
    return make_op_result({cols}, std::move(out), {a}, [an, rows, cols, inv](Node& self) {
      if (!an->requires_grad) return;
      detail::ensure_grad(*an);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) an->grad[i * cols + j] += self.grad[j] * inv;
    });
  }
  std::vector<double> out(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[i] += a.values()[i * cols + j];
  double inv = 1.0 / static_cast<double>(cols);
  for (auto& v : out) v *= inv;
  return make_op_result({rows}, std::move(out), {a}, [an, rows, cols, inv](Node& self) {
    if (!an->requires_grad) return;
    detail::ensure_grad(*an);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) an->grad[i * cols + j] += self.grad[i] * inv;
  });
}

Tensor sum_last(const Tensor& a) {
  auto [rows, cols] = rows_cols(a);
  std::vector<double> out(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[i] += a.values()[i * cols + j];
  auto an = a.node_ptr();
  return make_op_result({rows}, std::move(out), {a}, [an, rows, cols](Node& self) {
    if (!an->requires_grad) return;
    detail::ensure_grad(*an);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) an->grad[i * cols + j] += self.grad[i];
  });
}

Tensor softmax(const Tensor& a) {
  check_finite(a, "softmax");
  auto [rows, cols] = rows_cols(a);
  if (cols == 0) shape_fail("softmax (empty rows)");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < rows; ++i) {
    const double* x = a.values().data() + i * cols;
    double* y = out.data() + i * cols;
    double mx = x[0];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      y[j] = std::exp(x[j] - mx);
      z += y[j];
    }
    for (std::size_t j = 0; j < cols; ++j) y[j] /= z;
  }
  auto an = a.node_ptr();
  auto yv = out;  // keep a copy for backward
  return make_op_result(a.shape(), std::move(out), {a}, [an, yv, rows, cols](Node& self) {
    if (!an->requires_grad) return;
    detail::ensure_grad(*an);
    for (std::size_t i = 0; i < rows; ++i) {
      const double* y = yv.data() + i * cols;
      const double* g = self.grad.data() + i * cols;
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += y[j] * g[j];
      for (std::size_t j = 0; j < cols; ++j)
        an->grad[i * cols + j] += y[j] * (g[j] - dot);
    }
  });
}

Tensor layer_norm(const Tensor& a, double eps) {
  auto [rows, cols] = rows_cols(a);
  if (cols == 0) shape_fail("layer_norm (empty rows)");
  std::vector<double> out(a.numel());
  std::vector<double> inv_sigma(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* x = a.values().data() + i * cols;
    double mu = 0.0;
    for (std::size_t j = 0; j < cols; ++j) mu += x[j];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t j = 0; j < cols; ++j) var += (x[j] - mu) * (x[j] - mu);
    var /= static_cast<double>(cols);
    double is = 1.0 / std::sqrt(var + eps);
    inv_sigma[i] = is;
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = (x[j] - mu) * is;
  }
  auto an = a.node_ptr();
  auto xhat = out;  // normalized values
  return make_op_result(a.shape(), std::move(out), {a},
                        [an, xhat, inv_sigma, rows, cols](Node& self) {
    if (!an->requires_grad) return;
    detail::ensure_grad(*an);
    double invn = 1.0 / static_cast<double>(cols);
    for (std::size_t i = 0; i < rows; ++i) {
      const double* g = self.grad.data() + i * cols;
      const double* xh = xhat.data() + i * cols;
      double gmean = 0.0, gxmean = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        gmean += g[j];
        gxmean += g[j] * xh[j];
      }
      gmean *= invn;
      gxmean *= invn;
      for (std::size_t j = 0; j < cols; ++j)
        an->grad[i * cols + j] += inv_sigma[i] * (g[j] - gmean - xh[j] * gxmean);
    }
  });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] > 0.0 ? a.values()[i] : 0.0;
  auto an = a.node_ptr();
  return make_op_result(a.shape(), std::move(out), {a}, [an](Node& self) {
    if (!an->requires_grad) return;
    detail::ensure_grad(*an);
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (an->value[i] > 0.0) an->grad[i] += self.grad[i];
  });
}

Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double x = a.values()[i];
    out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  auto an = a.node_ptr();
  auto yv = out;
  return make_op_result(a.shape(), std::move(out), {a}, [an, yv](Node& self) {
    if (!an->requires_grad) return;
    detail::ensure_grad(*an);
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      an->grad[i] += self.grad[i] * yv[i] * (1.0 - yv[i]);
  });
}

Tensor exp(const Tensor& a) {
  check_finite(a, "exp");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(a.values()[i]);
  auto an = a.node_ptr();
  auto yv = out;
  return make_op_result(a.shape(), std::move(out), {a}, [an, yv](Node& self) {
    if (!an->requires_grad) return;
    detail::ensure_grad(*an);
    for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * yv[i];
  });
}

Tensor log(const Tensor& a) {
  check_finite(a, "log");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double x = a.values()[i];
    if (x <= 0.0) throw Error(ErrorKind::NonFiniteInput, "log of non-positive value");
    out[i] = std::log(x);
  }
  auto an = a.node_ptr();
  return make_op_result(a.shape(), std::move(out), {a}, [an](Node& self) {
    if (!an->requires_grad) return;
    detail::ensure_grad(*an);
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      an->grad[i] += self.grad[i] / an->value[i];
  });
}

Tensor l2_norm(const Tensor& a) {
  auto [rows, cols] = rows_cols(a);
  std::vector<double> out(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      double v = a.values()[i * cols + j];
      s += v * v;
    }
    out[i] = std::sqrt(s);
  }
  auto an = a.node_ptr();
  auto norms = out;
  return make_op_result({rows}, std::move(out), {a}, [an, norms, rows, cols](Node& self) {
    if (!an->requires_grad) return;
    detail::ensure_grad(*an);
    for (std::size_t i = 0; i < rows; ++i) {
      double r = norms[i];
      if (r <= 0.0) continue;  // zero vector: subgradient 0
      for (std::size_t j = 0; j < cols; ++j)
        an->grad[i * cols + j] += self.grad[i] * an->value[i * cols + j] / r;
    }
  });
}

Tensor l2_normalize(const Tensor& a, double eps) {
  auto [rows, cols] = rows_cols(a);
  std::vector<double> out(a.numel());
  std::vector<double> norms(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      double v = a.values()[i * cols + j];
      s += v * v;
    }
    norms[i] = std::sqrt(s);
    double inv = 1.0 / (norms[i] + eps);
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = a.values()[i * cols + j] * inv;
  }
  auto an = a.node_ptr();
  return make_op_result(a.shape(), std::move(out), {a}, [an, norms, eps, rows, cols](Node& self) {
    if (!an->requires_grad) return;
    detail::ensure_grad(*an);
    for (std::size_t i = 0; i < rows; ++i) {
      double r = norms[i] + eps;
      const double* g = self.grad.data() + i * cols;
      const double* x = an->value.data() + i * cols;
      double gx = 0.0;
      for (std::size_t j = 0; j < cols; ++j) gx += g[j] * x[j];
      for (std::size_t j = 0; j < cols; ++j) {
        double dg = g[j] / r;
        if (norms[i] > 0.0) dg -= x[j] * gx / (norms[i] * r * r);
        an->grad[i * cols + j] += dg;
      }
    }
  });
}

Tensor cosine_sim(const Tensor& a, const Tensor& b, double eps) {
  if (a.shape() != b.shape()) shape_fail("cosine_sim");
  return sum_last(mul(l2_normalize(a, eps), l2_normalize(b, eps)));
}

Tensor cross_entropy(const Tensor& logits, const std::vector<std::size_t>& targets) {
  check_finite(logits, "cross_entropy");
  auto [rows, cols] = rows_cols(logits);
  if (targets.size() != rows) shape_fail("cross_entropy (targets)");
  for (auto t : targets) {
    if (t >= cols) throw Error(ErrorKind::BadSlot, "cross_entropy target out of range");
  }
  std::vector<double> probs(logits.numel());
  double loss = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const double* x = logits.values().data() + i * cols;
    double* p = probs.data() + i * cols;
    double mx = x[0];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      p[j] = std::exp(x[j] - mx);
      z += p[j];
    }
    for (std::size_t j = 0; j < cols; ++j) p[j] /= z;
    loss += std::log(z) + mx - x[targets[i]];
  }
  loss /= static_cast<double>(rows);
  auto ln = logits.node_ptr();
  auto tgt = targets;
  return make_op_result({1}, {loss}, {logits}, [ln, tgt, probs, rows, cols](Node& self) {
    if (!ln->requires_grad) return;
    detail::ensure_grad(*ln);
    double inv = self.grad[0] / static_cast<double>(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        double delta = (j == tgt[i]) ? 1.0 : 0.0;
        ln->grad[i * cols + j] += (probs[i * cols + j] - delta) * inv;
      }
    }
  });
}

Tensor bce(const Tensor& logits, const std::vector<double>& labels) {
  check_finite(logits, "bce");
  if (logits.numel() != labels.size()) shape_fail("bce (labels)");
  std::size_t n = labels.size();
  if (n == 0) shape_fail("bce (empty)");
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double z = logits.values()[i];
    double y = labels[i];
    loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  }
  loss /= static_cast<double>(n);
  auto ln = logits.node_ptr();
  auto lab = labels;
  return make_op_result({1}, {loss}, {logits}, [ln, lab, n](Node& self) {
    if (!ln->requires_grad) return;
    detail::ensure_grad(*ln);
    double inv = self.grad[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      double z = ln->value[i];
      double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      ln->grad[i] += (s - lab[i]) * inv;
    }
  });
}

// ---- backward ----------------------------------------------------------------

void backward(const Tensor& loss) {
  Node* root = &loss.node();
  if (root->numel() != 1) {
    throw Error(ErrorKind::NotScalar, "backward requires a scalar loss");
  }
  if (root->consumed) {
    throw Error(ErrorKind::GraphConsumed, "backward already ran on this graph");
  }
  if (!root->requires_grad) {
    throw Error(ErrorKind::ValidationError, "loss does not require grad");
  }

  // Iterative post-order DFS; reverse post-order is a valid reverse-topological
  // order for the DAG rooted at loss.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, child] = stack.back();
    if (child < node->parents.size()) {
      Node* p = node->parents[child].get();
      ++child;
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  detail::ensure_grad(*root);
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop) n->backprop(*n);
  }

  // Free the graph; leaf gradients survive.
  for (Node* n : order) {
    if (!n->is_leaf) {
      n->backprop = nullptr;
      n->parents.clear();
      n->consumed = true;
    }
  }
}

}  // namespace laker
