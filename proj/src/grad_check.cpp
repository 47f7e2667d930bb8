#include "laker/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace laker {

GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                           double eps, double tol) {
  Tensor probe = Tensor::from(x.shape(), x.values(), true);
  Tensor loss = f(probe);
  if (loss.numel() != 1) {
    throw Error(ErrorKind::NotScalar, "grad_check requires a scalar-valued function");
  }
  backward(loss);
  std::vector<double> analytic =
      probe.has_grad() ? probe.grad() : std::vector<double>(x.numel(), 0.0);

  auto eval = [&](const std::vector<double>& data) {
    NoGradGuard ng;
    Tensor t = Tensor::from(x.shape(), data, false);
    return f(t).item();
  };

  std::vector<double> base = x.values();
  double f0 = eval(base);

  GradCheckReport report;
  for (std::size_t i = 0; i < base.size(); ++i) {
    double saved = base[i];
    base[i] = saved + eps;
    double fp = eval(base);
    base[i] = saved - eps;
    double fm = eval(base);
    base[i] = saved;

    double d_right = (fp - f0) / eps;
    double d_left = (f0 - fm) / eps;
    double kink_scale = std::max({1.0, std::abs(d_right), std::abs(d_left)});
    if (std::abs(d_right - d_left) > 1e-2 * kink_scale) {
      ++report.skipped;
      continue;
    }

    double numeric = (fp - fm) / (2.0 * eps);
    double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-8});
    double rel = std::abs(numeric - analytic[i]) / denom;
    report.max_rel_err = std::max(report.max_rel_err, rel);
    ++report.checked;
  }
  report.pass = report.max_rel_err < tol;
  return report;
}

}  // namespace laker
