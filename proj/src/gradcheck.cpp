#include "mvr/gradcheck.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mvr::nn {

namespace {

double rel_err(double analytic, double numeric, size_t coord, size_t param) {
  if (!std::isfinite(analytic) || !std::isfinite(numeric)) {
    throw std::runtime_error("grad_check: non-finite value at parameter " +
                             std::to_string(param) + " coordinate " + std::to_string(coord) +
                             " (analytic=" + std::to_string(analytic) +
                             ", numeric=" + std::to_string(numeric) + ")");
  }
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
}

}  // namespace

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("grad_check: eps must be positive");
  Tensor leaf = Tensor::from(x.shape(), x.data(), true);
  Tensor loss = f(leaf);
  leaf.zero_grad();
  backward(loss);
  const std::vector<double> analytic = leaf.grad();

  double worst = 0.0;
  NoGradGuard no_grad;
  for (size_t i = 0; i < leaf.data().size(); ++i) {
    const double saved = leaf.data()[i];
    leaf.data()[i] = saved + eps;
    const double fp = f(leaf).value();
    leaf.data()[i] = saved - eps;
    const double fm = f(leaf).value();
    leaf.data()[i] = saved;
    const double numeric = (fp - fm) / (2.0 * eps);
    worst = std::max(worst, rel_err(analytic[i], numeric, i, 0));
  }
  return worst;
}

double grad_check_params(const std::function<Tensor()>& loss_fn,
                         const std::vector<Tensor>& params, double eps,
                         int max_coords_per_param) {
  if (eps <= 0.0) throw std::invalid_argument("grad_check: eps must be positive");
  for (const Tensor& p : params) const_cast<Tensor&>(p).zero_grad();
  backward(loss_fn());
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const Tensor& p : params) analytic.push_back(p.grad());

  double worst = 0.0;
  NoGradGuard no_grad;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor p = params[pi];
    const size_t n = p.data().size();
    size_t step = 1;
    if (max_coords_per_param > 0 && n > static_cast<size_t>(max_coords_per_param)) {
      step = n / static_cast<size_t>(max_coords_per_param);
    }
    for (size_t i = 0; i < n; i += step) {
      const double saved = p.data()[i];
      p.data()[i] = saved + eps;
      const double fp = loss_fn().value();
      p.data()[i] = saved - eps;
      const double fm = loss_fn().value();
      p.data()[i] = saved;
      const double numeric = (fp - fm) / (2.0 * eps);
      worst = std::max(worst, rel_err(analytic[pi][i], numeric, i, pi));
    }
  }
  return worst;
}

}  // namespace mvr::nn
