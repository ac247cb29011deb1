#pragma once

#include <functional>
#include <vector>

#include "mvr/tensor.hpp"

namespace mvr::nn {

/// Central-difference comparison of a scalar function's analytic gradient.
/// Returns max over coordinates of |analytic - numeric| / max(1, |numeric|).
/// `f` must rebuild its graph from the leaf on every call (define-by-run).
/// Throws on non-finite values, naming the offending coordinate.
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double eps);

/// Same check against a set of leaf parameters already wired into `loss_fn`:
/// each listed tensor is perturbed in place coordinate by coordinate. When
/// `max_coords_per_param` > 0, only that many deterministically chosen
/// coordinates of each parameter are probed.
double grad_check_params(const std::function<Tensor()>& loss_fn,
                         const std::vector<Tensor>& params, double eps,
                         int max_coords_per_param = 0);

}  // namespace mvr::nn
