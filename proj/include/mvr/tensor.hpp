#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace mvr::nn {

class Tensor;

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);
int64_t shape_numel(const Shape& s);

/// One node of the recorded computation graph. Tensors are thin handles to
/// nodes; an op output keeps its inputs alive through `parents` so backward
/// can replay the chain in reverse topological order.
struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<Tensor> parents;
  std::function<void(Node&)> backward_fn;

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
  }
};

/// Value-semantic handle to a shared tensor node. All values are 64-bit
/// floats in row-major order. Tensors that participate in a recorded graph
/// are never mutated in place; ops return fresh nodes.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(n_); }
  const Shape& shape() const { return n_->shape; }
  int rank() const { return static_cast<int>(n_->shape.size()); }
  int dim(int i) const { return n_->shape[static_cast<size_t>(i)]; }
  int64_t numel() const { return n_->numel(); }
  bool requires_grad() const { return n_->requires_grad; }
  void set_requires_grad(bool rg) { n_->requires_grad = rg; }

  std::vector<double>& data() { return n_->data; }
  const std::vector<double>& data() const { return n_->data; }
  double at(int64_t i) const { return n_->data[static_cast<size_t>(i)]; }

  /// Scalar extraction; throws unless numel()==1.
  double value() const;

  bool has_grad() const { return !n_->grad.empty(); }
  std::vector<double>& grad() { return n_->grad; }
  const std::vector<double>& grad() const { return n_->grad; }
  void zero_grad() { n_->grad.assign(n_->data.size(), 0.0); }

  /// Copy of the values with no graph attached.
  Tensor detach() const;

  Node* node() const { return n_.get(); }

 private:
  explicit Tensor(std::shared_ptr<Node> n) : n_(std::move(n)) {}
  std::shared_ptr<Node> n_;

  friend Tensor make_op_output(Shape shape, bool requires_grad,
                               std::vector<Tensor> parents,
                               std::function<void(Node&)> backward_fn);
};

/// Internal: allocate an op output node. data is zero-initialized.
Tensor make_op_output(Shape shape, bool requires_grad,
                      std::vector<Tensor> parents,
                      std::function<void(Node&)> backward_fn);

/// Reverse-mode sweep from a scalar loss. Gradients accumulate into any
/// existing .grad buffers; call zero_grad on leaves between steps.
void backward(const Tensor& loss);

/// While a guard is alive, ops do not record the graph (inference mode).
bool grad_enabled();
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

}  // namespace mvr::nn
