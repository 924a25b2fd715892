#pragma once

// Minimal tape-based reverse-mode differentiation over Tensor values.
//
// Every op returns a Var whose node remembers its inputs and a closure that
// pushes the node's gradient back to them. Recording happens only when some
// input requires a gradient and recording is not disabled by a NoGradGuard.

#include <functional>
#include <memory>
#include <vector>

#include "phat/tensor.hpp"

namespace phat::ad {

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  void accumulate(const Tensor& g);
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  // Direct access for optimizers and checkpoint loading.
  Tensor& mutable_value() { return node_->value; }
  // Empty when no gradient reached this variable.
  const Tensor& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad() { node_->grad = Tensor(); }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  friend Var make_result(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> bw);
  std::shared_ptr<Node> node_;
};

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Seeds d(root)/d(root) = 1 and propagates. `root` must hold one element.
void backward(const Var& root);

Var constant(Tensor value);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double k);
Var one_minus(const Var& a);
Var relu(const Var& a);
Var leaky_relu(const Var& a, double slope);
// exp(-a); the exponent is capped so the result never underflows to 0.
Var exp_neg(const Var& a);
// a^gamma for a > 0
Var pow_scalar(const Var& a, double gamma);

// 2-D convolution, zero padding (k-1)/2. weight is (out, in, k*k), bias
// (out, 1, 1); k is recovered from the weight shape.
Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride);

Var flip_rows(const Var& a);
Var global_avg_pool(const Var& a);
// (C,1,1) -> (C,h,w)
Var broadcast_channels(const Var& v, int height, int width);
Var downsample2(const Var& a);
Var upsample2_bilinear(const Var& a);
Var upsample2_nearest(const Var& a);

// mean |a - ref| over all elements; ref is treated as a constant.
Var mean_abs_diff(const Var& a, const Tensor& ref);
Var sum(const std::vector<Var>& scalars);

}  // namespace phat::ad
