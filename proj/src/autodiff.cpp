#include "phat/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "phat/errors.hpp"

namespace phat::ad {

namespace {

thread_local bool g_grad_enabled = true;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

bool needs_grad(const std::vector<Var>& inputs) {
  if (!g_grad_enabled) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Var& v) { return v.requires_grad(); });
}

Tensor zeros_like(const Tensor& t) { return Tensor(t.channels(), t.height(), t.width()); }

// Apply f elementwise to produce a tensor of the same shape.
template <typename F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.channels(), a.height(), a.width());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

// im2col for a k x k kernel with zero padding (k-1)/2.
void im2col(const Tensor& x, int k, int stride, int out_h, int out_w, std::vector<double>& col) {
  const int pad = (k - 1) / 2;
  const int n = out_h * out_w;
  col.assign(static_cast<std::size_t>(x.channels()) * k * k * n, 0.0);
  std::size_t row = 0;
  for (int c = 0; c < x.channels(); ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx, ++row) {
        double* dst = col.data() + row * n;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= x.height()) continue;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < x.width()) dst[oy * out_w + ox] = x(c, iy, ix);
          }
        }
      }
    }
  }
}

void col2im(const std::vector<double>& col, int k, int stride, int out_h, int out_w, Tensor& dx) {
  const int pad = (k - 1) / 2;
  const int n = out_h * out_w;
  std::size_t row = 0;
  for (int c = 0; c < dx.channels(); ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx, ++row) {
        const double* src = col.data() + row * n;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= dx.height()) continue;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < dx.width()) dx(c, iy, ix) += src[oy * out_w + ox];
          }
        }
      }
    }
  }
}

}  // namespace

void Node::accumulate(const Tensor& g) {
  if (grad.empty()) {
    grad = g;
    return;
  }
  require_same_shape(grad, g, "gradient accumulation");
  for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Var make_result(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> bw) {
  Var out(std::move(value));
  if (needs_grad(inputs)) {
    out.node_->requires_grad = true;
    for (auto& in : inputs) out.node_->inputs.push_back(in.node());
    out.node_->backward = std::move(bw);
  }
  return out;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

void backward(const Var& root) {
  if (root.value().size() != 1) throw DimensionError("backward: root must be a scalar");
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.node().get(), 0}};
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->accumulate(Tensor::scalar(1.0));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

Var constant(Tensor value) { return Var(std::move(value), false); }

Var add(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return make_result(std::move(out), {a, b}, [](Node& n) {
    for (auto& in : n.inputs) {
      if (in->requires_grad) in->accumulate(n.grad);
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return make_result(std::move(out), {a, b}, [](Node& n) {
    if (n.inputs[0]->requires_grad) n.inputs[0]->accumulate(n.grad);
    if (n.inputs[1]->requires_grad) n.inputs[1]->accumulate(map(n.grad, [](double g) { return -g; }));
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return make_result(std::move(out), {a, b}, [](Node& n) {
    Node& a = *n.inputs[0];
    Node& b = *n.inputs[1];
    if (a.requires_grad) {
      Tensor g = n.grad;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= b.value[i];
      a.accumulate(g);
    }
    if (b.requires_grad) {
      Tensor g = n.grad;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= a.value[i];
      b.accumulate(g);
    }
  });
}

Var scale(const Var& a, double k) {
  return make_result(map(a.value(), [k](double v) { return k * v; }), {a}, [k](Node& n) {
    n.inputs[0]->accumulate(map(n.grad, [k](double g) { return k * g; }));
  });
}

Var one_minus(const Var& a) {
  return make_result(map(a.value(), [](double v) { return 1.0 - v; }), {a}, [](Node& n) {
    n.inputs[0]->accumulate(map(n.grad, [](double g) { return -g; }));
  });
}

Var relu(const Var& a) {
  return make_result(map(a.value(), [](double v) { return v > 0.0 ? v : 0.0; }), {a}, [](Node& n) {
    Tensor g = n.grad;
    const Tensor& x = n.inputs[0]->value;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!(x[i] > 0.0)) g[i] = 0.0;
    }
    n.inputs[0]->accumulate(g);
  });
}

Var leaky_relu(const Var& a, double slope) {
  return make_result(map(a.value(), [slope](double v) { return v > 0.0 ? v : slope * v; }), {a},
                     [slope](Node& n) {
                       Tensor g = n.grad;
                       const Tensor& x = n.inputs[0]->value;
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         if (!(x[i] > 0.0)) g[i] *= slope;
                       }
                       n.inputs[0]->accumulate(g);
                     });
}

Var exp_neg(const Var& a) {
  // The cap keeps the result strictly positive instead of underflowing to 0.
  static constexpr double kMaxExponent = 700.0;
  return make_result(map(a.value(), [](double v) { return std::exp(-std::min(v, kMaxExponent)); }),
                     {a}, [](Node& n) {
    Tensor g = n.grad;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= -n.value[i];
    n.inputs[0]->accumulate(g);
  });
}

Var pow_scalar(const Var& a, double gamma) {
  return make_result(map(a.value(), [gamma](double v) { return std::pow(v, gamma); }), {a},
                     [gamma](Node& n) {
                       Tensor g = n.grad;
                       const Tensor& x = n.inputs[0]->value;
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         g[i] *= gamma * std::pow(x[i], gamma - 1.0);
                       }
                       n.inputs[0]->accumulate(g);
                     });
}

Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride) {
  const Tensor& in = x.value();
  const Tensor& w = weight.value();
  const int out_c = w.channels();
  const int kk = w.width();
  const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(kk))));
  if (k * k != kk || k % 2 == 0) throw DimensionError("conv2d: kernel must be odd and square");
  if (w.height() != in.channels()) {
    throw DimensionError("conv2d: weight expects " + std::to_string(w.height()) +
                         " input channels, got " + in.shape_string());
  }
  if (bias.value().channels() != out_c) throw DimensionError("conv2d: bias length mismatch");
  if (stride != 1 && (in.height() % stride != 0 || in.width() % stride != 0)) {
    throw DimensionError("conv2d: resolution " + in.shape_string() + " not divisible by stride");
  }
  const int out_h = in.height() / stride;
  const int out_w = in.width() / stride;
  const int n = out_h * out_w;
  const int rows = in.channels() * kk;

  auto col = std::make_shared<std::vector<double>>();
  im2col(in, k, stride, out_h, out_w, *col);

  Tensor out(out_c, out_h, out_w);
  MatrixMap out_m(out.raw(), out_c, n);
  ConstMatrixMap w_m(w.raw(), out_c, rows);
  ConstMatrixMap col_m(col->data(), rows, n);
  out_m.noalias() = w_m * col_m;
  for (int o = 0; o < out_c; ++o) out_m.row(o).array() += bias.value()[o];

  const bool record = needs_grad({x, weight, bias});
  if (!record) col.reset();
  return make_result(std::move(out), {x, weight, bias},
                     [col, k, stride, out_h, out_w, out_c, rows, n](Node& node) {
                       Node& xin = *node.inputs[0];
                       Node& wn = *node.inputs[1];
                       Node& bn = *node.inputs[2];
                       ConstMatrixMap g_m(node.grad.raw(), out_c, n);
                       if (wn.requires_grad) {
                         Tensor dw(wn.value.channels(), wn.value.height(), wn.value.width());
                         MatrixMap dw_m(dw.raw(), out_c, rows);
                         ConstMatrixMap col_m(col->data(), rows, n);
                         dw_m.noalias() = g_m * col_m.transpose();
                         wn.accumulate(dw);
                       }
                       if (bn.requires_grad) {
                         Tensor db(out_c, 1, 1);
                         // Plain loop: Eigen's vectorised sum peels by address, so its order varies.
                         for (int o = 0; o < out_c; ++o) {
                           const double* g = node.grad.raw() + static_cast<std::size_t>(o) * n;
                           double s = 0.0;
                           for (int i = 0; i < n; ++i) s += g[i];
                           db[o] = s;
                         }
                         bn.accumulate(db);
                       }
                       if (xin.requires_grad) {
                         std::vector<double> dcol(static_cast<std::size_t>(rows) * n);
                         MatrixMap dcol_m(dcol.data(), rows, n);
                         ConstMatrixMap w_m(wn.value.raw(), out_c, rows);
                         dcol_m.noalias() = w_m.transpose() * g_m;
                         Tensor dx = zeros_like(xin.value);
                         col2im(dcol, k, stride, out_h, out_w, dx);
                         xin.accumulate(dx);
                       }
                     });
}

Var flip_rows(const Var& a) {
  return make_result(phat::flip_rows(a.value()), {a},
                     [](Node& n) { n.inputs[0]->accumulate(phat::flip_rows(n.grad)); });
}

Var global_avg_pool(const Var& a) {
  const Tensor& x = a.value();
  Tensor out(x.channels(), 1, 1);
  const double inv = 1.0 / static_cast<double>(x.plane());
  for (int c = 0; c < x.channels(); ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.plane(); ++i) s += x[c * x.plane() + i];
    out[c] = s * inv;
  }
  return make_result(std::move(out), {a}, [inv](Node& n) {
    const Tensor& x = n.inputs[0]->value;
    Tensor g(x.channels(), x.height(), x.width());
    for (int c = 0; c < x.channels(); ++c) {
      for (std::size_t i = 0; i < x.plane(); ++i) g[c * x.plane() + i] = n.grad[c] * inv;
    }
    n.inputs[0]->accumulate(g);
  });
}

Var broadcast_channels(const Var& v, int height, int width) {
  const Tensor& vec = v.value();
  if (vec.height() != 1 || vec.width() != 1) {
    throw DimensionError("broadcast_channels: expected Cx1x1, got " + vec.shape_string());
  }
  Tensor out(vec.channels(), height, width);
  for (int c = 0; c < vec.channels(); ++c) {
    std::fill_n(out.raw() + c * out.plane(), out.plane(), vec[c]);
  }
  return make_result(std::move(out), {v}, [](Node& n) {
    Tensor g(n.grad.channels(), 1, 1);
    for (int c = 0; c < g.channels(); ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < n.grad.plane(); ++i) s += n.grad[c * n.grad.plane() + i];
      g[c] = s;
    }
    n.inputs[0]->accumulate(g);
  });
}

Var downsample2(const Var& a) {
  return make_result(phat::downsample2(a.value()), {a}, [](Node& n) {
    const Tensor& x = n.inputs[0]->value;
    Tensor g(x.channels(), x.height(), x.width());
    for (int c = 0; c < x.channels(); ++c) {
      for (int y = 0; y < x.height(); ++y) {
        for (int xx = 0; xx < x.width(); ++xx) g(c, y, xx) = 0.25 * n.grad(c, y / 2, xx / 2);
      }
    }
    n.inputs[0]->accumulate(g);
  });
}

Var upsample2_bilinear(const Var& a) {
  return make_result(phat::upsample2_bilinear(a.value()), {a}, [](Node& n) {
    const Tensor& x = n.inputs[0]->value;
    n.inputs[0]->accumulate(upsample2_bilinear_adjoint(n.grad, x.height(), x.width()));
  });
}

Var upsample2_nearest(const Var& a) {
  return make_result(phat::upsample2_nearest(a.value()), {a}, [](Node& n) {
    const Tensor& x = n.inputs[0]->value;
    Tensor g(x.channels(), x.height(), x.width());
    for (int c = 0; c < n.grad.channels(); ++c) {
      for (int y = 0; y < n.grad.height(); ++y) {
        for (int xx = 0; xx < n.grad.width(); ++xx) g(c, y / 2, xx / 2) += n.grad(c, y, xx);
      }
    }
    n.inputs[0]->accumulate(g);
  });
}

Var mean_abs_diff(const Var& a, const Tensor& ref) {
  require_same_shape(a.value(), ref, "mean_abs_diff");
  const Tensor& x = a.value();
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - ref[i]);
  const double inv = 1.0 / static_cast<double>(x.size());
  return make_result(Tensor::scalar(s / static_cast<double>(x.size())), {a}, [ref, inv](Node& n) {
    const Tensor& x = n.inputs[0]->value;
    Tensor g(x.channels(), x.height(), x.width());
    const double scale = n.grad[0] * inv;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = x[i] - ref[i];
      g[i] = r > 0.0 ? scale : (r < 0.0 ? -scale : 0.0);
    }
    n.inputs[0]->accumulate(g);
  });
}

Var sum(const std::vector<Var>& scalars) {
  double s = 0.0;
  for (const auto& v : scalars) {
    if (v.value().size() != 1) throw DimensionError("sum: expected scalar terms");
    s += v.value()[0];
  }
  return make_result(Tensor::scalar(s), scalars, [](Node& n) {
    for (auto& in : n.inputs) {
      if (in->requires_grad) in->accumulate(n.grad);
    }
  });
}

}  // namespace phat::ad
