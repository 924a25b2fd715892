#include "phat/optim.hpp"

#include <cmath>
#include <numbers>

#include "phat/errors.hpp"

namespace phat {

double cosine_lr(long step, long total_steps, double lr_init, double lr_final) {
  if (total_steps < 0 || step < 0 || step > total_steps) {
    throw ParameterError("cosine_lr: step " + std::to_string(step) + " outside [0, " +
                         std::to_string(total_steps) + "]");
  }
  if (total_steps == 0) return lr_init;
  const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
  return lr_final + 0.5 * (lr_init - lr_final) * (1.0 + std::cos(std::numbers::pi * progress));
}

void Adam::step(const nn::NamedParams& params, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (auto [name, var] : params) {
    const Tensor& g = var.grad();
    if (g.empty()) continue;
    Tensor& w = var.mutable_value();
    auto [it, inserted] = moments_.try_emplace(name);
    Moments& mo = it->second;
    if (inserted || mo.m.empty()) {
      mo.m = Tensor(w.channels(), w.height(), w.width());
      mo.v = Tensor(w.channels(), w.height(), w.width());
    }
    require_same_shape(mo.m, w, "Adam moments");
    for (std::size_t i = 0; i < w.size(); ++i) {
      mo.m[i] = config_.beta1 * mo.m[i] + (1.0 - config_.beta1) * g[i];
      mo.v[i] = config_.beta2 * mo.v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = mo.m[i] / bc1;
      const double v_hat = mo.v[i] / bc2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

double gradient_norm(const nn::NamedParams& params) {
  double s = 0.0;
  for (const auto& [name, var] : params) {
    for (double g : var.grad().values()) s += g * g;
  }
  return std::sqrt(s);
}

void scale_gradients(const nn::NamedParams& params, double k) {
  for (const auto& [name, var] : params) {
    Tensor& g = var.node()->grad;
    for (double& v : g.values()) v *= k;
  }
}

void clip_gradients(const nn::NamedParams& params, double max_norm) {
  const double norm = gradient_norm(params);
  if (norm > max_norm && norm > 0.0) scale_gradients(params, max_norm / norm);
}

}  // namespace phat
