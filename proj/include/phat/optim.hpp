#pragma once

#include <map>
#include <string>

#include "phat/nn.hpp"

namespace phat {

// lr_final + 0.5 (lr_init - lr_final) (1 + cos(pi step / total_steps)).
// Throws ParameterError unless 0 <= step <= total_steps.
double cosine_lr(long step, long total_steps, double lr_init, double lr_final);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moments are keyed by parameter name so they can
// be checkpointed next to the weights.
class Adam {
 public:
  struct Moments {
    Tensor m;
    Tensor v;
  };

  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Applies one update to every parameter that received a gradient.
  void step(const nn::NamedParams& params, double lr);

  long steps_taken() const { return t_; }
  void set_steps_taken(long t) { t_ = t; }
  const std::map<std::string, Moments>& moments() const { return moments_; }
  std::map<std::string, Moments>& moments() { return moments_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  long t_ = 0;
  std::map<std::string, Moments> moments_;
};

// Global L2 norm of all gradients.
double gradient_norm(const nn::NamedParams& params);
// Rescales gradients so their global norm is at most max_norm.
void clip_gradients(const nn::NamedParams& params, double max_norm);
// Multiplies every gradient by k (batch averaging).
void scale_gradients(const nn::NamedParams& params, double k);

}  // namespace phat
