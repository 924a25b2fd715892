#include <doctest.h>

#include <numbers>

#include "phat/errors.hpp"
#include "phat/optim.hpp"
#include "test_util.hpp"

using namespace phat;

namespace {

nn::NamedParams make_params(std::uint64_t seed) {
  nn::NamedParams p;
  p.emplace_back("a", ad::Var(testutil::random_tensor(2, 2, 2, seed, -1, 1), true));
  p.emplace_back("b", ad::Var(testutil::random_tensor(1, 1, 3, seed + 1, -1, 1), true));
  return p;
}

void set_grads(const nn::NamedParams& p, std::uint64_t seed) {
  for (std::size_t k = 0; k < p.size(); ++k) {
    const Tensor& v = p[k].second.value();
    p[k].second.node()->grad = testutil::random_tensor(v.channels(), v.height(), v.width(), seed + k, -1, 1);
  }
}

}  // namespace

TEST_CASE("cosine schedule") {
  CHECK(cosine_lr(0, 100, 1e-4, 1e-7) == doctest::Approx(1e-4));
  CHECK(cosine_lr(100, 100, 1e-4, 1e-7) == doctest::Approx(1e-7));
  CHECK(cosine_lr(50, 100, 1e-4, 1e-7) == doctest::Approx(0.5 * (1e-4 + 1e-7)));
  const double q = cosine_lr(25, 100, 1.0, 0.0);
  CHECK(q == doctest::Approx(0.5 * (1.0 + std::cos(std::numbers::pi / 4))));
  for (long s = 1; s <= 100; ++s) CHECK(cosine_lr(s, 100, 1e-3, 1e-6) <= cosine_lr(s - 1, 100, 1e-3, 1e-6));
  CHECK(cosine_lr(0, 0, 2.0, 1.0) == 2.0);
  CHECK_THROWS_AS(cosine_lr(101, 100, 1.0, 0.0), ParameterError);
  CHECK_THROWS_AS(cosine_lr(-1, 100, 1.0, 0.0), ParameterError);
}

TEST_CASE("adam matches a scalar reference") {
  const auto params = make_params(1);
  std::vector<std::vector<double>> w, m, v;
  for (const auto& [name, var] : params) {
    w.emplace_back(var.value().values().begin(), var.value().values().end());
    m.emplace_back(var.value().size(), 0.0);
    v.emplace_back(var.value().size(), 0.0);
  }
  Adam adam;
  const double lr = 1e-2, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (int t = 1; t <= 4; ++t) {
    set_grads(params, 10 * t);
    for (std::size_t k = 0; k < params.size(); ++k) {
      const Tensor& g = params[k].second.grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        m[k][i] = b1 * m[k][i] + (1 - b1) * g[i];
        v[k][i] = b2 * v[k][i] + (1 - b2) * g[i] * g[i];
        const double mh = m[k][i] / (1 - std::pow(b1, t));
        const double vh = v[k][i] / (1 - std::pow(b2, t));
        w[k][i] -= lr * mh / (std::sqrt(vh) + eps);
      }
    }
    adam.step(params, lr);
  }
  CHECK(adam.steps_taken() == 4);
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < w[k].size(); ++i) CHECK(testutil::rel_err(params[k].second.value()[i], w[k][i]) < 1e-12);
  }
}

TEST_CASE("first adam step moves each weight by lr against the gradient sign") {
  const auto params = make_params(2);
  const Tensor before = params[0].second.value();
  set_grads(params, 3);
  Adam adam;
  adam.step(params, 0.01);
  for (std::size_t i = 0; i < before.size(); ++i) {
    const double g = params[0].second.grad()[i];
    CHECK(params[0].second.value()[i] - before[i] == doctest::Approx(g > 0 ? -0.01 : 0.01).epsilon(1e-6));
  }
}

TEST_CASE("zero learning rate leaves weights unchanged") {
  const auto params = make_params(4);
  const Tensor a = params[0].second.value();
  const Tensor b = params[1].second.value();
  Adam adam;
  for (int t = 0; t < 3; ++t) {
    set_grads(params, 5 + t);
    adam.step(params, 0.0);
  }
  CHECK(params[0].second.value() == a);
  CHECK(params[1].second.value() == b);
}

TEST_CASE("parameters without gradients are skipped") {
  const auto params = make_params(6);
  const Tensor b = params[1].second.value();
  params[0].second.node()->grad = Tensor(2, 2, 2, 1.0);
  Adam adam;
  adam.step(params, 0.1);
  CHECK(params[1].second.value() == b);
  CHECK(adam.moments().count("a") == 1);
  CHECK(adam.moments().count("b") == 0);
}

TEST_CASE("gradient norm, scaling and clipping") {
  const auto params = make_params(7);
  params[0].second.node()->grad = Tensor(2, 2, 2, 1.0);
  params[1].second.node()->grad = Tensor(1, 1, 3, 0.0);
  params[1].second.node()->grad[0] = 1.0;
  CHECK(gradient_norm(params) == doctest::Approx(3.0));
  clip_gradients(params, 1.5);
  CHECK(gradient_norm(params) == doctest::Approx(1.5));
  clip_gradients(params, 10.0);
  CHECK(gradient_norm(params) == doctest::Approx(1.5));
  scale_gradients(params, 2.0);
  CHECK(gradient_norm(params) == doctest::Approx(3.0));
}
