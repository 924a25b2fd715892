#include <doctest.h>

#include "phat/errors.hpp"
#include "phat/losses.hpp"
#include "test_util.hpp"

using namespace phat;

namespace {

// Independent pyramid: every coarse pixel is the mean of its 2^k x 2^k block.
double brute_pyramid_l1(const std::vector<Tensor>& outs, const Tensor& ref) {
  double total = 0.0;
  for (std::size_t s = 0; s < outs.size(); ++s) {
    const int f = 1 << s;
    const Tensor& o = outs[s];
    double acc = 0.0;
    for (int c = 0; c < o.channels(); ++c) {
      for (int y = 0; y < o.height(); ++y) {
        for (int x = 0; x < o.width(); ++x) {
          double m = 0.0;
          for (int dy = 0; dy < f; ++dy) {
            for (int dx = 0; dx < f; ++dx) m += ref(c, y * f + dy, x * f + dx);
          }
          acc += std::abs(o(c, y, x) - m / (f * f));
        }
      }
    }
    total += acc / static_cast<double>(o.size());
  }
  return total;
}

MultiScaleOutput random_outputs(int levels, int h, int w, std::uint64_t seed) {
  MultiScaleOutput out;
  for (int s = 0; s < levels; ++s) out.outputs.push_back(testutil::random_tensor(3, h >> s, w >> s, seed + s, -0.2, 1.2));
  return out;
}

}  // namespace

TEST_CASE("l1 distance") {
  Tensor a(1, 1, 4, 0.0);
  Tensor b(1, 1, 4, 0.0);
  b[0] = 1.0;
  b[1] = -1.0;
  CHECK(l1_distance(a, b) == 0.5);
  CHECK(l1_distance(a, a) == 0.0);
  CHECK_THROWS_AS(l1_distance(a, Tensor(1, 2, 2)), DimensionError);
}

TEST_CASE("htc, cl and total losses match brute-force oracles") {
  for (int levels = 1; levels <= 3; ++levels) {
    const MultiScaleOutput o1 = random_outputs(levels, 8, 8, 10 * levels);
    const MultiScaleOutput o2 = random_outputs(levels, 8, 8, 10 * levels + 5);
    const ImageTensor hazy = testutil::random_image(8, 8, 100 + levels);
    const ImageTensor clean = testutil::random_image(8, 8, 200 + levels);
    const LossValue htc = htc_loss(o1, hazy);
    const LossValue cl = cl_loss(o2, clean);
    CHECK(htc.per_scale.size() == static_cast<std::size_t>(levels));
    const double htc_ref = brute_pyramid_l1(o1.outputs, hazy.tensor());
    const double cl_ref = brute_pyramid_l1(o2.outputs, clean.tensor());
    CHECK(testutil::rel_err(htc.total, htc_ref) <= 1e-9);
    CHECK(testutil::rel_err(cl.total, cl_ref) <= 1e-9);
    CHECK(testutil::rel_err(total_loss(htc, cl), htc_ref + cl_ref) <= 1e-9);
  }
}

TEST_CASE("perfect prediction has zero loss") {
  const ImageTensor img = testutil::random_image(16, 16, 3);
  MultiScaleOutput out;
  out.outputs = image_pyramid(img.tensor(), 2);
  const LossValue v = htc_loss(out, img);
  CHECK(v.total == 0.0);
}

TEST_CASE("graph loss equals value loss and has the sign gradient") {
  const MultiScaleOutput o = random_outputs(2, 8, 8, 40);
  const Tensor ref = testutil::random_tensor(3, 8, 8, 41);
  MultiScaleGraph g;
  for (const auto& t : o.outputs) g.outputs.emplace_back(t, true);
  std::vector<ad::Var> terms;
  const ad::Var loss = pyramid_l1_graph(g, ref, &terms);
  CHECK(loss.value()[0] == doctest::Approx(pyramid_l1(o, ref).total).epsilon(1e-14));
  REQUIRE(terms.size() == 2);
  ad::backward(loss);
  const auto refs = image_pyramid(ref, 2);
  for (std::size_t s = 0; s < 2; ++s) {
    const double n = static_cast<double>(o.outputs[s].size());
    for (std::size_t i = 0; i < o.outputs[s].size(); ++i) {
      const double d = o.outputs[s][i] - refs[s][i];
      CHECK(g.outputs[s].grad()[i] == (d > 0 ? 1.0 : -1.0) / n);
    }
  }
}

TEST_CASE("empty output is rejected") {
  CHECK_THROWS_AS(pyramid_l1(MultiScaleOutput{}, Tensor(3, 8, 8)), DimensionError);
}
