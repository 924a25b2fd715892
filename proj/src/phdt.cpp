#include "phat/phdt.hpp"

#include <algorithm>
#include <string>

#include "phat/errors.hpp"

namespace phat {

std::vector<int> PhdtConfig::widths() const {
  return {std::max(channels / 4, 4), std::max(channels / 2, 4), channels};
}

void PhdtConfig::validate() const {
  if (channels < 1) throw ConfigError("PHDT channel count must be >= 1");
  if (res_blocks < 0) throw ConfigError("PHDT residual block count must be >= 0");
}

AtmosphericLightVector::AtmosphericLightVector(Tensor data) : data_(std::move(data)) {
  if (data_.height() != 1 || data_.width() != 1) {
    throw DimensionError("atmospheric light vector must be Cx1x1, got " + data_.shape_string());
  }
  for (double v : data_.values()) {
    if (!(v > 0.0 && v <= 1.0)) throw ParameterError("atmospheric light feature outside (0,1]");
  }
}

PhdtWeights PhdtWeights::init(const PhdtConfig& config, Rng& rng) {
  config.validate();
  const auto widths = config.widths();
  std::vector<int> reversed(widths.rbegin(), widths.rend());
  PhdtWeights w;
  w.config = config;
  w.ale = nn::Encoder::init(3, widths, config.res_blocks, rng);
  w.tme = nn::Encoder::init(3, widths, config.res_blocks, rng);
  w.ce = nn::Encoder::init(3, widths, config.res_blocks, rng);
  w.re = nn::Decoder::init(reversed, config.res_blocks, 3, rng);
  return w;
}

void PhdtWeights::collect(const std::string& prefix, nn::NamedParams& out) const {
  ale.collect(prefix + "ale", out);
  tme.collect(prefix + "tme", out);
  ce.collect(prefix + "ce", out);
  re.collect(prefix + "re", out);
}

nn::NamedParams PhdtWeights::params() const {
  nn::NamedParams out;
  collect("", out);
  return out;
}

void require_finite(const Tensor& t, const char* what) {
  if (!t.all_finite()) throw DivergenceError(std::string("non-finite values in ") + what);
}

ad::Var atmospheric_light_graph(const PhdtWeights& w, const ad::Var& hazy) {
  // Pool after the exp(-relu) squashing so the pooled vector stays in (0,1].
  return ad::global_avg_pool(ad::exp_neg(ad::relu(w.ale(hazy))));
}

ad::Var transmission_graph(const PhdtWeights& w, const ad::Var& hazy) {
  return ad::exp_neg(ad::relu(w.tme(hazy)));
}

ad::Var content_graph(const PhdtWeights& w, const ad::Var& clean) { return w.ce(clean); }

ad::Var fuse_graph(const ad::Var& content, const ad::Var& transmission, const ad::Var& airlight) {
  require_same_shape(content.value(), transmission.value(), "fuse_asm_latent");
  if (airlight.value().channels() != content.value().channels() || airlight.value().plane() != 1) {
    throw DimensionError("fuse_asm_latent: airlight " + airlight.value().shape_string() +
                         " does not match features " + content.value().shape_string());
  }
  const ad::Var light =
      ad::broadcast_channels(airlight, content.value().height(), content.value().width());
  return ad::add(ad::mul(content, transmission), ad::mul(light, ad::one_minus(transmission)));
}

ad::Var rehaze_graph(const PhdtWeights& w, const ad::Var& fused) { return w.re(fused); }

ad::Var phdt_graph(const PhdtWeights& w, const ad::Var& hazy, const ad::Var& clean,
                   const TmEdit& edit, const FusionObserver* observer, int stage) {
  require_same_shape(hazy.value(), clean.value(), "phdt_forward");
  require_resolution(hazy.value().height(), hazy.value().width(), 8, "phdt_forward");
  const ad::Var airlight = atmospheric_light_graph(w, hazy);
  const ad::Var transmission = apply_tm_edit(transmission_graph(w, hazy), edit);
  const ad::Var content = content_graph(w, clean);
  if (observer && *observer) (*observer)(stage, content.value(), transmission.value(), airlight.value());
  return rehaze_graph(w, fuse_graph(content, transmission, airlight));
}

AtmosphericLightVector encode_atmospheric_light(const ImageTensor& hazy, const PhdtWeights& w) {
  ad::NoGradGuard guard;
  Tensor out = atmospheric_light_graph(w, ad::constant(hazy.tensor())).value();
  require_finite(out, "atmospheric light features");
  return AtmosphericLightVector(std::move(out));
}

LatentFeatures encode_transmission(const ImageTensor& hazy, const PhdtWeights& w) {
  ad::NoGradGuard guard;
  Tensor out = transmission_graph(w, ad::constant(hazy.tensor())).value();
  require_finite(out, "transmission features");
  return LatentFeatures(std::move(out));
}

LatentFeatures encode_content(const ImageTensor& clean, const PhdtWeights& w) {
  ad::NoGradGuard guard;
  Tensor out = content_graph(w, ad::constant(clean.tensor())).value();
  require_finite(out, "content features");
  return LatentFeatures(std::move(out));
}

LatentFeatures fuse_asm_latent(const LatentFeatures& content, const LatentFeatures& transmission,
                               const AtmosphericLightVector& airlight) {
  ad::NoGradGuard guard;
  return LatentFeatures(fuse_graph(ad::constant(content.tensor()), ad::constant(transmission.tensor()),
                                   ad::constant(airlight.tensor()))
                            .value());
}

Tensor rehaze_decode(const LatentFeatures& fused, const PhdtWeights& w) {
  ad::NoGradGuard guard;
  Tensor out = rehaze_graph(w, ad::constant(fused.tensor())).value();
  require_finite(out, "rehazed image");
  return out;
}

Tensor phdt_forward(const ImageTensor& hazy, const ImageTensor& clean, const PhdtWeights& w) {
  ad::NoGradGuard guard;
  Tensor out = phdt_graph(w, ad::constant(hazy.tensor()), ad::constant(clean.tensor())).value();
  require_finite(out, "PHDT output");
  return out;
}

}  // namespace phat
