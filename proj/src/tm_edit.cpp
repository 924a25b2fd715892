#include "phat/tm_edit.hpp"

#include <cmath>
#include <cstdio>

#include "phat/errors.hpp"

namespace phat {

TmEdit TmEdit::gamma_correction(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParameterError("gamma must be > 0");
  return {Kind::kGamma, gamma};
}

std::string TmEdit::tag() const {
  switch (kind) {
    case Kind::kNone:
      return "none";
    case Kind::kVFlip:
      return "vflip";
    case Kind::kGamma: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "gamma%g", gamma);
      return buf;
    }
  }
  return "none";
}

TmEdit TmEdit::parse(const std::string& text) {
  if (text == "none") return none();
  if (text == "vflip") return vflip();
  if (text.rfind("gamma", 0) == 0) {
    std::string rest = text.substr(5);
    if (!rest.empty() && rest.front() == ':') rest.erase(0, 1);
    std::size_t used = 0;
    double g = 0.0;
    try {
      g = std::stod(rest, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != rest.size()) throw ParameterError("malformed gamma edit '" + text + "'");
    return gamma_correction(g);
  }
  throw ParameterError("unknown transmission edit '" + text + "'");
}

Tensor apply_tm_edit(const Tensor& ftm, const TmEdit& edit) {
  switch (edit.kind) {
    case TmEdit::Kind::kNone:
      return ftm;
    case TmEdit::Kind::kVFlip:
      return flip_rows(ftm);
    case TmEdit::Kind::kGamma: {
      Tensor out = ftm;
      for (double& v : out.values()) v = std::pow(v, edit.gamma);
      return out;
    }
  }
  return ftm;
}

ad::Var apply_tm_edit(const ad::Var& ftm, const TmEdit& edit) {
  switch (edit.kind) {
    case TmEdit::Kind::kNone:
      return ftm;
    case TmEdit::Kind::kVFlip:
      return ad::flip_rows(ftm);
    case TmEdit::Kind::kGamma:
      return ad::pow_scalar(ftm, edit.gamma);
  }
  return ftm;
}

}  // namespace phat
