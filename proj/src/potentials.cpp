#include "nls4/potentials.hpp"

#include <array>

namespace nls4 {

std::string to_string(PotentialFamily family) {
  switch (family) {
    case PotentialFamily::zero: return "zero";
    case PotentialFamily::inverse_bracket: return "inverse_bracket";
    case PotentialFamily::gaussian_bump: return "gaussian_bump";
  }
  return "unknown";
}

PotentialFamily parse_potential_family(const std::string& name) {
  if (name == "zero") return PotentialFamily::zero;
  if (name == "inverse_bracket") return PotentialFamily::inverse_bracket;
  if (name == "gaussian_bump") return PotentialFamily::gaussian_bump;
  throw PreconditionError("unknown potential family '" + name +
                          "' (expected zero, inverse_bracket or gaussian_bump)");
}

void PotentialSpec::validate() const {
  if (dimension <= 0) throw PreconditionError("potential: dimension must be positive");
  if (!std::isfinite(c)) throw PreconditionError("potential: coefficient c must be finite");
  switch (family) {
    case PotentialFamily::zero: break;
    case PotentialFamily::inverse_bracket:
      if (!(beta > 0) || !std::isfinite(beta))
        throw PreconditionError("potential: inverse_bracket needs beta > 0");
      break;
    case PotentialFamily::gaussian_bump:
      if (!(a > 0) || !std::isfinite(a))
        throw PreconditionError("potential: gaussian_bump needs a > 0");
      break;
  }
}

double PotentialSpec::value(double r) const {
  switch (family) {
    case PotentialFamily::zero: return 0;
    case PotentialFamily::inverse_bracket: return c * std::pow(1 + r * r, -beta / 2);
    case PotentialFamily::gaussian_bump: return c * std::exp(-a * r * r);
  }
  return 0;
}

double PotentialSpec::derivative(double r) const {
  switch (family) {
    case PotentialFamily::zero: return 0;
    case PotentialFamily::inverse_bracket: return -c * beta * r * std::pow(1 + r * r, -beta / 2 - 1);
    case PotentialFamily::gaussian_bump: return -2 * a * c * r * std::exp(-a * r * r);
  }
  return 0;
}

double PotentialSpec::decay_exponent() const {
  if (family == PotentialFamily::inverse_bracket && c != 0) return beta;
  return std::numeric_limits<double>::infinity();
}

std::uint64_t PotentialSpec::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  const auto fam = static_cast<std::int32_t>(family);
  mix(&fam, sizeof fam);
  mix(&dimension, sizeof dimension);
  // zero out coefficients that the family ignores so equal potentials hash equal
  const std::array<double, 3> coeffs{family == PotentialFamily::zero ? 0.0 : c,
                                     family == PotentialFamily::inverse_bracket ? beta : 0.0,
                                     family == PotentialFamily::gaussian_bump ? a : 0.0};
  mix(coeffs.data(), sizeof(double) * coeffs.size());
  return h;
}

}  // namespace nls4
