#include "nls4/analysis.hpp"

#include <charconv>
#include <sstream>

namespace nls4 {

std::string to_string(SpaceTimeNorm which) {
  switch (which) {
    case SpaceTimeNorm::M: return "M";
    case SpaceTimeNorm::W: return "W";
    case SpaceTimeNorm::Z: return "Z";
    case SpaceTimeNorm::N: return "N";
  }
  return "?";
}

Exponents spacetime_exponents(SpaceTimeNorm which, int n) {
  if (n <= 4) throw PreconditionError("spacetime norms need n >= 5");
  const double q = 2.0 * (n + 4) / (n - 4);
  switch (which) {
    case SpaceTimeNorm::M: return {q, 2.0 * n * (n + 4) / (n * n + 16.0)};
    case SpaceTimeNorm::W: return {q, 2.0 * n * (n + 4) / (n * n - 2.0 * n + 8)};
    case SpaceTimeNorm::Z: return {q, q};
    case SpaceTimeNorm::N: return {2.0, 2.0 * n / (n + 2)};
  }
  return {};
}

FitResult fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw PreconditionError("fit_line: need matching samples");
  const double m = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / m;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw PreconditionError("fit_line: degenerate abscissae");
  FitResult f;
  f.exponent = sxy / sxx;
  const double intercept = my - f.exponent * mx;
  f.amplitude = std::exp(intercept);
  double ss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (intercept + f.exponent * x[i]);
    ss += e * e;
  }
  f.residual = std::sqrt(ss / m);
  return f;
}

Rational::Rational(std::int64_t n, std::int64_t d) {
  if (d == 0) throw PreconditionError("rational: zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  const std::int64_t g = std::gcd(n < 0 ? -n : n, d);
  num = g ? n / g : 0;
  den = g ? d / g : 1;
}

Rational operator+(Rational a, Rational b) { return Rational(a.num * b.den + b.num * a.den, a.den * b.den); }
Rational operator-(Rational a, Rational b) { return Rational(a.num * b.den - b.num * a.den, a.den * b.den); }
Rational operator*(Rational a, Rational b) { return Rational(a.num * b.num, a.den * b.den); }
Rational operator/(Rational a, Rational b) {
  if (b.num == 0) throw PreconditionError("rational: division by zero");
  return Rational(a.num * b.den, a.den * b.num);
}
bool operator<(Rational a, Rational b) { return a.num * b.den < b.num * a.den; }

std::string Rational::str() const {
  return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

Rational parse_rational(const std::string& text) {
  auto parse_int = [&](std::string_view s) {
    std::int64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw PreconditionError("not a rational number: '" + text + "'");
    return v;
  };
  const auto slash = text.find('/');
  if (slash == std::string::npos) {
    const auto dot = text.find('.');
    if (dot == std::string::npos) return Rational(parse_int(text));
    // exact decimal: digits after the point set the denominator
    const std::string digits = text.substr(0, dot) + text.substr(dot + 1);
    std::int64_t den = 1;
    for (std::size_t i = dot + 1; i < text.size(); ++i) den *= 10;
    return Rational(parse_int(digits), den);
  }
  return Rational(parse_int(std::string_view(text).substr(0, slash)),
                  parse_int(std::string_view(text).substr(slash + 1)));
}

void validate_b_admissible(int n, const AdmissiblePair& pair) {
  const Rational two(2);
  if (pair.q < two) throw PreconditionError("pair (" + pair.q.str() + ", " + pair.r.str() + "): q >= 2 violated");
  if (pair.r < two) throw PreconditionError("pair (" + pair.q.str() + ", " + pair.r.str() + "): r >= 2 violated");
  const Rational half_n(n, 2);
  if (!(pair.r < half_n))
    throw PreconditionError("pair (" + pair.q.str() + ", " + pair.r.str() + "): r < n/2 violated");
  const Rational lhs = Rational(4) / pair.q + Rational(n) / pair.r;
  if (!(lhs == half_n))
    throw PreconditionError("pair (" + pair.q.str() + ", " + pair.r.str() + "): 4/q + n/r = " + lhs.str() +
                            " but n/2 = " + half_n.str());
}

std::vector<AdmissiblePair> standard_b_pairs(int n) {
  if (n <= 4) throw PreconditionError("standard_b_pairs: need n >= 5");
  auto pair_for = [n](Rational r) { return AdmissiblePair{Rational(4) / (Rational(n, 2) - Rational(n) / r), r}; };
  return {
      AdmissiblePair{Rational(2 * (n + 4), n - 4), Rational(2 * n * (n + 4), n * n + 16)},
      pair_for(Rational(n + 16, 10)),
      pair_for(Rational(3 * n + 8, 10)),
  };
}

}  // namespace nls4
