#include "chebfd/pes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

namespace chebfd::pes {

void Geometry::validate() const {
  if (!(r1 > 0.0) || !(r2 > 0.0) || !std::isfinite(r1) || !std::isfinite(r2))
    throw DomainError(fmt::format("radial coordinates must be positive "
                                  "(r1={}, r2={})",
                                  r1, r2));
  if (!(angle >= 0.0 && angle <= std::numbers::pi))
    throw DomainError(fmt::format("angle {} outside [0, pi]", angle));
}

AdiabaticPair adiabatic_from_diabatic(const DiabaticTriple &t) {
  if (t.v12 == 0.0) // exact, avoids mean -+ half-difference rounding
    return {std::min(t.v11, t.v22), std::max(t.v11, t.v22)};
  const double mean = 0.5 * (t.v11 + t.v22);
  const double root = std::hypot(0.5 * (t.v11 - t.v22), t.v12);
  return {mean - root, mean + root};
}

double gamma_switch(double x, double a) {
  if (!(a > 0.0))
    throw ConfigError(fmt::format("gamma switch needs a > 0, got {}", a));
  if (x <= 0.0)
    return 1.0;
  if (std::isinf(x))
    return 0.0;
  return boost::math::gamma_q(a, x);
}

double SwitchParams::weight(double x) const {
  const double depth = side == Side::above ? x - x0 : x0 - x;
  if (depth <= 0.0)
    return 0.0;
  return 1.0 - gamma_switch(std::abs(b) * depth, a);
}

void SwitchParams::validate(const char *what) const {
  if (!(a > 0.0))
    throw ConfigError(fmt::format("{}: switch parameter a must be > 0", what));
  if (b == 0.0 || !std::isfinite(b))
    throw ConfigError(fmt::format("{}: switch parameter b must be nonzero", what));
}

void Corrections::validate() const {
  short_v11.validate("short-range V11");
  angle_low.validate("angular V12 (low)");
  angle_high.validate("angular V12 (high)");
  long_v11.validate("long-range V11");
  long_v22.validate("long-range V22");
  if (!(angle_low.x0 < angle_high.x0))
    throw ConfigError("angular switch onsets must satisfy low < high");
  if (!(v22_floor > 0.0))
    throw ConfigError("V22 floor radius must be positive");
}

Masses no2_masses() {
  const double o = 15.99491462 * units::amu_me;
  const double n = 14.00307401 * units::amu_me;
  return {o, o, n};
}

void ReferenceParams::validate() const {
  if (!(stretch.depth > 0.0 && stretch.alpha > 0.0 && stretch.re > 0.0))
    throw ConfigError("reference model: Morse parameters must be positive");
  if (!(k1 > 0.0 && k2 > 0.0))
    throw ConfigError("reference model: bend constants must be positive");
  if (!(width > 0.0))
    throw ConfigError("reference model: coupling width must be positive");
}

ReferenceSurface::ReferenceSurface(ReferenceParams p) : p_(p) {
  p_.validate();
  const double cx = std::cos(p_.beta_x);
  const double d1 = cx - std::cos(p_.beta1);
  const double d2 = cx - std::cos(p_.beta2);
  t2_ = p_.k1 * d1 * d1 - p_.k2 * d2 * d2;
}

DiabaticTriple ReferenceSurface::evaluate(double r1, double r2,
                                          double beta) const {
  const double s = p_.stretch(r1) + p_.stretch(r2);
  const double c = std::cos(beta);
  const double d1 = c - std::cos(p_.beta1);
  const double d2 = c - std::cos(p_.beta2);
  const double g = (beta - p_.beta_c) / p_.width;
  return {s + p_.k1 * d1 * d1, s + p_.k2 * d2 * d2 + t2_,
          p_.lambda * (r1 - r2) * std::exp(-g * g)};
}

std::string ReferenceSurface::description() const {
  return fmt::format(
      "reference morse(D={:.17g},a={:.17g},re={:.17g}) k1={:.17g} "
      "beta1={:.17g} k2={:.17g} beta2={:.17g} beta_x={:.17g} "
      "lambda={:.17g} beta_c={:.17g} width={:.17g}",
      p_.stretch.depth, p_.stretch.alpha, p_.stretch.re, p_.k1, p_.beta1,
      p_.k2, p_.beta2, p_.beta_x, p_.lambda, p_.beta_c, p_.width);
}

SurfaceModel::SurfaceModel(std::shared_ptr<const RawSurface> raw,
                           Corrections corrections, double v_diss,
                           MorseCurve v_no, Masses masses,
                           ValidityDomain domain, Geometry equilibrium)
    : raw_(std::move(raw)), corrections_(corrections), v_diss_(v_diss),
      v_no_(v_no), masses_(masses), domain_(domain), equilibrium_(equilibrium) {
  if (!raw_)
    throw ConfigError("surface model needs a raw surface");
  if (!(v_diss_ > 0.0))
    throw ConfigError("dissociation energy must be positive");
  if (!(masses_.m1 > 0.0 && masses_.m2 > 0.0 && masses_.m3 > 0.0))
    throw ConfigError("atomic masses must be positive");
  if (!(domain_.r_min > 0.0 && domain_.r_min < domain_.r_max))
    throw ConfigError("validity domain needs 0 < r_min < r_max");
  corrections_.validate();
}

SurfaceModel SurfaceModel::reference() {
  const ReferenceParams p{};
  return SurfaceModel(std::make_shared<ReferenceSurface>(p), Corrections{},
                      3.226 / units::hartree_ev,
                      MorseCurve{6.5 / units::hartree_ev, 1.5, 2.175},
                      no2_masses(), ValidityDomain{},
                      Geometry{p.stretch.re, p.stretch.re, p.beta1});
}

void SurfaceModel::check_domain(const Geometry &g) const {
  if (g.flavor != Flavor::bond)
    throw DomainError("surface evaluation expects bond coordinates");
  g.validate();
  for (double r : {g.r1, g.r2}) {
    if (r < domain_.r_min)
      throw DomainError(fmt::format("bond length {} below r_min = {}", r,
                                    domain_.r_min));
    if (r > domain_.r_max)
      throw DomainError(fmt::format("bond length {} above r_max = {}", r,
                                    domain_.r_max));
  }
}

namespace {

// Bilinear composition of two one-sided corrections. The two single-sided
// terms are added first so the result is bitwise symmetric under exchange.
double compose(double v, double w1, double t1, double w2, double t2,
               double t12) {
  const double side = w1 * (1.0 - w2) * t1 + w2 * (1.0 - w1) * t2;
  return (1.0 - w1) * (1.0 - w2) * v + side + w1 * w2 * t12;
}

} // namespace

DiabaticTriple SurfaceModel::apply_corrections(const Geometry &g) const {
  check_domain(g);
  const double r1 = g.r1, r2 = g.r2, beta = g.angle;
  DiabaticTriple t = raw_->evaluate(r1, r2, beta);
  if (!corrections_.enabled)
    return t;
  const auto &c = corrections_;

  // (a) short-range wall on V11
  const double s1 = c.short_v11.weight(r1);
  const double s2 = c.short_v11.weight(r2);
  if (s1 > 0.0 || s2 > 0.0) {
    const double x0 = c.short_v11.x0;
    const double wall1 = c.wall_k * (r1 - x0) * (r1 - x0);
    const double wall2 = c.wall_k * (r2 - x0) * (r2 - x0);
    const double rep1 = wall1 + raw_->evaluate(x0, r2, beta).v11;
    const double rep2 = wall2 + raw_->evaluate(r1, x0, beta).v11;
    const double rep12 = wall1 + wall2 + raw_->evaluate(x0, x0, beta).v11;
    t.v11 = compose(t.v11, s1, rep1, s2, rep2, rep12);
  }

  // (b) V22 frozen below the floor radius
  if (r1 < c.v22_floor || r2 < c.v22_floor)
    t.v22 = raw_->evaluate(std::max(r1, c.v22_floor),
                           std::max(r2, c.v22_floor), beta)
                .v22;

  // (d) coupling tapered to zero outside the angular band
  t.v12 *= (1.0 - c.angle_low.weight(beta)) * (1.0 - c.angle_high.weight(beta));

  // (e) long-range dissociation limits
  const double a1 = v_diss_ + v_no_(r2); // r1 -> infinity
  const double a2 = v_diss_ + v_no_(r1);
  const double both = 0.5 * (a1 + a2);
  const double l1 = c.long_v11.weight(r1), l2 = c.long_v11.weight(r2);
  if (l1 > 0.0 || l2 > 0.0) {
    t.v11 = compose(t.v11, l1, a1, l2, a2, both);
    // one channel at the asymptote: the raw coupling grows with |r1 - r2|
    // and would pull the lower sheet below the minimum
    t.v12 *= (1.0 - l1) * (1.0 - l2);
  }
  const double m1 = c.long_v22.weight(r1), m2 = c.long_v22.weight(r2);
  if (m1 > 0.0 || m2 > 0.0)
    t.v22 = compose(t.v22, m1, a1, m2, a2, both);
  return t;
}

AdiabaticPair SurfaceModel::adiabatic(const Geometry &g) const {
  return adiabatic_from_diabatic(apply_corrections(g));
}

double SurfaceModel::ground_energy(const Geometry &g) const {
  return adiabatic(g).ground;
}

double SurfaceModel::ground_energy_radau(double r1, double r2,
                                         double theta) const {
  return ground_energy(radau_to_bond({r1, r2, theta, Flavor::radau}, masses_));
}

std::string SurfaceModel::fingerprint() const {
  const auto &c = corrections_;
  auto sw = [](const SwitchParams &s) {
    return fmt::format("({:.17g},{:.17g},{:.17g},{})", s.a, s.b, s.x0,
                       s.side == Side::above ? "above" : "below");
  };
  return fmt::format(
      "{} | corrections={} short={} wall={:.17g} floor={:.17g} low={} "
      "high={} long11={} long22={} | vdiss={:.17g} vno=({:.17g},{:.17g},"
      "{:.17g}) | masses=({:.17g},{:.17g},{:.17g}) | domain=({:.17g},{:.17g}) "
      "| equilibrium=({:.17g},{:.17g},{:.17g})",
      raw_->description(), c.enabled, sw(c.short_v11), c.wall_k, c.v22_floor,
      sw(c.angle_low), sw(c.angle_high), sw(c.long_v11), sw(c.long_v22),
      v_diss_, v_no_.depth, v_no_.alpha, v_no_.re, masses_.m1, masses_.m2,
      masses_.m3, domain_.r_min, domain_.r_max, equilibrium_.r1,
      equilibrium_.r2, equilibrium_.angle);
}

} // namespace chebfd::pes
