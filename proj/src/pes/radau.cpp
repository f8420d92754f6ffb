#include "chebfd/pes.hpp"

#include <array>
#include <cmath>

#include <fmt/format.h>

namespace chebfd::pes {

namespace {

using Vec2 = std::array<double, 2>;

double norm(const Vec2 &v) { return std::hypot(v[0], v[1]); }

double angle_between(const Vec2 &a, const Vec2 &b) {
  // atan2 form keeps full precision near 0 and pi
  const double cross = a[0] * b[1] - a[1] * b[0];
  const double dot = a[0] * b[0] + a[1] * b[1];
  return std::atan2(std::abs(cross), dot);
}

void check_masses(const Masses &m) {
  if (!(m.m1 > 0.0 && m.m2 > 0.0 && m.m3 > 0.0))
    throw ConfigError("Radau conversion needs positive masses");
}

// gamma = (1 - alpha) / (m1 + m2), alpha = sqrt(m3 / M)
std::pair<double, double> radau_constants(const Masses &m) {
  const double total = m.m1 + m.m2 + m.m3;
  const double alpha = std::sqrt(m.m3 / total);
  return {alpha, (1.0 - alpha) / (m.m1 + m.m2)};
}

} // namespace

Geometry radau_to_bond(const Geometry &g, const Masses &m) {
  if (g.flavor != Flavor::radau)
    throw DomainError("radau_to_bond expects a Radau geometry");
  check_masses(m);
  g.validate();
  const auto [alpha, gamma] = radau_constants(m);
  // canonical point at the origin
  const Vec2 x1{g.r1, 0.0};
  const Vec2 x2{g.r2 * std::cos(g.angle), g.r2 * std::sin(g.angle)};
  const double s = gamma / alpha;
  const Vec2 x3{-s * (m.m1 * x1[0] + m.m2 * x2[0]),
                -s * (m.m1 * x1[1] + m.m2 * x2[1])};
  const Vec2 b1{x1[0] - x3[0], x1[1] - x3[1]};
  const Vec2 b2{x2[0] - x3[0], x2[1] - x3[1]};
  const double r1 = norm(b1), r2 = norm(b2);
  if (!(r1 > 0.0 && r2 > 0.0))
    throw DomainError("degenerate Radau geometry (zero bond length)");
  return {r1, r2, angle_between(b1, b2), Flavor::bond};
}

Geometry bond_to_radau(const Geometry &g, const Masses &m) {
  if (g.flavor != Flavor::bond)
    throw DomainError("bond_to_radau expects a bond geometry");
  check_masses(m);
  g.validate();
  const auto [alpha, gamma] = radau_constants(m);
  (void)alpha;
  // central atom at the origin
  const Vec2 b1{g.r1, 0.0};
  const Vec2 b2{g.r2 * std::cos(g.angle), g.r2 * std::sin(g.angle)};
  const Vec2 p{gamma * (m.m1 * b1[0] + m.m2 * b2[0]),
               gamma * (m.m1 * b1[1] + m.m2 * b2[1])};
  const Vec2 q1{b1[0] - p[0], b1[1] - p[1]};
  const Vec2 q2{b2[0] - p[0], b2[1] - p[1]};
  const double r1 = norm(q1), r2 = norm(q2);
  if (!(r1 > 0.0 && r2 > 0.0))
    throw DomainError("degenerate bond geometry (atom on the canonical point)");
  return {r1, r2, angle_between(q1, q2), Flavor::radau};
}

} // namespace chebfd::pes
