#include "chebfd/dvr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/legendre.hpp>
#include <fmt/format.h>

namespace chebfd::dvr {

namespace {

constexpr double pi = std::numbers::pi;

// Makes the largest-magnitude entry of every column positive, so bases do
// not depend on the sign choices of the eigensolver.
void fix_column_signs(Matrix &m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    Eigen::Index arg = 0;
    m.col(j).cwiseAbs().maxCoeff(&arg);
    if (m(arg, j) < 0.0)
      m.col(j) = -m.col(j);
  }
}

} // namespace

void RadialGridSpec::validate() const {
  if (!(r_min < r_max))
    throw ConfigError(fmt::format("radial grid needs r_min < r_max ({} >= {})",
                                  r_min, r_max));
  if (n < 2)
    throw ConfigError("radial grid needs at least 2 points");
}

void AngularGridSpec::validate() const {
  if (n3 < 1)
    throw ConfigError("angular grid needs at least 1 point");
}

SincDvr build_sinc_dvr(const RadialGridSpec &spec, double mass) {
  spec.validate();
  if (!(mass > 0.0))
    throw ConfigError("sinc DVR needs a positive mass");
  const double dr = spec.spacing();
  SincDvr out;
  out.points.resize(static_cast<std::size_t>(spec.n));
  for (int i = 0; i < spec.n; ++i)
    out.points[static_cast<std::size_t>(i)] = spec.r_min + i * dr;
  out.kinetic.resize(spec.n, spec.n);
  const double scale = 1.0 / (mass * dr * dr);
  for (int i = 0; i < spec.n; ++i)
    for (int j = 0; j < spec.n; ++j) {
      if (i == j) {
        out.kinetic(i, j) = scale * pi * pi / 6.0;
      } else {
        const double d = i - j;
        const double sign = ((i - j) % 2 == 0) ? 1.0 : -1.0;
        out.kinetic(i, j) = scale * sign / (d * d);
      }
    }
  return out;
}

LegendreDvr build_legendre_dvr(const AngularGridSpec &spec) {
  spec.validate();
  const int n = spec.n3;
  LegendreDvr out;
  const auto zeros = boost::math::legendre_p_zeros<double>(n);
  for (double z : zeros) {
    out.nodes.push_back(z);
    if (z != 0.0)
      out.nodes.push_back(-z);
  }
  std::sort(out.nodes.begin(), out.nodes.end());
  if (static_cast<int>(out.nodes.size()) != n)
    throw NumericalError("Legendre root count mismatch");
  for (double x : out.nodes) {
    const double dp = boost::math::legendre_p_prime(n, x);
    out.weights.push_back(2.0 / ((1.0 - x * x) * dp * dp));
    out.theta.push_back(std::acos(x));
  }
  // L(j, k) = sqrt(w_k) * normalized P_j(x_k); orthogonal for Gauss nodes.
  Matrix l(n, n);
  for (int k = 0; k < n; ++k) {
    const double x = out.nodes[static_cast<std::size_t>(k)];
    double p0 = 1.0, p1 = x;
    for (int j = 0; j < n; ++j) {
      double pj;
      if (j == 0) {
        pj = p0;
      } else if (j == 1) {
        pj = p1;
      } else {
        pj = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = pj;
      }
      l(j, k) = std::sqrt(out.weights[static_cast<std::size_t>(k)] *
                          (2.0 * j + 1.0) / 2.0) *
                pj;
    }
  }
  Vector jj(n);
  for (int j = 0; j < n; ++j)
    jj(j) = static_cast<double>(j) * (j + 1.0);
  out.j2 = l.transpose() * jj.asDiagonal() * l;
  out.j2 = 0.5 * (out.j2 + out.j2.transpose()).eval();
  return out;
}

ContractedRadialBasis contract_radial(const SincDvr &dvr,
                                      const RadialGridSpec &spec,
                                      const std::vector<double> &ref_potential,
                                      double cutoff) {
  const auto n = static_cast<Eigen::Index>(dvr.points.size());
  if (static_cast<Eigen::Index>(ref_potential.size()) != n)
    throw ConfigError("reference potential length differs from grid size");
  Matrix h = dvr.kinetic;
  for (Eigen::Index i = 0; i < n; ++i)
    h(i, i) += ref_potential[static_cast<std::size_t>(i)];
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
  if (eig.info() != Eigen::Success)
    throw NumericalError("1D radial eigensolver failed");
  Eigen::Index nb = 0;
  while (nb < n && eig.eigenvalues()(nb) <= cutoff)
    ++nb;
  if (nb == 0)
    throw NumericalError(fmt::format(
        "contraction cutoff {:.6g} hartree lies below the 1D ground state "
        "{:.6g}; the contracted basis would be empty",
        cutoff, eig.eigenvalues()(0)));

  ContractedRadialBasis out;
  out.spec = spec;
  out.n_b = static_cast<int>(nb);
  out.transform = eig.eigenvectors().leftCols(nb);
  fix_column_signs(out.transform);
  for (Eigen::Index i = 0; i < nb; ++i)
    out.eigenvalues.push_back(eig.eigenvalues()(i));

  const Eigen::Map<const Vector> r(dvr.points.data(), n);
  Matrix x = out.transform.transpose() * r.asDiagonal() * out.transform;
  x = 0.5 * (x + x.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> pos(x);
  if (pos.info() != Eigen::Success)
    throw NumericalError("position-operator eigensolver failed");
  Matrix dvr_functions = out.transform * pos.eigenvectors();
  fix_column_signs(dvr_functions);
  out.rotation = out.transform.transpose() * dvr_functions;
  for (Eigen::Index i = 0; i < nb; ++i)
    out.points.push_back(pos.eigenvalues()(i));
  out.kinetic = dvr_functions.transpose() * dvr.kinetic * dvr_functions;
  out.kinetic = 0.5 * (out.kinetic + out.kinetic.transpose()).eval();
  return out;
}

double tmax_radial(double mass, double dr) {
  if (!(mass > 0.0 && dr > 0.0))
    throw ConfigError("tmax_radial needs positive mass and spacing");
  return pi * pi / (2.0 * mass * dr * dr);
}

double tmax_angular(double mass, double r1, double r2, double dtheta) {
  if (!(mass > 0.0 && r1 > 0.0 && r2 > 0.0 && dtheta > 0.0))
    throw ConfigError("tmax_angular needs positive arguments");
  const double inv = 1.0 / (r1 * r1) + (std::isinf(r2) ? 0.0 : 1.0 / (r2 * r2));
  return pi * pi / (2.0 * mass) * inv / (dtheta * dtheta);
}

} // namespace chebfd::dvr
