#include "chebfd/hamiltonian.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

namespace chebfd::ham {

namespace {

void check_length(std::size_t got, std::size_t want, const char *what) {
  if (got != want)
    throw ConfigError(fmt::format("{} has length {}, grid has {} points", what,
                                  got, want));
}

} // namespace

ScaledHamiltonian::ScaledHamiltonian(
    std::shared_ptr<const dvr::TruncatedGrid> grid, double radial_mass,
    bool include_kinetic)
    : grid_(std::move(grid)), mass_(radial_mass), kinetic_(include_kinetic) {
  if (!grid_)
    throw ConfigError("Hamiltonian needs a grid");
  if (!(mass_ > 0.0))
    throw ConfigError("Hamiltonian needs a positive radial mass");
  build_lines();
  const auto &pts = grid_->points();
  const auto &r1 = grid_->basis1().points;
  const auto &r2 = grid_->basis2().points;
  rot_.resize(pts.size());
  for (std::size_t p = 0; p < pts.size(); ++p) {
    const double a = r1[static_cast<std::size_t>(pts[p].i1)];
    const double b = r2[static_cast<std::size_t>(pts[p].i2)];
    rot_[p] = 1.0 / (2.0 * mass_ * a * a) + 1.0 / (2.0 * mass_ * b * b);
  }
  const auto &v = grid_->potential();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  vmin_ = *lo;
  vmax_ = *hi;
  bmax_ = *std::max_element(rot_.begin(), rot_.end());
}

void ScaledHamiltonian::build_lines() {
  const auto &pts = grid_->points();
  const auto n1 = static_cast<std::size_t>(grid_->n1());
  const auto n2 = static_cast<std::size_t>(grid_->n2());
  const auto n3 = static_cast<std::size_t>(grid_->n3());
  // Points are lexicographic in (i1, i2, i3), so filling buckets in point
  // order leaves every line sorted by its varying index.
  auto build = [&](Lines &out, std::size_t keys, auto key) {
    std::vector<std::int32_t> count(keys + 1, 0);
    for (const auto &g : pts)
      ++count[key(g) + 1];
    for (std::size_t k = 0; k < keys; ++k)
      count[k + 1] += count[k];
    std::vector<std::int32_t> fill(count.begin(), count.end() - 1);
    std::vector<std::int32_t> members(pts.size());
    for (std::size_t p = 0; p < pts.size(); ++p)
      members[static_cast<std::size_t>(fill[key(pts[p])]++)] =
          static_cast<std::int32_t>(p);
    // compact to non-empty lines
    out.offsets.assign(1, 0);
    out.members = std::move(members);
    out.line_of.assign(pts.size(), -1);
    for (std::size_t k = 0; k < keys; ++k) {
      if (count[k + 1] == count[k])
        continue;
      const auto line = static_cast<std::int32_t>(out.offsets.size() - 1);
      for (auto j = count[k]; j < count[k + 1]; ++j)
        out.line_of[static_cast<std::size_t>(
            out.members[static_cast<std::size_t>(j)])] = line;
      out.offsets.push_back(count[k + 1]);
    }
  };
  build(l1_, n2 * n3, [&](const dvr::GridPoint &g) {
    return static_cast<std::size_t>(g.i2) * n3 + static_cast<std::size_t>(g.i3);
  });
  build(l2_, n1 * n3, [&](const dvr::GridPoint &g) {
    return static_cast<std::size_t>(g.i1) * n3 + static_cast<std::size_t>(g.i3);
  });
  build(l3_, n1 * n2, [&](const dvr::GridPoint &g) {
    return static_cast<std::size_t>(g.i1) * n2 + static_cast<std::size_t>(g.i2);
  });
}

double ScaledHamiltonian::point_value(std::size_t p, const double *v) const {
  const auto &pts = grid_->points();
  const double diag = grid_->potential()[p] * v[p];
  if (!kinetic_)
    return diag;
  const auto &g = pts[p];
  const auto &k1 = grid_->basis1().kinetic;
  const auto &k2 = grid_->basis2().kinetic;
  const auto &j2 = grid_->angular().j2;
  // symmetric matrices: column access is contiguous
  const double *c1 = k1.data() + static_cast<std::ptrdiff_t>(g.i1) * k1.rows();
  const double *c2 = k2.data() + static_cast<std::ptrdiff_t>(g.i2) * k2.rows();
  const double *c3 = j2.data() + static_cast<std::ptrdiff_t>(g.i3) * j2.rows();

  double t1 = 0.0, t2 = 0.0, t3 = 0.0;
  {
    const auto line = static_cast<std::size_t>(l1_.line_of[p]);
    for (auto j = l1_.offsets[line]; j < l1_.offsets[line + 1]; ++j) {
      const auto q = static_cast<std::size_t>(l1_.members[static_cast<std::size_t>(j)]);
      t1 += c1[pts[q].i1] * v[q];
    }
  }
  {
    const auto line = static_cast<std::size_t>(l2_.line_of[p]);
    for (auto j = l2_.offsets[line]; j < l2_.offsets[line + 1]; ++j) {
      const auto q = static_cast<std::size_t>(l2_.members[static_cast<std::size_t>(j)]);
      t2 += c2[pts[q].i2] * v[q];
    }
  }
  {
    const auto line = static_cast<std::size_t>(l3_.line_of[p]);
    for (auto j = l3_.offsets[line]; j < l3_.offsets[line + 1]; ++j) {
      const auto q = static_cast<std::size_t>(l3_.members[static_cast<std::size_t>(j)]);
      t3 += c3[pts[q].i3] * v[q];
    }
  }
  // (t1 + t2) is symmetric under the exchange, which keeps parity exact
  return (t1 + t2) + rot_[p] * t3 + diag;
}

void ScaledHamiltonian::apply(std::span<const double> v,
                              std::span<double> y) const {
  check_length(v.size(), size(), "input vector");
  check_length(y.size(), size(), "output vector");
  const auto t0 = std::chrono::steady_clock::now();
  const auto n = static_cast<std::ptrdiff_t>(size());
  const double *vp = v.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < n; ++p)
    y[static_cast<std::size_t>(p)] = point_value(static_cast<std::size_t>(p), vp);
  applications_.fetch_add(1, std::memory_order_relaxed);
  nanoseconds_.fetch_add(
      static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                     std::chrono::steady_clock::now() - t0)
                                     .count()),
      std::memory_order_relaxed);
}

void ScaledHamiltonian::apply_scaled(std::span<const double> v,
                                     std::span<double> y, double alpha,
                                     double beta,
                                     std::span<const double> w) const {
  if (!scaled_)
    throw NumericalError("Hamiltonian has no spectral scaling yet");
  check_length(v.size(), size(), "input vector");
  check_length(y.size(), size(), "output vector");
  if (beta != 0.0)
    check_length(w.size(), size(), "accumulation vector");
  const auto t0 = std::chrono::steady_clock::now();
  const auto n = static_cast<std::ptrdiff_t>(size());
  const double s = scaling_.shift, h = scaling_.half_width;
  const double *vp = v.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ip = 0; ip < n; ++ip) {
    const auto p = static_cast<std::size_t>(ip);
    const double hs = (point_value(p, vp) - s * vp[p]) / h;
    y[p] = beta == 0.0 ? alpha * hs : alpha * hs + beta * w[p];
  }
  applications_.fetch_add(1, std::memory_order_relaxed);
  nanoseconds_.fetch_add(
      static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                     std::chrono::steady_clock::now() - t0)
                                     .count()),
      std::memory_order_relaxed);
}

void ScaledHamiltonian::apply_reference(std::span<const double> v,
                                        std::span<double> y) const {
  check_length(v.size(), size(), "input vector");
  check_length(y.size(), size(), "output vector");
  const auto &g = *grid_;
  const auto &k1 = g.basis1().kinetic;
  const auto &k2 = g.basis2().kinetic;
  const auto &j2 = g.angular().j2;
  const auto &r1 = g.basis1().points;
  const auto &r2 = g.basis2().points;
  for (std::size_t p = 0; p < g.size(); ++p) {
    const auto [i1, i2, i3] = g.points()[p];
    double acc = g.potential()[p] * v[p];
    if (kinetic_) {
      for (int j = 0; j < g.n1(); ++j)
        if (const auto q = g.index(j, i2, i3); q >= 0)
          acc += k1(i1, j) * v[static_cast<std::size_t>(q)];
      for (int j = 0; j < g.n2(); ++j)
        if (const auto q = g.index(i1, j, i3); q >= 0)
          acc += k2(i2, j) * v[static_cast<std::size_t>(q)];
      const double a = r1[static_cast<std::size_t>(i1)];
      const double b = r2[static_cast<std::size_t>(i2)];
      const double rot = 0.5 / (mass_ * a * a) + 0.5 / (mass_ * b * b);
      for (int j = 0; j < g.n3(); ++j)
        if (const auto q = g.index(i1, i2, j); q >= 0)
          acc += rot * j2(i3, j) * v[static_cast<std::size_t>(q)];
    }
    y[p] = acc;
  }
}

void ScaledHamiltonian::set_scaling(const SpectralScaling &s) {
  if (!(s.half_width > 0.0) || !std::isfinite(s.shift))
    throw NumericalError("spectral scaling needs a positive half width");
  scaling_ = s;
  scaled_ = true;
}

OperatorCounters ScaledHamiltonian::counters() const {
  return {applications_.load(), 1e-9 * static_cast<double>(nanoseconds_.load())};
}

SpectralBounds estimate_spectral_bounds(const ScaledHamiltonian &h,
                                        const BoundsOptions &opts) {
  if (!(opts.margin >= 1e-3 && opts.margin < 0.5))
    throw ConfigError("spectral margin must lie in [1e-3, 0.5)");
  SpectralBounds out;
  out.e_lo = h.potential_min();
  double hi = h.potential_max();
  if (h.include_kinetic()) {
    const auto &g = h.grid();
    auto lmax = [](const Eigen::MatrixXd &m) {
      return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                 m, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .maxCoeff();
    };
    const double n3 = g.n3();
    hi += lmax(g.basis1().kinetic) + lmax(g.basis2().kinetic) +
          h.rotational_factor_max() * n3 * (n3 - 1.0);
  }
  out.analytic_hi = hi;

  const std::size_t n = h.size();
  const int steps =
      static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(std::max(opts.probe_iterations, 0)), n));
  if (steps > 0) {
    // plain Lanczos; theta_max + |f_k| is the usual practical upper bound
    // (no reorthogonalization: ghosts only repeat converged Ritz values)
    std::vector<double> q = random_parity_vector(h.grid(), Parity::none, opts.seed);
    std::vector<double> q_prev(n, 0.0), w(n);
    std::vector<double> alpha, beta;
    double b_prev = 0.0;
    double theta_prev = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < steps; ++k) {
      h.apply(q, w);
      const double a = compensated_dot(w, q);
      for (std::size_t i = 0; i < n; ++i)
        w[i] -= a * q[i] + b_prev * q_prev[i];
      const double b = std::sqrt(compensated_dot(w, w));
      alpha.push_back(a);
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k + 1, k + 1);
      for (int i = 0; i <= k; ++i) {
        t(i, i) = alpha[static_cast<std::size_t>(i)];
        if (i > 0)
          t(i, i - 1) = t(i - 1, i) = beta[static_cast<std::size_t>(i - 1)];
      }
      const double theta =
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(t, Eigen::EigenvaluesOnly)
              .eigenvalues()
              .maxCoeff();
      // theta + b is only trusted once the top Ritz value has settled; on
      // the first steps it is little more than mean + standard deviation.
      const bool exhausted = b <= 1e-14 * std::max(1.0, std::abs(theta));
      const bool settled =
          k + 1 >= std::min(8, steps) &&
          theta - theta_prev <= 1e-3 * std::max(theta - out.e_lo, 1e-300);
      if (exhausted || settled)
        hi = std::min(hi, theta + b);
      out.probe_history.push_back(hi);
      theta_prev = theta;
      if (exhausted)
        break;
      beta.push_back(b);
      for (std::size_t i = 0; i < n; ++i) {
        q_prev[i] = q[i];
        q[i] = w[i] / b;
      }
      b_prev = b;
    }
  }
  out.e_hi = hi;
  if (!(out.e_hi > out.e_lo)) {
    // single eigenvalue; open a small interval around it
    const double pad = 1e-6 * std::max(1.0, std::abs(out.e_lo));
    out.e_lo -= pad;
    out.e_hi += pad;
  }
  out.scaling.shift = 0.5 * (out.e_lo + out.e_hi);
  out.scaling.half_width = 0.5 * (out.e_hi - out.e_lo) / (1.0 - opts.margin);
  return out;
}

std::vector<double> random_parity_vector(const dvr::TruncatedGrid &grid,
                                         Parity parity, std::uint64_t seed) {
  const std::size_t n = grid.size();
  if (parity != Parity::none && !grid.symmetric())
    throw ConfigError("parity projection needs an exchange-symmetric grid");
  std::mt19937_64 rng(seed);
  auto draw = [&rng] {
    return static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
  };
  std::vector<double> v(n, 0.0);
  if (parity == Parity::none) {
    for (auto &x : v)
      x = draw();
  } else {
    const auto &ex = grid.exchange();
    bool any_pair = false;
    for (std::size_t p = 0; p < n; ++p) {
      const auto q = static_cast<std::size_t>(ex[p]);
      if (q < p)
        continue;
      const double x = draw();
      if (q == p) {
        v[p] = parity == Parity::even ? x : 0.0;
      } else {
        any_pair = true;
        v[p] = x;
        v[q] = parity == Parity::even ? x : -x;
      }
    }
    if (parity == Parity::odd && !any_pair)
      throw NumericalError("grid has no off-diagonal pairs; no odd states");
  }
  const double norm = std::sqrt(compensated_dot(v, v));
  if (!(norm > 0.0))
    throw NumericalError("random start vector vanished");
  const double inv = 1.0 / norm;
  for (auto &x : v)
    x *= inv;
  return v;
}

std::vector<double> exchange_image(const dvr::TruncatedGrid &grid,
                                   std::span<const double> v) {
  if (!grid.symmetric())
    throw ConfigError("exchange image needs an exchange-symmetric grid");
  check_length(v.size(), grid.size(), "vector");
  std::vector<double> out(v.size());
  const auto &ex = grid.exchange();
  for (std::size_t p = 0; p < v.size(); ++p)
    out[p] = v[static_cast<std::size_t>(ex[p])];
  return out;
}

Eigen::MatrixXd dense_matrix(const ScaledHamiltonian &h) {
  const auto n = static_cast<Eigen::Index>(h.size());
  Eigen::MatrixXd m(n, n);
  std::vector<double> e(static_cast<std::size_t>(n), 0.0), col(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    e[static_cast<std::size_t>(j)] = 1.0;
    h.apply(e, col);
    e[static_cast<std::size_t>(j)] = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      m(i, j) = col[static_cast<std::size_t>(i)];
  }
  return m;
}

} // namespace chebfd::ham
