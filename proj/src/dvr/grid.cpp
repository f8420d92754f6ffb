#include "chebfd/dvr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

namespace chebfd::dvr {

ReferenceGeometry reference_geometry(const pes::SurfaceModel &model) {
  const auto &eq = model.equilibrium();
  if (!(eq.r1 > 0.0))
    throw ConfigError("surface model declares no equilibrium geometry");
  const auto rad = pes::bond_to_radau(eq, model.masses());
  return {0.5 * (rad.r1 + rad.r2), rad.angle};
}

std::vector<double> radial_cut(const pes::SurfaceModel &model,
                               const std::vector<double> &points,
                               const ReferenceGeometry &ref) {
  std::vector<double> v;
  v.reserve(points.size());
  for (double r : points)
    v.push_back(model.ground_energy_radau(r, ref.r0, ref.theta0));
  return v;
}

namespace {

// Smallest potential over (r2, theta) at fixed r1: a coarse scan over the
// sizing box, then a shrinking pattern search from the best sample.
double relaxed_potential(const pes::SurfaceModel &model, double r1,
                         const SizingOptions &opts) {
  auto v = [&](double r2, double t) {
    if (r2 < opts.r_floor || r2 > opts.r_ceiling || t <= 0.0 ||
        t >= std::numbers::pi)
      return std::numeric_limits<double>::infinity();
    try {
      return model.ground_energy_radau(r1, r2, t);
    } catch (const DomainError &) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const double dr = 0.05, dt = 2.0 * units::deg;
  double best = std::numeric_limits<double>::infinity(), r2 = 0.0, t = 0.0;
  for (double x = opts.r_floor; x <= opts.r_ceiling; x += dr)
    for (double y = 0.5 * dt; y < std::numbers::pi; y += dt)
      if (const double e = v(x, y); e < best) {
        best = e;
        r2 = x;
        t = y;
      }
  double hr = dr, ht = dt;
  while (hr > 1e-5) {
    bool moved = false;
    for (const auto [a, b] : {std::pair{hr, 0.0}, {-hr, 0.0}, {0.0, ht}, {0.0, -ht}})
      if (const double e = v(r2 + a, t + b); e < best) {
        best = e;
        r2 += a;
        t += b;
        moved = true;
      }
    if (!moved) {
      hr *= 0.5;
      ht *= 0.5;
    }
  }
  return best;
}

// Distance from r0 along direction dir (+1/-1) where the 1D profile first
// exceeds v_cut; bounded by limit. Returns (radius, reached).
std::pair<double, bool> turning_point(const pes::SurfaceModel &model,
                                      const ReferenceGeometry &ref,
                                      const SizingOptions &opts, double v_cut,
                                      int dir, double limit) {
  const bool relaxed = opts.profile == SizingProfile::relaxed;
  auto v = [&](double r) {
    if (relaxed)
      return relaxed_potential(model, r, opts);
    try {
      return model.ground_energy_radau(r, ref.r0, ref.theta0);
    } catch (const DomainError &) {
      return std::numeric_limits<double>::infinity();
    }
  };
  // the relaxed profile is costly; a micro-bohr turning point is plenty
  const double step = relaxed ? 0.05 : 0.01;
  const int iterations = relaxed ? 16 : 60;
  double inside = ref.r0;
  for (;;) {
    double next = inside + dir * step;
    if ((dir > 0 && next >= limit) || (dir < 0 && next <= limit)) {
      if (v(limit) <= v_cut)
        return {limit, false};
      next = limit;
    }
    if (v(next) > v_cut) {
      double lo = inside, hi = next; // lo inside, hi outside
      for (int it = 0; it < iterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        (v(mid) > v_cut ? hi : lo) = mid;
      }
      return {hi, true};
    }
    inside = next;
  }
}

} // namespace

GridSizing size_grids_for_vcut(double v_cut, const pes::SurfaceModel &model,
                               const ReferenceGeometry &ref,
                               const SizingOptions &opts) {
  const double v_min = model.ground_energy_radau(ref.r0, ref.r0, ref.theta0);
  if (!(v_cut > v_min))
    throw NumericalError(fmt::format(
        "V_cut = {:.8g} hartree is not above the potential minimum {:.8g}",
        v_cut, v_min));
  if (!(opts.r_floor > 0.0 && opts.r_floor < ref.r0 && ref.r0 < opts.r_ceiling))
    throw ConfigError("sizing bounds must bracket the reference radius");
  GridSizing out;
  out.r0 = ref.r0;
  out.theta0 = ref.theta0;
  const auto [r_in, in_ok] =
      turning_point(model, ref, opts, v_cut, -1, opts.r_floor);
  const auto [r_out, out_ok] =
      turning_point(model, ref, opts, v_cut, +1, opts.r_ceiling);
  if (!in_ok)
    out.warnings.push_back(fmt::format(
        "inner turning point below the floor; radial grid starts at {} bohr",
        opts.r_floor));
  if (!out_ok)
    out.warnings.push_back(fmt::format(
        "outer turning point unreachable (dissociative direction); radial "
        "grid capped at {} bohr",
        opts.r_ceiling));
  const double range = r_out - r_in;
  out.radial.r_min = std::max(opts.r_floor, r_in - opts.margin * range);
  out.radial.r_max = std::min(opts.r_ceiling, r_out + opts.margin * range);

  const double m = model.masses().m1;
  if (!(opts.kinetic_factor > 0.0))
    throw ConfigError("sizing kinetic_factor must be positive");
  const double e = opts.kinetic_factor * (v_cut - v_min);
  const double inf = std::numeric_limits<double>::infinity();
  int n3 = std::max(opts.min_angular,
                    static_cast<int>(std::ceil(std::sqrt(2.0 * m * e) * ref.r0)) - 1);
  while (tmax_angular(m, ref.r0, inf, std::numbers::pi / n3) < e)
    ++n3;
  out.angular.n3 = n3;
  out.t_angular = tmax_angular(m, ref.r0, inf, std::numbers::pi / n3);

  const double dr_target = std::numbers::pi / std::sqrt(2.0 * m * out.t_angular);
  const double width = out.radial.r_max - out.radial.r_min;
  out.radial.n = std::max(opts.min_radial,
                          static_cast<int>(std::ceil(width / dr_target)) + 1);
  out.t_radial = tmax_radial(m, out.radial.spacing());
  return out;
}

TruncatedGrid::TruncatedGrid(ContractedRadialBasis b1, ContractedRadialBasis b2,
                             LegendreDvr angular, std::vector<GridPoint> points,
                             std::vector<double> potential, double v_cut,
                             bool symmetric, std::string model_fingerprint)
    : b1_(std::move(b1)), b2_(std::move(b2)), ang_(std::move(angular)),
      points_(std::move(points)), potential_(std::move(potential)),
      v_cut_(v_cut), symmetric_(symmetric),
      fingerprint_(std::move(model_fingerprint)) {
  if (points_.empty())
    throw NumericalError("truncated grid is empty; raise V_cut");
  if (points_.size() != potential_.size())
    throw std::logic_error("grid point and potential counts differ");
  if (points_.size() > static_cast<std::size_t>(
                           std::numeric_limits<std::int32_t>::max()))
    throw ConfigError("grid too large for 32-bit point indices");
  const std::size_t total = static_cast<std::size_t>(n1()) *
                            static_cast<std::size_t>(n2()) *
                            static_cast<std::size_t>(n3());
  dense_.assign(total, -1);
  for (std::size_t p = 0; p < points_.size(); ++p)
    dense_[static_cast<std::size_t>(product_index(p))] =
        static_cast<std::int32_t>(p);
  if (symmetric_) {
    exchange_.resize(points_.size());
    for (std::size_t p = 0; p < points_.size(); ++p) {
      const auto &g = points_[p];
      const auto q = index(g.i2, g.i1, g.i3);
      if (q < 0)
        throw std::logic_error("symmetric grid lacks an exchange partner");
      exchange_[p] = static_cast<std::int32_t>(q);
    }
  }

  Fnv1a h;
  h.update(std::string_view(fingerprint_));
  h.update(v_cut_);
  for (const auto *b : {&b1_, &b2_}) {
    h.update(b->spec.r_min);
    h.update(b->spec.r_max);
    h.update(static_cast<std::int64_t>(b->spec.n));
    h.update(static_cast<std::int64_t>(b->n_b));
    for (double x : b->points)
      h.update(x);
    h.update(b->kinetic.data(),
             static_cast<std::size_t>(b->kinetic.size()) * sizeof(double));
  }
  for (double x : ang_.nodes)
    h.update(x);
  h.update(points_.data(), points_.size() * sizeof(GridPoint));
  h.update(potential_.data(), potential_.size() * sizeof(double));
  hash_ = h.digest();
}

std::int64_t TruncatedGrid::index(int i1, int i2, int i3) const {
  if (i1 < 0 || i2 < 0 || i3 < 0 || i1 >= n1() || i2 >= n2() || i3 >= n3())
    return -1;
  const std::size_t k =
      (static_cast<std::size_t>(i1) * static_cast<std::size_t>(n2()) +
       static_cast<std::size_t>(i2)) *
          static_cast<std::size_t>(n3()) +
      static_cast<std::size_t>(i3);
  return dense_[k];
}

std::int64_t TruncatedGrid::product_index(std::size_t p) const {
  const auto &g = points_[p];
  return (static_cast<std::int64_t>(g.i1) * n2() + g.i2) * n3() + g.i3;
}

TruncatedGrid prune_grid(const ContractedRadialBasis &b1,
                         const ContractedRadialBasis &b2,
                         const LegendreDvr &angular,
                         const pes::SurfaceModel &model, double v_cut) {
  const int n1 = b1.n_b, n2 = b2.n_b;
  const int n3 = static_cast<int>(angular.nodes.size());
  const bool symmetric = model.exchange_symmetric() && b1.points == b2.points &&
                         b1.kinetic == b2.kinetic;
  const std::size_t total = static_cast<std::size_t>(n1) *
                            static_cast<std::size_t>(n2) *
                            static_cast<std::size_t>(n3);
  std::vector<double> v(total, 0.0);
  auto at = [&](int i1, int i2, int i3) -> double & {
    return v[(static_cast<std::size_t>(i1) * static_cast<std::size_t>(n2) +
              static_cast<std::size_t>(i2)) *
                 static_cast<std::size_t>(n3) +
             static_cast<std::size_t>(i3)];
  };

  std::string failure;
#pragma omp parallel for schedule(dynamic)
  for (int i1 = 0; i1 < n1; ++i1) {
    for (int i2 = symmetric ? i1 : 0; i2 < n2; ++i2)
      for (int i3 = 0; i3 < n3; ++i3) {
        double e;
        try {
          e = model.ground_energy_radau(
              b1.points[static_cast<std::size_t>(i1)],
              b2.points[static_cast<std::size_t>(i2)],
              angular.theta[static_cast<std::size_t>(i3)]);
        } catch (const DomainError &err) {
#pragma omp critical
          failure = fmt::format("potential not evaluable at grid point "
                                "({}, {}, {}): {}",
                                i1, i2, i3, err.what());
          e = std::numeric_limits<double>::quiet_NaN();
        }
        at(i1, i2, i3) = e;
        if (symmetric)
          at(i2, i1, i3) = e;
      }
  }
  if (!failure.empty())
    throw DomainError(failure);

  std::vector<GridPoint> points;
  std::vector<double> potential;
  for (int i1 = 0; i1 < n1; ++i1)
    for (int i2 = 0; i2 < n2; ++i2)
      for (int i3 = 0; i3 < n3; ++i3) {
        const double e = at(i1, i2, i3);
        if (e <= v_cut) {
          points.push_back({i1, i2, i3});
          potential.push_back(e);
        }
      }
  if (points.empty())
    throw NumericalError(fmt::format(
        "no grid point has V <= V_cut = {:.8g} hartree", v_cut));
  return TruncatedGrid(b1, b2, angular, std::move(points), std::move(potential),
                       v_cut, symmetric, model.fingerprint());
}

} // namespace chebfd::dvr
