#pragma once

// Small grids of the reference model shared by several test files.

#include <algorithm>
#include <memory>

#include "chebfd/dvr.hpp"

namespace fixtures {

inline const chebfd::pes::SurfaceModel &model() {
  static const auto m = chebfd::pes::SurfaceModel::reference();
  return m;
}

struct TinySpec {
  int n = 14;              // primitive radial points
  double below = 0.5;      // extent below r0 (bohr)
  double above = 0.7;      // extent above r0
  double contract = 0.08;  // 1D cutoff above the cut minimum (hartree)
  int n3 = 16;
  double v_cut = 0.06;     // above the potential minimum (hartree)
};

inline std::shared_ptr<const chebfd::dvr::TruncatedGrid>
tiny_grid(const TinySpec &s = {}) {
  using namespace chebfd::dvr;
  const auto ref = reference_geometry(model());
  const RadialGridSpec spec{ref.r0 - s.below, ref.r0 + s.above, s.n};
  const auto sinc = build_sinc_dvr(spec, model().masses().m1);
  const auto cut = radial_cut(model(), sinc.points, ref);
  const double cmin = *std::min_element(cut.begin(), cut.end());
  const auto b = contract_radial(sinc, spec, cut, cmin + s.contract);
  const auto ang = build_legendre_dvr({s.n3});
  const double vmin = model().ground_energy_radau(ref.r0, ref.r0, ref.theta0);
  return std::make_shared<const TruncatedGrid>(
      prune_grid(b, b, ang, model(), vmin + s.v_cut));
}

} // namespace fixtures
