#pragma once

// Matrix-free J=0 Hamiltonian in Radau coordinates on a pruned DVR grid:
//   H = K1 (x) 1 + 1 (x) K2 + B(R1, R2) j^2 + V
// with B = 1/(2 m R1^2) + 1/(2 m R2^2). K1, K2 are the contracted radial
// kinetic matrices; all three act along lines of the pruned grid.

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "chebfd/dvr.hpp"
#include "chebfd/hinv.hpp"

namespace chebfd::ham {

using hinv::SpectralScaling;

struct OperatorCounters {
  std::uint64_t applications = 0;
  double seconds = 0.0;
};

class ScaledHamiltonian {
public:
  /// `include_kinetic = false` keeps only the potential (for tests).
  ScaledHamiltonian(std::shared_ptr<const dvr::TruncatedGrid> grid,
                    double radial_mass, bool include_kinetic = true);

  const dvr::TruncatedGrid &grid() const { return *grid_; }
  std::size_t size() const { return grid_->size(); }
  double radial_mass() const { return mass_; }
  bool include_kinetic() const { return kinetic_; }

  /// y = H v (unscaled, hartree). OpenMP over points; every output entry is
  /// summed in a fixed order so results do not depend on the thread count.
  void apply(std::span<const double> v, std::span<double> y) const;

  /// y = alpha * Hs v + beta * w, Hs = (H - shift) / half_width.
  /// `w` may alias `y`; `v` must not.
  void apply_scaled(std::span<const double> v, std::span<double> y,
                    double alpha = 1.0, double beta = 0.0,
                    std::span<const double> w = {}) const;

  /// Straightforward serial version using direct-product index lookups.
  void apply_reference(std::span<const double> v, std::span<double> y) const;

  const SpectralScaling &scaling() const { return scaling_; }
  void set_scaling(const SpectralScaling &s);
  bool scaled() const { return scaled_; }

  double potential_min() const { return vmin_; }
  double potential_max() const { return vmax_; }
  /// max over retained lines of 1/(2mR1^2) + 1/(2mR2^2)
  double rotational_factor_max() const { return bmax_; }

  OperatorCounters counters() const;

private:
  struct Lines {
    std::vector<std::int32_t> offsets; // CSR over lines
    std::vector<std::int32_t> members; // retained points, ascending varying index
    std::vector<std::int32_t> line_of; // per point
  };
  void build_lines();
  double point_value(std::size_t p, const double *v) const;

  std::shared_ptr<const dvr::TruncatedGrid> grid_;
  double mass_;
  bool kinetic_;
  Lines l1_, l2_, l3_;
  std::vector<double> rot_; // per point B(R1, R2)
  double vmin_ = 0.0, vmax_ = 0.0, bmax_ = 0.0;
  SpectralScaling scaling_;
  bool scaled_ = false;
  mutable std::atomic<std::uint64_t> applications_{0};
  mutable std::atomic<std::uint64_t> nanoseconds_{0};
};

struct BoundsOptions {
  int probe_iterations = 30; // Lanczos steps; 0 = analytic bounds only
  double margin = 0.02;      // delta: scaled spectrum inside [-1+d, 1-d]
  std::uint64_t seed = 7;
};

struct SpectralBounds {
  double e_lo = 0.0;        // hartree, lower bound of the spectrum
  double e_hi = 0.0;        // hartree, upper bound
  double analytic_hi = 0.0; // before probe tightening
  std::vector<double> probe_history; // upper bound after each probe step
  SpectralScaling scaling;  // with the margin applied
};

/// E_lo = min V (the kinetic terms are positive semidefinite). E_hi is the
/// smaller of max V + lambda_max(K1) + lambda_max(K2) + max B * n3(n3-1)
/// and the Lanczos estimate theta_max + beta_k, taken as a running minimum.
SpectralBounds estimate_spectral_bounds(const ScaledHamiltonian &h,
                                        const BoundsOptions &opts = {});

/// Unit vector with uniform(-1, 1) entries, exactly (anti)symmetrized under
/// R1 <-> R2 for even/odd parity; `none` skips the symmetrization.
std::vector<double> random_parity_vector(const dvr::TruncatedGrid &grid,
                                         Parity parity, std::uint64_t seed);

/// Applies the exchange permutation: (P v)[p] = v[exchange[p]].
std::vector<double> exchange_image(const dvr::TruncatedGrid &grid,
                                   std::span<const double> v);

/// Dense matrix of the unscaled operator, column by column from apply().
Eigen::MatrixXd dense_matrix(const ScaledHamiltonian &h);

} // namespace chebfd::ham
