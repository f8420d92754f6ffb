#pragma once

// One-dimensional DVR bases and the pruned 3D grid in Radau coordinates.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chebfd/pes.hpp"

namespace chebfd::dvr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct RadialGridSpec {
  double r_min = 0.0;
  double r_max = 0.0;
  int n = 0;

  double spacing() const { return (r_max - r_min) / (n - 1); }
  void validate() const;
};

struct AngularGridSpec {
  int n3 = 1;
  void validate() const;
};

struct SincDvr {
  std::vector<double> points;
  Matrix kinetic; // -(1/2m) d^2/dr^2
};

SincDvr build_sinc_dvr(const RadialGridSpec &spec, double mass);

struct LegendreDvr {
  std::vector<double> nodes;   // x_k = cos(theta_k), ascending
  std::vector<double> weights; // Gauss-Legendre weights
  std::vector<double> theta;   // arccos(x_k), descending
  Matrix j2;                   // angular momentum squared on the grid
};

LegendreDvr build_legendre_dvr(const AngularGridSpec &spec);

/// Energy-truncated 1D eigenbasis, re-expressed as a potential-optimized DVR
/// (eigenvectors of the position operator inside the retained space) so the
/// 3D potential stays diagonal.
struct ContractedRadialBasis {
  RadialGridSpec spec;
  int n_b = 0;
  std::vector<double> eigenvalues; // retained 1D energies, ascending
  Matrix transform;                // n x n_b, primitive -> eigenfunctions
  Matrix rotation;                 // n_b x n_b, eigenfunctions -> POD points
  std::vector<double> points;      // n_b optimized radial points, ascending
  Matrix kinetic;                  // n_b x n_b kinetic matrix at the points
};

ContractedRadialBasis contract_radial(const SincDvr &dvr,
                                      const RadialGridSpec &spec,
                                      const std::vector<double> &ref_potential,
                                      double cutoff);

double tmax_radial(double mass, double dr);
/// R2 may be +infinity.
double tmax_angular(double mass, double r1, double r2, double dtheta);

/// 1D profile whose turning points set the radial extents: `cut` holds the
/// other coordinates at the reference geometry, `relaxed` minimizes over
/// them (so the box encloses the whole region below V_cut).
enum class SizingProfile { cut, relaxed };

struct SizingOptions {
  SizingProfile profile = SizingProfile::relaxed;
  double margin = 0.15;      // turning-point padding, fraction of the range
  double r_floor = 0.8;      // smallest Radau radius allowed (bohr)
  double r_ceiling = 8.0;    // largest Radau radius allowed (bohr)
  double kinetic_factor = 1.0; // T_max target as a multiple of V_cut - V_min
  int min_radial = 8;
  int min_angular = 4;
};

struct GridSizing {
  RadialGridSpec radial;
  AngularGridSpec angular;
  double r0 = 0.0;     // reference Radau radius
  double theta0 = 0.0; // reference Radau angle
  double t_radial = 0.0;
  double t_angular = 0.0;
  std::vector<std::string> warnings;
};

/// Radau image of the model's declared equilibrium.
struct ReferenceGeometry {
  double r0 = 0.0;
  double theta0 = 0.0;
};

ReferenceGeometry reference_geometry(const pes::SurfaceModel &model);

GridSizing size_grids_for_vcut(double v_cut, const pes::SurfaceModel &model,
                               const ReferenceGeometry &ref,
                               const SizingOptions &opts = {});

/// 1D cut of the ground potential along R1 at (R2, Theta) = (r0, theta0).
std::vector<double> radial_cut(const pes::SurfaceModel &model,
                               const std::vector<double> &points,
                               const ReferenceGeometry &ref);

struct GridPoint {
  std::int32_t i1, i2, i3;
};

class TruncatedGrid {
public:
  TruncatedGrid(ContractedRadialBasis b1, ContractedRadialBasis b2,
                LegendreDvr angular, std::vector<GridPoint> points,
                std::vector<double> potential, double v_cut, bool symmetric,
                std::string model_fingerprint);

  std::size_t size() const { return points_.size(); }
  const std::vector<GridPoint> &points() const { return points_; }
  const std::vector<double> &potential() const { return potential_; }
  const ContractedRadialBasis &basis1() const { return b1_; }
  const ContractedRadialBasis &basis2() const { return b2_; }
  const LegendreDvr &angular() const { return ang_; }
  double v_cut() const { return v_cut_; }
  bool symmetric() const { return symmetric_; }
  int n1() const { return b1_.n_b; }
  int n2() const { return b2_.n_b; }
  int n3() const { return static_cast<int>(ang_.nodes.size()); }

  /// Retained index of direct-product point (i1, i2, i3) or -1.
  std::int64_t index(int i1, int i2, int i3) const;
  /// Flattened direct-product index of a retained point.
  std::int64_t product_index(std::size_t p) const;
  /// Image of each retained point under R1 <-> R2 (symmetric grids only).
  const std::vector<std::int32_t> &exchange() const { return exchange_; }

  std::uint64_t content_hash() const { return hash_; }
  const std::string &model_fingerprint() const { return fingerprint_; }

private:
  ContractedRadialBasis b1_, b2_;
  LegendreDvr ang_;
  std::vector<GridPoint> points_;
  std::vector<double> potential_;
  std::vector<std::int32_t> dense_;
  std::vector<std::int32_t> exchange_;
  double v_cut_;
  bool symmetric_;
  std::string fingerprint_;
  std::uint64_t hash_ = 0;
};

/// Keeps exactly the points with V <= v_cut, in lexicographic (i1, i2, i3)
/// order. For exchange-symmetric models with identical radial bases only
/// i1 <= i2 is evaluated and mirrored, so the retained set is exactly
/// symmetric.
TruncatedGrid prune_grid(const ContractedRadialBasis &b1,
                         const ContractedRadialBasis &b2,
                         const LegendreDvr &angular,
                         const pes::SurfaceModel &model, double v_cut);

} // namespace chebfd::dvr
