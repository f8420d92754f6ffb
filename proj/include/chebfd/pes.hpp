#pragma once

// Two-state diabatic potential surfaces for an A-B-A triatomic, switching
// corrections, and the adiabatic ground sheet used by the solver.

#include <cmath>
#include <memory>
#include <string>

#include "chebfd/common.hpp"

namespace chebfd::pes {

enum class Flavor { bond, radau };

/// r1, r2 in bohr; angle in radians. Bond flavor: r_i = |x_i - x_B| and the
/// bond angle at the central atom. Radau flavor: distances to the canonical
/// point and the angle subtended there.
struct Geometry {
  double r1 = 0.0;
  double r2 = 0.0;
  double angle = 0.0;
  Flavor flavor = Flavor::bond;

  void validate() const;
};

struct DiabaticTriple {
  double v11 = 0.0;
  double v22 = 0.0;
  double v12 = 0.0;
};

struct AdiabaticPair {
  double ground = 0.0;  // V_X
  double excited = 0.0; // V_A
};

AdiabaticPair adiabatic_from_diabatic(const DiabaticTriple &t);

/// Regularized upper incomplete gamma Q(a, x); 1 for x <= 0.
double gamma_switch(double x, double a);

enum class Side { below, above };

/// Smooth switch on one side of x0. The blend weight is
/// P(a, |b| * depth) = 1 - Q(a, |b| * depth), where depth is the distance
/// from x0 into the active side; it vanishes at x0 and saturates at 1.
struct SwitchParams {
  double a = 1.0;
  double b = 1.0;
  double x0 = 0.0;
  Side side = Side::above;

  double weight(double x) const;
  void validate(const char *what) const;
};

/// End atoms 1 and 2 (identical in A-B-A), central atom 3; electron masses.
struct Masses {
  double m1 = 0.0;
  double m2 = 0.0;
  double m3 = 0.0;
};

Masses no2_masses();

struct MorseCurve {
  double depth = 0.0; // hartree
  double alpha = 1.0; // 1/bohr
  double re = 1.0;    // bohr

  double operator()(double r) const {
    const double e = 1.0 - std::exp(-alpha * (r - re));
    return depth * e * e;
  }
};

/// Raw (uncorrected) diabatic evaluator in bond coordinates.
class RawSurface {
public:
  virtual ~RawSurface() = default;
  virtual DiabaticTriple evaluate(double r1, double r2, double beta) const = 0;
  virtual std::string description() const = 0;
  virtual bool exchange_symmetric() const = 0;
};

/// Analytic two-sheet model: Morse stretches plus bends with different
/// equilibrium angles, crossing along the bend; the coupling is odd under
/// r1 <-> r2 so the sheets touch on the symmetric line at angle beta_x.
struct ReferenceParams {
  MorseCurve stretch{0.118554, 1.6, 2.255};
  double k1 = 0.40;          // hartree
  double beta1 = 134.0 * units::deg;
  double k2 = 0.35;
  double beta2 = 102.0 * units::deg;
  double beta_x = 110.0 * units::deg; // crossing angle on r1 = r2
  double lambda = 0.05;      // hartree / bohr
  double beta_c = 101.0 * units::deg;
  double width = 20.0 * units::deg;

  void validate() const;
};

class ReferenceSurface final : public RawSurface {
public:
  explicit ReferenceSurface(ReferenceParams p);
  DiabaticTriple evaluate(double r1, double r2, double beta) const override;
  std::string description() const override;
  bool exchange_symmetric() const override { return true; }
  const ReferenceParams &params() const { return p_; }
  double v22_offset() const { return t2_; }

private:
  ReferenceParams p_;
  double t2_ = 0.0;
};

struct Corrections {
  bool enabled = true;
  SwitchParams short_v11{1.1, -30.0, 2.08, Side::below};
  double wall_k = 6.00;     // hartree / bohr^2
  double v22_floor = 1.50;  // bohr; V22 frozen below this radius
  SwitchParams angle_low{2.0, 20.0, 71.0 * units::deg, Side::below};
  SwitchParams angle_high{2.0, 20.0, 131.0 * units::deg, Side::above};
  SwitchParams long_v11{3.5, 6.34902, 3.00, Side::above};
  SwitchParams long_v22{2.0, 2.09979, 3.00, Side::above};

  void validate() const;
};

struct ValidityDomain {
  double r_min = 0.5;
  double r_max = 30.0;
};

class SurfaceModel {
public:
  SurfaceModel(std::shared_ptr<const RawSurface> raw, Corrections corrections,
               double v_diss, MorseCurve v_no, Masses masses,
               ValidityDomain domain = {}, Geometry equilibrium = {});

  /// Shipped reference model with the NO2 constants.
  static SurfaceModel reference();

  DiabaticTriple apply_corrections(const Geometry &g) const;
  AdiabaticPair adiabatic(const Geometry &g) const;
  double ground_energy(const Geometry &g) const;
  /// Ground energy for a Radau geometry, converted with the model masses.
  double ground_energy_radau(double r1, double r2, double theta) const;

  bool exchange_symmetric() const { return raw_->exchange_symmetric(); }
  const Masses &masses() const { return masses_; }
  double v_diss() const { return v_diss_; }
  const MorseCurve &v_no() const { return v_no_; }
  const Corrections &corrections() const { return corrections_; }
  const ValidityDomain &domain() const { return domain_; }
  /// Declared equilibrium (bond coordinates); r1 == 0 when undeclared.
  const Geometry &equilibrium() const { return equilibrium_; }
  const RawSurface &raw() const { return *raw_; }

  /// Stable text description of every parameter (feeds content hashes).
  std::string fingerprint() const;

private:
  void check_domain(const Geometry &g) const;

  std::shared_ptr<const RawSurface> raw_;
  Corrections corrections_;
  double v_diss_;
  MorseCurve v_no_;
  Masses masses_;
  ValidityDomain domain_;
  Geometry equilibrium_;
};

Geometry radau_to_bond(const Geometry &g, const Masses &m);
Geometry bond_to_radau(const Geometry &g, const Masses &m);

} // namespace chebfd::pes
