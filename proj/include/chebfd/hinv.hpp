#pragma once

// Filter-diagonalization harmonic inversion of a Chebyshev correlation
// sequence c_n = sum_k d_k cos(n w_k).
//
// The window basis is Psi_j = sum_{n<M} cos(n phi_j) xi_n at equally spaced
// phi_j. The overlap and Hamiltonian matrices <Psi_j|T_p(H)|Psi_k> are
// assembled from c_n alone, with closed-form geometric sums obtained by
// writing each cosine as a pair of complex exponentials. The partial sums
// for every grid frequency come from a handful of FFTs of the sequence, so
// a window costs O(L^2 + L^3) once the engine is built. The generalized
// eigenproblem is reduced by truncating the small-eigenvalue directions of
// the overlap matrix (a Rayleigh-Ritz step on the filtered subspace).

#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "chebfd/common.hpp"

namespace chebfd::hinv {

/// Affine map between true energies and the Chebyshev interval [-1, 1].
struct SpectralScaling {
  double shift = 0.0;
  double half_width = 1.0;

  double energy(double scaled) const { return shift + half_width * scaled; }
  double scaled(double e) const { return (e - shift) / half_width; }
};

struct Window {
  double e_min = 0.0; // hartree
  double e_max = 0.0;
  int basis_size = 0;
};

struct SpectralLine {
  double omega = 0.0;     // radians, in (0, pi)
  double energy = 0.0;    // hartree
  double amplitude = 0.0; // d_k
  double error = 0.0;     // hartree
  double residual = 0.0;  // ||(H - E) psi||, scaled units
  Parity parity = Parity::none;
  int window_id = -1;
  bool converged = true;
};

struct InversionOptions {
  double overlap_threshold = 1e-12;  // relative eigenvalue cut on U0
  double residual_threshold = 1e-4;  // scaled; larger residual => spurious
};

/// Result of inverting one window. `rejected` windows carry a diagnostic
/// and no lines.
struct WindowResult {
  std::vector<SpectralLine> lines;
  int rank = 0;
  int unresolved = 0; // in-window Ritz values failing the residual gate
  bool rejected = false;
  std::string diagnostic;
};

class FilterDiagonalizer {
public:
  /// `grid_size` F fixes the basis frequencies phi = 2 pi l / F. The basis
  /// length is M = c.size()/2 - 1 so that T_2 matrix elements are available.
  FilterDiagonalizer(std::span<const double> c, SpectralScaling scaling,
                     std::size_t grid_size, InversionOptions options = {});

  std::size_t grid_size() const { return grid_size_; }
  std::size_t basis_length() const { return m_; }
  double spacing() const;
  const SpectralScaling &scaling() const { return scaling_; }

  /// Inverts the window spanned by grid frequencies [l_lo, l_hi].
  WindowResult invert_range(std::size_t l_lo, std::size_t l_hi,
                            int window_id = 0) const;

  /// Inverts the grid frequencies covered by an energy window.
  WindowResult invert(const Window &w, int window_id = 0) const;

  /// Grid index range covered by an energy window.
  std::pair<std::size_t, std::size_t> index_range(const Window &w) const;

  struct Matrices;
  /// Exposes U0, U1 and the H^2 matrix for a basis of grid indices (tests).
  Matrices matrices(std::span<const std::size_t> grid_indices) const;

private:
  struct FrequencyData;
  FrequencyData frequency_data(std::size_t l) const;
  FrequencyData direct_data(double omega) const;
  double resonant_amplitude(std::span<const std::size_t> idx,
                            std::span<const double> b, double omega) const;
  std::complex<double> prefix(std::size_t l, long s, int weighted) const;
  std::complex<double> range_sum(std::size_t l, long lo, long hi,
                                 int weighted) const;
  std::complex<double> unit_power(std::size_t l, long s) const;

  std::vector<double> c_;
  SpectralScaling scaling_;
  std::size_t grid_size_ = 0;
  std::size_t m_ = 0;
  InversionOptions options_;
  long base_lo_ = 0;
  long base_hi_ = 0;
  // FFT-evaluated prefix sums sum_{s<=base} c_s x^s and sum s c_s x^s.
  std::vector<std::complex<double>> p0_lo_, p0_hi_, p1_lo_, p1_hi_;
};

struct FilterDiagonalizer::Matrices {
  std::vector<double> u0, u1, uh2, overlap_vector; // row-major L x L, L
  std::size_t size = 0;
};

/// Single-window convenience: the basis spacing is width_in_omega / L.
std::vector<SpectralLine> harmonic_invert(std::span<const double> c,
                                          const SpectralScaling &scaling,
                                          const Window &w,
                                          const InversionOptions &options = {},
                                          int window_id = 0);

/// Equal-width windows in omega on a shared frequency grid.
struct WindowPlan {
  std::size_t grid_size = 0;
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  std::vector<Window> windows;
};

struct PlanOptions {
  int basis_size = 120;
  double overlap = 0.3;         // fraction of each window shared with next
  double spacing_factor = 1.0;  // basis spacing in units of pi / M
};

WindowPlan plan_windows(double e_lo, double e_hi, const SpectralScaling &s,
                        std::size_t n_coeffs, const PlanOptions &options);

struct LevelList {
  std::vector<SpectralLine> lines; // ascending energy
  std::map<std::string, std::string> provenance;
  std::vector<std::string> warnings;

  std::vector<double> energies() const;
  std::vector<double> energies(Parity p) const;
};

struct MergeOptions {
  double tolerance = 1e-9;      // hartree
  double amplitude_floor = 1e-10; // relative to c0
  double c0 = 1.0;
};

/// Unifies duplicate lines from overlapping windows (the smaller error
/// estimate wins), drops near-zero amplitudes, reports coverage gaps inside
/// [e_lo, e_hi].
LevelList merge_and_dedupe(std::vector<SpectralLine> lines,
                           std::span<const Window> windows, double e_lo,
                           double e_hi, const MergeOptions &options);

struct LineConvergence {
  double error = 0.0;
  bool converged = false;
};

/// |E_full - E_half| for lines matched between a full-length and a
/// half-length inversion. Matching uses half the local line spacing.
std::vector<LineConvergence> convergence_error(
    std::span<const SpectralLine> full, std::span<const SpectralLine> half);

/// Runs every window of a plan over the engine and merges the result.
LevelList invert_plan(const FilterDiagonalizer &engine, const WindowPlan &plan,
                      double e_lo, double e_hi, const MergeOptions &merge,
                      Parity parity);

} // namespace chebfd::hinv
