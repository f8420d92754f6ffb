#pragma once

// Spectral fluctuation statistics: unfolding, nearest-neighbour spacing
// distributions and the Delta_3 rigidity.

#include <map>
#include <span>
#include <string>
#include <vector>

namespace chebfd::stats {

enum class UnfoldMethod { none, polynomial, local_median };

std::string to_string(UnfoldMethod m);
UnfoldMethod unfold_method_from_string(const std::string &s);

struct UnfoldOptions {
  UnfoldMethod method = UnfoldMethod::polynomial;
  int degree = 5;    // polynomial staircase fit
  int window = 100;  // local median window (levels)
};

struct UnfoldedLevels {
  std::vector<double> energies;
  std::vector<double> unfolded; // mean spacing exactly 1 over the full range
  UnfoldMethod method = UnfoldMethod::none;
  std::map<std::string, double> parameters;
};

/// Needs at least 10 strictly increasing levels; otherwise throws
/// ConfigError listing the offending pairs.
UnfoldedLevels unfold(std::span<const double> levels, const UnfoldOptions &opts = {});

struct NnsdResult {
  std::vector<double> edges;   // bins + 1
  std::vector<double> density; // normalized to unit area
  std::size_t spacings = 0;
  double sse_poisson = 0.0;    // least-squares misfit against e^{-s}
  double sse_wigner = 0.0;     // against (pi/2) s exp(-pi s^2 / 4)
  double ks_poisson = 0.0;     // Kolmogorov-Smirnov distances
  double ks_wigner = 0.0;
  std::string better;          // "poisson" or "wigner"
};

double poisson_pdf(double s);
double wigner_pdf(double s);

NnsdResult nnsd(const UnfoldedLevels &u, int bins = 40, double s_max = 4.0);

/// Exact Delta_3 of the staircase of `levels` on [x0, x1]: N(x) counts
/// levels <= x, and the line a x + b minimizing the mean square deviation is
/// found from analytic piecewise moments. Needs >= 2 levels in [x0, x1].
double delta3(std::span<const double> levels, double x0, double x1);

struct SlidingPoint {
  double center = 0.0; // energy in the middle of the window
  double value = 0.0;
  std::size_t first = 0;
};

/// Delta_3 over windows of `window` consecutive levels moved by `step`.
std::vector<SlidingPoint> sliding_delta3(std::span<const double> levels,
                                         int window = 100, int step = 10);

struct AveragedPoint {
  double L = 0.0;
  double mean = 0.0;
  double rms = 0.0;       // spread of the window values
  std::size_t windows = 0;
  double poisson = 0.0;   // L / 15
  double goe = 0.0;       // ln(L) / pi^2 + const, through 0.46 at L = 100
};

/// <Delta_3(L)> over windows [x, x + L] of the unfolded levels, x running
/// through [lo, hi - L] in steps of `step` mean spacings.
std::vector<AveragedPoint> averaged_delta3(std::span<const double> unfolded,
                                           double lo, double hi,
                                           std::span<const double> L_values,
                                           double step = 1.0);

double goe_delta3_reference(double L);

} // namespace chebfd::stats
