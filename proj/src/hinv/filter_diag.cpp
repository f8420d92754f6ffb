#include "chebfd/hinv.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <tuple>

#include <Eigen/Dense>
#include <fftw3.h>
#include <fmt/format.h>

namespace chebfd::hinv {

using cplx = std::complex<double>;

namespace {

constexpr int kMaxShift = 2; // T_0, T_1, T_2 matrix elements
constexpr int kShifts = 2 * kMaxShift + 1;
constexpr long kDirectReach = 16;

// Evaluates sum_s a_s x_l^s for all x_l = exp(2 pi i l / F) by folding the
// coefficients modulo F and running one backward FFT.
std::vector<cplx> fft_polynomial(std::span<const double> coeffs,
                                 std::size_t f) {
  std::vector<cplx> in(f, cplx{0.0, 0.0}), out(f);
  for (std::size_t s = 0; s < coeffs.size(); ++s)
    in[s % f] += coeffs[s];
  fftw_plan plan = fftw_plan_dft_1d(
      static_cast<int>(f), reinterpret_cast<fftw_complex *>(in.data()),
      reinterpret_cast<fftw_complex *>(out.data()), FFTW_BACKWARD,
      FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  return out;
}

} // namespace

struct FilterDiagonalizer::FrequencyData {
  cplx x, xm;
  std::array<cplx, kShifts> a, b, e, dp, dm;
  double overlap = 0.0; // <xi_0|Psi>
};

FilterDiagonalizer::FilterDiagonalizer(std::span<const double> c,
                                       SpectralScaling scaling,
                                       std::size_t grid_size,
                                       InversionOptions options)
    : c_(c.begin(), c.end()), scaling_(scaling), grid_size_(grid_size),
      options_(options) {
  if (c_.size() < 40)
    throw NumericalError("harmonic inversion needs at least 40 coefficients");
  if (grid_size_ < 8)
    throw NumericalError("frequency grid too small");
  m_ = c_.size() / 2 - 1;
  const long m = static_cast<long>(m_);
  base_lo_ = m - 4;
  base_hi_ = 2 * m - 5;

  std::vector<double> lo0(c_.begin(), c_.begin() + base_lo_ + 1);
  std::vector<double> hi0(c_.begin(), c_.begin() + base_hi_ + 1);
  std::vector<double> lo1(lo0.size()), hi1(hi0.size());
  for (std::size_t s = 0; s < lo1.size(); ++s)
    lo1[s] = static_cast<double>(s) * lo0[s];
  for (std::size_t s = 0; s < hi1.size(); ++s)
    hi1[s] = static_cast<double>(s) * hi0[s];
  p0_lo_ = fft_polynomial(lo0, grid_size_);
  p0_hi_ = fft_polynomial(hi0, grid_size_);
  p1_lo_ = fft_polynomial(lo1, grid_size_);
  p1_hi_ = fft_polynomial(hi1, grid_size_);
}

double FilterDiagonalizer::spacing() const {
  return 2.0 * std::numbers::pi / static_cast<double>(grid_size_);
}

cplx FilterDiagonalizer::unit_power(std::size_t l, long s) const {
  const long long f = static_cast<long long>(grid_size_);
  long long k = (static_cast<long long>(l) * s) % f;
  if (k < 0)
    k += f;
  return std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k) /
                             static_cast<double>(f));
}

// sum_{s=0}^{S} w(s) c_s x_l^s, w = 1 or s.
cplx FilterDiagonalizer::prefix(std::size_t l, long s_max, int weighted) const {
  if (s_max < 0)
    return {0.0, 0.0};
  cplx acc{0.0, 0.0};
  long start = 0;
  if (s_max >= base_hi_) {
    acc = weighted ? p1_hi_[l] : p0_hi_[l];
    start = base_hi_ + 1;
  } else if (s_max >= base_lo_) {
    acc = weighted ? p1_lo_[l] : p0_lo_[l];
    start = base_lo_ + 1;
  }
  if (s_max - start >= kDirectReach)
    throw std::logic_error("prefix sum requested far from an FFT base");
  for (long s = start; s <= s_max; ++s) {
    const double w = weighted ? static_cast<double>(s) : 1.0;
    acc += w * c_[static_cast<std::size_t>(s)] * unit_power(l, s);
  }
  return acc;
}

// sum_{s=lo}^{hi} w(s) c_|s| x^s with c_{-s} = c_s.
cplx FilterDiagonalizer::range_sum(std::size_t l, long lo, long hi,
                                   int weighted) const {
  if (lo > hi)
    return {0.0, 0.0};
  cplx acc{0.0, 0.0};
  if (lo < 0) {
    const long u_lo = std::max(1L, -hi);
    const long u_hi = -lo;
    if (u_lo <= u_hi) {
      const cplx pos = prefix(l, u_hi, weighted) - prefix(l, u_lo - 1, weighted);
      acc += weighted ? -std::conj(pos) : std::conj(pos);
    }
  }
  const long p_lo = std::max(lo, 0L);
  if (p_lo <= hi)
    acc += prefix(l, hi, weighted) - prefix(l, p_lo - 1, weighted);
  return acc;
}

FilterDiagonalizer::FrequencyData
FilterDiagonalizer::frequency_data(std::size_t l) const {
  FrequencyData fd;
  const long m = static_cast<long>(m_);
  fd.x = unit_power(l, 1);
  fd.xm = unit_power(l, m);
  for (int q = -kMaxShift; q <= kMaxShift; ++q) {
    const int i = q + kMaxShift;
    const cplx s_a = range_sum(l, q, m - 1 + q, 0);
    const cplx w_a = range_sum(l, q, m - 1 + q, 1);
    const cplx s_b = range_sum(l, m + q, 2 * m - 2 + q, 0);
    const cplx w_b = range_sum(l, m + q, 2 * m - 2 + q, 1);
    const cplx s_e = range_sum(l, q - m + 1, q - 1, 0);
    const cplx w_e = range_sum(l, q - m + 1, q - 1, 1);
    const cplx xmq = unit_power(l, -q);
    fd.a[i] = xmq * s_a;
    fd.b[i] = unit_power(l, 1 - m - q) * s_b;
    fd.e[i] = unit_power(l, q) * std::conj(s_e);
    fd.dp[i] = xmq * (w_a + static_cast<double>(1 - q) * s_a +
                      static_cast<double>(2 * m - 1 + q) * s_b - w_b);
    fd.dm[i] = xmq * (static_cast<double>(m + q) * s_a - w_a +
                      static_cast<double>(m - q) * s_e + w_e);
  }
  fd.overlap = fd.a[kMaxShift].real();
  return fd;
}

namespace {

using FD = FilterDiagonalizer;

struct PairTerms {
  double u0, u1, u2;
};

// K_+(q) and K_-(q), q = i - kMaxShift, where
// K_s(q) = sum_{n,m<M} cos(n a) cos(m b) c_|n + s m + q|.
template <class FData>
std::pair<double, double> shift_terms(const FData &p, const FData &r, int i,
                                      bool diagonal) {
  const cplx x = p.x, y = r.x, yb = std::conj(r.x);
  const cplx xy_m = p.xm * r.xm, xyb_m = p.xm * std::conj(r.xm);
  cplx gp_same, gm_conj;
  if (diagonal) {
    gp_same = p.dp[i];
    gm_conj = p.dm[i];
  } else {
    gp_same =
        (y * r.a[i] - x * p.a[i] + r.xm * p.b[i] - p.xm * r.b[i]) / (y - x);
    gm_conj = (p.a[i] - xyb_m * r.a[i] + std::conj(r.e[i]) -
               xyb_m * std::conj(p.e[i])) /
              (1.0 - x * yb);
  }
  const cplx gp_conj = (yb * std::conj(r.a[i]) - x * p.a[i] +
                        std::conj(r.xm) * p.b[i] - p.xm * std::conj(r.b[i])) /
                       (yb - x);
  const cplx gm_same = (p.a[i] - xy_m * std::conj(r.a[i]) + r.e[i] -
                        xy_m * std::conj(p.e[i])) /
                       (1.0 - x * y);
  return {0.5 * (gp_same + gp_conj).real(), 0.5 * (gm_same + gm_conj).real()};
}

template <class FData>
PairTerms pair_terms(const FData &p, const FData &r, bool diagonal) {
  std::array<double, kShifts> kp{}, km{};
  for (int i = 0; i < kShifts; ++i)
    std::tie(kp[i], km[i]) = shift_terms(p, r, i, diagonal);
  const int z = kMaxShift;
  PairTerms t;
  t.u0 = 0.5 * (kp[z] + km[z]);
  t.u1 = 0.25 * (kp[z + 1] + kp[z - 1] + km[z + 1] + km[z - 1]);
  t.u2 = 0.25 * (kp[z + 2] + kp[z - 2] + km[z + 2] + km[z - 2]);
  return t;
}

// sum_{n<M} cos(n a) cos(n b)
double dirichlet(std::size_t m, double a, double b) {
  auto s = [m](double t) {
    const double half = 0.5 * t;
    if (std::abs(std::sin(half)) < 1e-300)
      return static_cast<double>(m);
    const double md = static_cast<double>(m);
    return std::sin(md * half) * std::cos((md - 1.0) * half) / std::sin(half);
  };
  return 0.5 * (s(a - b) + s(a + b));
}

} // namespace

// Shift-0 data at an arbitrary frequency by direct summation.
FilterDiagonalizer::FrequencyData
FilterDiagonalizer::direct_data(double omega) const {
  FrequencyData fd;
  const long m = static_cast<long>(m_);
  const int z = kMaxShift;
  fd.x = std::polar(1.0, omega);
  fd.xm = std::polar(1.0, static_cast<double>(m) * omega);
  cplx a{0.0, 0.0}, hi{0.0, 0.0}, e{0.0, 0.0};
  cplx pw{1.0, 0.0};
  for (long s = 0; s <= 2 * m - 2; ++s) {
    if (s % 256 == 0)
      pw = std::polar(1.0, static_cast<double>(s) * omega);
    const cplx t = c_[static_cast<std::size_t>(s)] * pw;
    if (s < m)
      a += t;
    else
      hi += t;
    if (s >= 1 && s < m)
      e += t;
    pw *= fd.x;
  }
  fd.a[z] = a;
  fd.b[z] = std::polar(1.0, static_cast<double>(1 - m) * omega) * hi;
  fd.e[z] = e;
  return fd;
}

// d_k = <Psi(w_k)|psi_k>^2 / D(w_k, w_k)^2. Contributions of other lines to
// the Ritz vector are damped by the Dirichlet filter, which makes this
// estimate far less sensitive to residual errors than <xi_0|psi_k>^2.
double FilterDiagonalizer::resonant_amplitude(std::span<const std::size_t> idx,
                                              std::span<const double> b,
                                              double omega) const {
  const double md = static_cast<double>(m_);
  double z = omega;
  for (auto l : idx)
    if (md * std::abs(spacing() * static_cast<double>(l) - omega) < 1e-3) {
      z = omega + 1e-2 / md;
      break;
    }
  const FrequencyData probe = direct_data(z);
  double proj = 0.0;
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const FrequencyData g = frequency_data(idx[j]);
    const auto [kp, km] = shift_terms(g, probe, kMaxShift, false);
    proj += b[j] * 0.5 * (kp + km);
  }
  const double dz = dirichlet(m_, z, omega);
  return (proj / dz) * (proj / dz);
}

FilterDiagonalizer::Matrices
FilterDiagonalizer::matrices(std::span<const std::size_t> idx) const {
  const std::size_t n = idx.size();
  std::vector<FrequencyData> fd;
  fd.reserve(n);
  for (auto l : idx) {
    if (l == 0 || 2 * l >= grid_size_)
      throw NumericalError("basis frequency must lie strictly inside (0, pi)");
    fd.push_back(frequency_data(l));
  }
  Matrices out;
  out.size = n;
  out.u0.assign(n * n, 0.0);
  out.u1.assign(n * n, 0.0);
  out.uh2.assign(n * n, 0.0);
  out.overlap_vector.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    out.overlap_vector[j] = fd[j].overlap;
    for (std::size_t k = j; k < n; ++k) {
      const PairTerms t = pair_terms(fd[j], fd[k], j == k);
      const double h2 = 0.5 * (t.u2 + t.u0);
      out.u0[j * n + k] = out.u0[k * n + j] = t.u0;
      out.u1[j * n + k] = out.u1[k * n + j] = t.u1;
      out.uh2[j * n + k] = out.uh2[k * n + j] = h2;
    }
  }
  return out;
}

WindowResult FilterDiagonalizer::invert_range(std::size_t l_lo,
                                              std::size_t l_hi,
                                              int window_id) const {
  WindowResult result;
  if (l_lo == 0 || l_hi < l_lo || 2 * l_hi >= grid_size_) {
    result.rejected = true;
    result.diagnostic = "window outside the scaled spectral range";
    return result;
  }
  std::vector<std::size_t> idx;
  for (std::size_t l = l_lo; l <= l_hi; ++l)
    idx.push_back(l);
  const Matrices mats = matrices(idx);
  const auto n = static_cast<Eigen::Index>(mats.size);
  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const Mat> u0(mats.u0.data(), n, n);
  const Eigen::Map<const Mat> u1(mats.u1.data(), n, n);
  const Eigen::Map<const Mat> uh2(mats.uh2.data(), n, n);
  const Eigen::MatrixXd uh2_abs = uh2.cwiseAbs();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gram(u0);
  const Eigen::VectorXd &sv = gram.eigenvalues();
  const double smax = sv.cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n; ++i)
    if (sv(i) > options_.overlap_threshold * smax)
      keep.push_back(i);
  result.rank = static_cast<int>(keep.size());
  if (keep.empty()) {
    result.rejected = true;
    result.diagnostic = "overlap matrix numerically zero; no signal in window";
    return result;
  }
  if (keep.size() == static_cast<std::size_t>(n)) {
    result.rejected = true;
    result.diagnostic = fmt::format(
        "window saturated (rank {} of {} basis functions); widen basis or "
        "shrink window",
        keep.size(), n);
    return result;
  }
  Eigen::MatrixXd w(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k)
    w.col(static_cast<Eigen::Index>(k)) =
        gram.eigenvectors().col(keep[k]) / std::sqrt(sv(keep[k]));
  Eigen::MatrixXd hr = w.transpose() * u1 * w;
  hr = 0.5 * (hr + hr.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(hr);
  const Eigen::MatrixXd b = w * ritz.eigenvectors();

  const double phi_lo = spacing() * static_cast<double>(l_lo);
  const double phi_hi = spacing() * static_cast<double>(l_hi);
  for (Eigen::Index k = 0; k < b.cols(); ++k) {
    const double lambda = ritz.eigenvalues()(k);
    if (!(lambda > -1.0 && lambda < 1.0))
      continue;
    const double omega = std::acos(lambda);
    if (!(omega > phi_lo && omega < phi_hi))
      continue;
    const Eigen::VectorXd bk = b.col(k);
    const double r2 = bk.dot(uh2 * bk) - lambda * lambda;
    // r2 is a difference of O(1) numbers built from coefficients of size
    // |b|; when |b| is large (noise directions) it carries no information.
    const double noise = 16.0 * std::numeric_limits<double>::epsilon() *
                         static_cast<double>(n) *
                         bk.cwiseAbs().dot(uh2_abs * bk.cwiseAbs());
    const double thr2 = options_.residual_threshold * options_.residual_threshold;
    const double residual = std::sqrt(std::max(r2, 0.0) + noise);
    if (noise > thr2 || residual > options_.residual_threshold) {
      ++result.unresolved;
      continue;
    }
    SpectralLine line;
    line.omega = omega;
    line.energy = scaling_.energy(lambda);
    line.amplitude = resonant_amplitude(
        idx, std::span<const double>(bk.data(), static_cast<std::size_t>(n)),
        omega);
    line.residual = residual;
    line.error = scaling_.half_width * residual;
    line.window_id = window_id;
    result.lines.push_back(line);
  }
  std::sort(result.lines.begin(), result.lines.end(),
            [](const auto &a, const auto &b) { return a.energy < b.energy; });
  return result;
}

std::pair<std::size_t, std::size_t>
FilterDiagonalizer::index_range(const Window &w) const {
  const double s_hi = std::clamp(scaling_.scaled(w.e_max), -1.0, 1.0);
  const double s_lo = std::clamp(scaling_.scaled(w.e_min), -1.0, 1.0);
  const double om_lo = std::acos(s_hi);
  const double om_hi = std::acos(s_lo);
  const double h = spacing();
  auto lo = static_cast<std::size_t>(std::ceil(om_lo / h - 1e-9));
  auto hi = static_cast<std::size_t>(std::floor(om_hi / h + 1e-9));
  lo = std::max<std::size_t>(lo, 1);
  hi = std::min<std::size_t>(hi, (grid_size_ - 1) / 2);
  return {lo, hi};
}

WindowResult FilterDiagonalizer::invert(const Window &w, int window_id) const {
  if (!(w.e_min < w.e_max))
    throw NumericalError("window requires e_min < e_max");
  const double s_lo = scaling_.scaled(w.e_min);
  const double s_hi = scaling_.scaled(w.e_max);
  if (s_lo <= -1.0 || s_hi >= 1.0)
    throw NumericalError("window outside the scaled spectral range [-1, 1]");
  const auto [lo, hi] = index_range(w);
  return invert_range(lo, hi, window_id);
}

std::vector<SpectralLine> harmonic_invert(std::span<const double> c,
                                          const SpectralScaling &scaling,
                                          const Window &w,
                                          const InversionOptions &options,
                                          int window_id) {
  if (w.basis_size < 2)
    throw NumericalError("window needs at least two basis functions");
  const double s_lo = scaling.scaled(w.e_min);
  const double s_hi = scaling.scaled(w.e_max);
  if (!(w.e_min < w.e_max) || s_lo <= -1.0 || s_hi >= 1.0)
    throw NumericalError("window outside the scaled spectral range [-1, 1]");
  const double width = std::acos(s_lo) - std::acos(s_hi);
  const double h = width / static_cast<double>(w.basis_size - 1);
  const auto f = static_cast<std::size_t>(std::llround(2.0 * std::numbers::pi / h));
  FilterDiagonalizer engine(c, scaling, f, options);
  WindowResult r = engine.invert(w, window_id);
  if (r.rejected)
    throw NumericalError("window rejected: " + r.diagnostic);
  return r.lines;
}

} // namespace chebfd::hinv
