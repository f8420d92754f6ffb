#include "chebfd/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "chebfd/common.hpp"

namespace chebfd::stats {

namespace {

constexpr double pi = std::numbers::pi;

void check_levels(std::span<const double> e) {
  if (e.size() < 10)
    throw ConfigError(fmt::format("unfolding needs at least 10 levels, got {}",
                                  e.size()));
  std::string bad;
  int count = 0;
  for (std::size_t i = 1; i < e.size(); ++i)
    if (!(e[i] > e[i - 1])) {
      if (count < 10)
        bad += fmt::format(" ({}: {:.12g}, {}: {:.12g})", i - 1, e[i - 1], i, e[i]);
      ++count;
    }
  if (count > 0)
    throw ConfigError(fmt::format("levels not strictly increasing at {} pair(s):{}{}",
                                  count, bad, count > 10 ? " ..." : ""));
}

double median(std::vector<double> v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    m = 0.5 * (m + lo);
  }
  return m;
}

// rescales so that (u_last - u_first) / (n - 1) == 1
void normalize(std::vector<double> &u) {
  const double s = (u.back() - u.front()) / static_cast<double>(u.size() - 1);
  for (auto &x : u)
    x /= s;
}

} // namespace

std::string to_string(UnfoldMethod m) {
  switch (m) {
  case UnfoldMethod::none:
    return "none";
  case UnfoldMethod::polynomial:
    return "polynomial";
  case UnfoldMethod::local_median:
    return "local_median";
  }
  return "?";
}

UnfoldMethod unfold_method_from_string(const std::string &s) {
  if (s == "none")
    return UnfoldMethod::none;
  if (s == "polynomial")
    return UnfoldMethod::polynomial;
  if (s == "local_median")
    return UnfoldMethod::local_median;
  throw ConfigError(fmt::format(
      "unknown unfolding method '{}' (none, polynomial, local_median)", s));
}

UnfoldedLevels unfold(std::span<const double> levels, const UnfoldOptions &opts) {
  check_levels(levels);
  UnfoldedLevels out;
  out.energies.assign(levels.begin(), levels.end());
  out.method = opts.method;
  const std::size_t n = levels.size();
  auto &u = out.unfolded;
  switch (opts.method) {
  case UnfoldMethod::none: {
    // plain rescaling, so unit-spaced input comes back unchanged
    const double s = (levels.back() - levels.front()) / static_cast<double>(n - 1);
    for (double e : levels)
      u.push_back(e / s);
    out.parameters["mean_spacing"] = s;
    break;
  }
  case UnfoldMethod::polynomial: {
    if (opts.degree < 1 || static_cast<std::size_t>(opts.degree) >= n / 2)
      throw ConfigError(fmt::format("polynomial degree {} unsuitable for {} levels",
                                    opts.degree, n));
    const double mid = 0.5 * (levels.front() + levels.back());
    const double half = 0.5 * (levels.back() - levels.front());
    const auto d = opts.degree;
    // Legendre basis on [-1, 1] keeps the fit well conditioned
    auto basis = [d](double x, Eigen::MatrixXd &m, Eigen::Index r) {
      m(r, 0) = 1.0;
      m(r, 1) = x;
      for (int k = 2; k <= d; ++k)
        m(r, k) = ((2.0 * k - 1.0) * x * m(r, k - 1) - (k - 1.0) * m(r, k - 2)) / k;
    };
    Eigen::MatrixXd a(static_cast<Eigen::Index>(n), d + 1);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      basis((levels[i] - mid) / half, a, static_cast<Eigen::Index>(i));
      y(static_cast<Eigen::Index>(i)) = static_cast<double>(i) + 0.5;
    }
    const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd fit = a * coef;
    for (std::size_t i = 0; i < n; ++i)
      u.push_back(fit(static_cast<Eigen::Index>(i)));
    for (std::size_t i = 1; i < n; ++i)
      if (!(u[i] > u[i - 1]))
        throw NumericalError(fmt::format(
            "polynomial staircase of degree {} is not monotone near level {} "
            "({:.10g}); lower the degree",
            d, i, levels[i]));
    out.parameters["degree"] = d;
    break;
  }
  case UnfoldMethod::local_median: {
    const auto w = static_cast<std::size_t>(opts.window);
    if (w < 2 || w >= n)
      throw ConfigError(fmt::format("median window {} unsuitable for {} levels",
                                    opts.window, n));
    // local density at each spacing: 1 / median of the w spacings around it
    std::vector<double> sp(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i)
      sp[i] = levels[i + 1] - levels[i];
    u.push_back(0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const std::size_t lo = i >= w / 2 ? std::min(i - w / 2, sp.size() - w) : 0;
      const std::vector<double> chunk(sp.begin() + static_cast<std::ptrdiff_t>(lo),
                                      sp.begin() + static_cast<std::ptrdiff_t>(lo + w));
      u.push_back(u.back() + sp[i] / median(chunk));
    }
    out.parameters["window"] = static_cast<double>(w);
    break;
  }
  }
  if (opts.method != UnfoldMethod::none)
    normalize(u);
  return out;
}

double poisson_pdf(double s) { return std::exp(-s); }

double wigner_pdf(double s) { return 0.5 * pi * s * std::exp(-0.25 * pi * s * s); }

NnsdResult nnsd(const UnfoldedLevels &u, int bins, double s_max) {
  if (bins < 1)
    throw ConfigError("histogram needs at least one bin");
  const auto &x = u.unfolded;
  if (x.size() < 2)
    throw ConfigError("spacing distribution needs at least 2 levels");
  std::vector<double> s;
  for (std::size_t i = 1; i < x.size(); ++i)
    s.push_back(x[i] - x[i - 1]);
  std::sort(s.begin(), s.end());
  NnsdResult out;
  out.spacings = s.size();
  const double top = std::max(s_max, std::nextafter(s.back(), 2.0 * s.back() + 1.0));
  const double w = top / bins;
  for (int b = 0; b <= bins; ++b)
    out.edges.push_back(b * w);
  out.edges.back() = top;
  out.density.assign(static_cast<std::size_t>(bins), 0.0);
  for (double v : s) {
    auto b = static_cast<std::size_t>(v / w);
    b = std::min(b, static_cast<std::size_t>(bins - 1));
    out.density[b] += 1.0;
  }
  const double norm = 1.0 / (static_cast<double>(s.size()) * w);
  for (auto &d : out.density)
    d *= norm;
  for (int b = 0; b < bins; ++b) {
    const double c = 0.5 * (out.edges[static_cast<std::size_t>(b)] +
                            out.edges[static_cast<std::size_t>(b) + 1]);
    const double h = out.density[static_cast<std::size_t>(b)];
    out.sse_poisson += (h - poisson_pdf(c)) * (h - poisson_pdf(c)) * w;
    out.sse_wigner += (h - wigner_pdf(c)) * (h - wigner_pdf(c)) * w;
  }
  // KS: compare the model CDF with the empirical CDF on both sides of each step
  const double n = static_cast<double>(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double fp = 1.0 - std::exp(-s[i]);
    const double fw = 1.0 - std::exp(-0.25 * pi * s[i] * s[i]);
    const double lo = static_cast<double>(i) / n, hi = static_cast<double>(i + 1) / n;
    out.ks_poisson = std::max({out.ks_poisson, std::abs(fp - lo), std::abs(fp - hi)});
    out.ks_wigner = std::max({out.ks_wigner, std::abs(fw - lo), std::abs(fw - hi)});
  }
  out.better = out.sse_wigner < out.sse_poisson ? "wigner" : "poisson";
  return out;
}

double delta3(std::span<const double> levels, double x0, double x1) {
  if (!(x1 > x0))
    throw ConfigError("Delta_3 needs a non-empty interval");
  const auto first = std::lower_bound(levels.begin(), levels.end(), x0);
  const auto last = std::upper_bound(levels.begin(), levels.end(), x1);
  if (last - first < 2)
    throw ConfigError(fmt::format(
        "Delta_3 interval [{:.10g}, {:.10g}] holds fewer than 2 levels", x0, x1));
  // Work in y = x - x0 on [0, len]; N counts levels inside, the offset from
  // levels below x0 is absorbed by b. Moments of the piecewise constant N:
  //   I0 = int N, I1 = int N y, I2 = int N^2.
  const double len = x1 - x0;
  long double i0 = 0, i1 = 0, i2 = 0;
  long double k = 0;
  auto piece = [&](long double a, long double b) {
    if (b <= a || k == 0)
      return;
    i0 += k * (b - a);
    i1 += k * (b * b - a * a) / 2;
    i2 += k * k * (b - a);
  };
  long double prev = 0;
  for (auto it = first; it != last; ++it) {
    const long double y = static_cast<long double>(*it) - x0;
    piece(prev, y);
    k += 1;
    prev = y;
  }
  piece(prev, len);
  const long double L = len;
  // normal equations for (a, b)
  const long double m11 = L * L * L / 3, m12 = L * L / 2, m22 = L;
  const long double det = m11 * m22 - m12 * m12;
  const long double a = (i1 * m22 - m12 * i0) / det;
  const long double b = (m11 * i0 - m12 * i1) / det;
  const long double v = (i2 - a * i1 - b * i0) / L;
  return std::max(0.0, static_cast<double>(v));
}

std::vector<SlidingPoint> sliding_delta3(std::span<const double> levels,
                                         int window, int step) {
  if (window < 2 || step < 1)
    throw ConfigError("sliding Delta_3 needs window >= 2 and step >= 1");
  const auto w = static_cast<std::size_t>(window);
  std::vector<SlidingPoint> out;
  if (levels.size() < w)
    throw ConfigError(fmt::format("sliding Delta_3 needs at least {} levels, got {}",
                                  window, levels.size()));
  for (std::size_t i = 0; i + w <= levels.size(); i += static_cast<std::size_t>(step)) {
    const double a = levels[i], b = levels[i + w - 1];
    out.push_back({0.5 * (a + b), delta3(levels.subspan(i, w), a, b), i});
  }
  return out;
}

double goe_delta3_reference(double L) {
  return std::log(L) / (pi * pi) + (0.46 - std::log(100.0) / (pi * pi));
}

std::vector<AveragedPoint> averaged_delta3(std::span<const double> unfolded,
                                           double lo, double hi,
                                           std::span<const double> L_values,
                                           double step) {
  if (!(step > 0.0))
    throw ConfigError("averaging step must be positive");
  std::vector<AveragedPoint> out;
  for (double L : L_values) {
    if (!(L > 0.0) || lo + L > hi)
      throw ConfigError(fmt::format(
          "L = {} does not fit into the range [{}, {}]", L, lo, hi));
    std::vector<double> vals;
    for (double x = lo; x + L <= hi + 1e-12; x += step) {
      const auto a = std::lower_bound(unfolded.begin(), unfolded.end(), x);
      const auto b = std::upper_bound(unfolded.begin(), unfolded.end(), x + L);
      if (b - a >= 2)
        vals.push_back(delta3(unfolded, x, x + L));
    }
    AveragedPoint p;
    p.L = L;
    p.windows = vals.size();
    p.poisson = L / 15.0;
    p.goe = goe_delta3_reference(L);
    if (!vals.empty()) {
      double sum = 0.0;
      for (double v : vals)
        sum += v;
      p.mean = sum / static_cast<double>(vals.size());
      double var = 0.0;
      for (double v : vals)
        var += (v - p.mean) * (v - p.mean);
      p.rms = std::sqrt(var / static_cast<double>(vals.size()));
    }
    out.push_back(p);
  }
  return out;
}

} // namespace chebfd::stats
