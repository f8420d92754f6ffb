#include "chebfd/hinv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

namespace chebfd::hinv {

std::vector<double> LevelList::energies() const {
  std::vector<double> e;
  e.reserve(lines.size());
  for (const auto &l : lines)
    e.push_back(l.energy);
  return e;
}

std::vector<double> LevelList::energies(Parity p) const {
  std::vector<double> e;
  for (const auto &l : lines)
    if (l.parity == p)
      e.push_back(l.energy);
  return e;
}

WindowPlan plan_windows(double e_lo, double e_hi, const SpectralScaling &s,
                        std::size_t n_coeffs, const PlanOptions &options) {
  if (!(e_lo < e_hi))
    throw NumericalError("window plan needs e_lo < e_hi");
  if (options.basis_size < 4)
    throw NumericalError("window basis size must be at least 4");
  if (!(options.overlap >= 0.0 && options.overlap < 1.0))
    throw NumericalError("window overlap must lie in [0, 1)");
  if (n_coeffs < 40)
    throw NumericalError("too few coefficients for a window plan");
  const double m = static_cast<double>(n_coeffs / 2 - 1);
  WindowPlan plan;
  plan.grid_size = static_cast<std::size_t>(
      std::llround(2.0 * m / options.spacing_factor));
  const double h = 2.0 * std::numbers::pi / static_cast<double>(plan.grid_size);
  const auto top = static_cast<long>((plan.grid_size - 1) / 2);

  const double om_a = std::acos(std::clamp(s.scaled(e_hi), -1.0, 1.0));
  const double om_b = std::acos(std::clamp(s.scaled(e_lo), -1.0, 1.0));
  const long len = options.basis_size;
  const long pad = len / 4;
  long first = std::max(1L, static_cast<long>(std::floor(om_a / h)) - pad);
  long last = std::min(top, static_cast<long>(std::ceil(om_b / h)) + pad);
  const long stride =
      std::max(1L, std::lround(static_cast<double>(len) * (1.0 - options.overlap)));

  for (long start = first;; start += stride) {
    long lo = start;
    long hi = start + len - 1;
    if (hi > top) {
      hi = top;
      lo = std::max(1L, hi - len + 1);
    }
    plan.ranges.emplace_back(static_cast<std::size_t>(lo),
                             static_cast<std::size_t>(hi));
    Window w;
    w.basis_size = static_cast<int>(hi - lo + 1);
    w.e_min = s.energy(std::cos(h * static_cast<double>(hi)));
    w.e_max = s.energy(std::cos(h * static_cast<double>(lo)));
    plan.windows.push_back(w);
    if (hi >= last)
      break;
  }
  return plan;
}

LevelList merge_and_dedupe(std::vector<SpectralLine> lines,
                           std::span<const Window> windows, double e_lo,
                           double e_hi, const MergeOptions &options) {
  LevelList out;
  const double floor = options.amplitude_floor * options.c0;
  std::erase_if(lines, [&](const SpectralLine &l) {
    return !(std::abs(l.amplitude) >= floor);
  });
  std::sort(lines.begin(), lines.end(),
            [](const SpectralLine &a, const SpectralLine &b) {
              if (a.parity != b.parity)
                return a.parity < b.parity;
              return a.energy < b.energy;
            });
  // Chain lines within tolerance into clusters. Lines from one window are
  // distinct Ritz vectors, so a cluster holds as many levels as the richest
  // window contributes; that window's lines are kept (smallest total error
  // on ties), otherwise the single best line.
  std::size_t i = 0;
  while (i < lines.size()) {
    std::size_t j = i + 1;
    while (j < lines.size() && lines[j].parity == lines[i].parity) {
      const double tol = std::max(
          options.tolerance, 3.0 * std::max(lines[j - 1].error, lines[j].error));
      if (lines[j].energy - lines[j - 1].energy > tol)
        break;
      ++j;
    }
    std::map<int, std::pair<std::size_t, double>> per_window;
    for (std::size_t k = i; k < j; ++k) {
      auto &[count, err] = per_window[lines[k].window_id];
      ++count;
      err += lines[k].error;
    }
    int best = lines[i].window_id;
    std::size_t best_count = 0;
    double best_err = 0.0;
    for (const auto &[id, ce] : per_window) {
      if (ce.first > best_count ||
          (ce.first == best_count && ce.second < best_err)) {
        best = id;
        best_count = ce.first;
        best_err = ce.second;
      }
    }
    for (std::size_t k = i; k < j; ++k)
      if (lines[k].window_id == best)
        out.lines.push_back(lines[k]);
    i = j;
  }
  std::stable_sort(out.lines.begin(), out.lines.end(),
                   [](const SpectralLine &a, const SpectralLine &b) {
                     return a.energy < b.energy;
                   });

  // coverage of [e_lo, e_hi] by the union of windows
  std::vector<std::pair<double, double>> spans;
  for (const auto &w : windows)
    spans.emplace_back(w.e_min, w.e_max);
  std::sort(spans.begin(), spans.end());
  double reached = e_lo;
  for (const auto &[a, b] : spans) {
    if (a > reached && reached < e_hi)
      out.warnings.push_back(fmt::format(
          "uncovered interval [{:.10g}, {:.10g}] hartree", reached,
          std::min(a, e_hi)));
    reached = std::max(reached, b);
  }
  if (reached < e_hi)
    out.warnings.push_back(fmt::format(
        "uncovered interval [{:.10g}, {:.10g}] hartree", reached, e_hi));
  return out;
}

std::vector<LineConvergence> convergence_error(
    std::span<const SpectralLine> full, std::span<const SpectralLine> half) {
  std::vector<LineConvergence> out(full.size());
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < full.size(); ++i) {
    const auto &l = full[i];
    double gap = inf;
    for (std::size_t k = 0; k < full.size(); ++k)
      if (k != i && full[k].parity == l.parity)
        gap = std::min(gap, std::abs(full[k].energy - l.energy));
    const double tol = 0.5 * gap;
    double best = inf;
    for (const auto &h : half)
      if (h.parity == l.parity)
        best = std::min(best, std::abs(h.energy - l.energy));
    if (best < tol) {
      out[i].error = best;
      out[i].converged = true;
    } else {
      out[i].error = best;
      out[i].converged = false;
    }
  }
  return out;
}

LevelList invert_plan(const FilterDiagonalizer &engine, const WindowPlan &plan,
                      double e_lo, double e_hi, const MergeOptions &merge,
                      Parity parity) {
  const auto nw = static_cast<std::ptrdiff_t>(plan.ranges.size());
  std::vector<WindowResult> results(plan.ranges.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < nw; ++i) {
    const auto [lo, hi] = plan.ranges[static_cast<std::size_t>(i)];
    results[static_cast<std::size_t>(i)] =
        engine.invert_range(lo, hi, static_cast<int>(i));
  }
  std::vector<SpectralLine> all;
  std::vector<Window> used;
  std::vector<std::string> rejected;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].rejected) {
      rejected.push_back(fmt::format("window {} rejected: {}", i,
                                     results[i].diagnostic));
      continue;
    }
    used.push_back(plan.windows[i]);
    for (auto l : results[i].lines) {
      l.parity = parity;
      all.push_back(l);
    }
  }
  LevelList out = merge_and_dedupe(std::move(all), used, e_lo, e_hi, merge);
  out.warnings.insert(out.warnings.begin(), rejected.begin(), rejected.end());
  return out;
}

} // namespace chebfd::hinv
