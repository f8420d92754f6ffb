// Acceptance checks. One PASS/FAIL line per criterion, each with its own
// wall-clock budget. Usage: acceptance [--only NAME] [--desk CONFIG]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "chebfd/app.hpp"
#include "support/fixtures.hpp"
#include "support/samples.hpp"

using namespace chebfd;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failures; the first few messages go into the report line.
struct Tally {
  int failures = 0;
  std::vector<std::string> notes;

  void check(bool ok, const std::string &what) {
    if (ok)
      return;
    ++failures;
    if (notes.size() < 4)
      notes.push_back(what);
  }
  Outcome outcome(const std::string &summary) const {
    std::string d = summary;
    for (const auto &n : notes)
      d += "; " + n;
    if (failures > static_cast<int>(notes.size()))
      d += fmt::format("; {} more", failures - static_cast<int>(notes.size()));
    return {failures == 0, d};
  }
};

std::filesystem::path source_dir() { return CHEBFD_SOURCE_DIR; }

// ---------------------------------------------------------------------------

Outcome analytic_1d() {
  Tally t;
  auto eigen = [](const dvr::SincDvr &d, auto &&v) {
    Eigen::MatrixXd h = d.kinetic;
    for (std::size_t i = 0; i < d.points.size(); ++i)
      h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += v(d.points[i]);
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h, Eigen::EigenvaluesOnly)
        .eigenvalues()
        .eval();
  };
  const auto ho = dvr::build_sinc_dvr({-10.0, 10.0, 129}, 1.0);
  const auto eh = eigen(ho, [](double x) { return 0.5 * x * x; });
  double ho_err = 0.0;
  for (int n = 0; n < 10; ++n)
    ho_err = std::max(ho_err, std::abs(eh(n) - (n + 0.5)));
  t.check(ho_err < 1e-10, fmt::format("HO error {:.2e}", ho_err));

  const double m = 1000.0, depth = 0.2, a = 1.0, re = 2.0;
  const auto mo = dvr::build_sinc_dvr({0.8, 12.0, 400}, m);
  const auto em = eigen(mo, [&](double r) {
    const double e = 1.0 - std::exp(-a * (r - re));
    return depth * e * e;
  });
  const double w = a * std::sqrt(2.0 * depth / m);
  double morse_rel = 0.0;
  for (int n = 0; n < 15; ++n) {
    const double x = w * (n + 0.5);
    const double exact = x - x * x / (4.0 * depth);
    morse_rel = std::max(morse_rel, std::abs(em(n) - exact) / exact);
  }
  t.check(morse_rel < 1e-8, fmt::format("Morse error {:.2e}", morse_rel));
  return t.outcome(fmt::format("HO max abs {:.1e}, Morse max rel {:.1e}", ho_err, morse_rel));
}

// ---------------------------------------------------------------------------

struct TinyCase {
  fixtures::TinySpec spec;
  std::size_t n_coeffs;
};

app::RunConfig tiny_config(const TinyCase &c) {
  const auto ref = dvr::reference_geometry(fixtures::model());
  auto cfg = app::parse_config("", false);
  cfg.grid.v_cut = {c.spec.v_cut};
  cfg.grid.contraction_factor = c.spec.contract / c.spec.v_cut;
  cfg.grid.radial = dvr::RadialGridSpec{ref.r0 - c.spec.below, ref.r0 + c.spec.above,
                                        c.spec.n};
  cfg.grid.n3 = c.spec.n3;
  cfg.sequence.n_coeffs = c.n_coeffs;
  cfg.sequence.start_vectors = 2;
  cfg.sequence.seed = 1;
  cfg.parity = "both";
  return cfg;
}

Outcome oracle_equivalence() {
  const std::vector<TinyCase> cases{
      {{}, 40000},
      {{12, 0.4, 0.6, 0.06, 11, 0.04}, 40000},
      {{16, 0.5, 0.8, 0.10, 20, 0.08}, 40000},
  };
  Tally t;
  std::string summary;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const auto cfg = tiny_config(cases[k]);
    const auto model = app::build_model(cfg.model);
    const auto run = app::run_cutoff(cfg, model, 0, {false, false, {}});
    ham::ScaledHamiltonian h(run.grid.grid, model.masses().m1);
    const auto oracle = app::oracle_diagonalize(h);
    t.check(oracle.points <= 3000, fmt::format("grid {} has {} points", k, oracle.points));
    double worst = 0.0;
    std::size_t levels = 0;
    for (const auto &pr : run.parities) {
      const auto want = oracle.levels.energies(pr.parity);
      const auto got = pr.levels.energies();
      const auto *name = pr.parity == Parity::even ? "even" : "odd";
      t.check(got.size() == want.size(),
              fmt::format("grid {} {}: {} lines vs {} oracle", k, name, got.size(),
                          want.size()));
      // every oracle level must have a partner and no line may be left over
      std::vector<bool> used(got.size(), false);
      for (double e : want) {
        std::size_t best = got.size();
        for (std::size_t i = 0; i < got.size(); ++i)
          if (!used[i] && (best == got.size() ||
                           std::abs(got[i] - e) < std::abs(got[best] - e)))
            best = i;
        const double rel =
            best == got.size() ? INFINITY : std::abs(got[best] - e) / std::abs(e);
        t.check(rel <= 1e-10, fmt::format("grid {} {}: level {:.10f} off by {:.1e}", k,
                                          name, e, rel));
        if (best != got.size()) {
          used[best] = true;
          worst = std::max(worst, rel);
        }
      }
      const auto spurious = std::count(used.begin(), used.end(), false);
      t.check(spurious == 0, fmt::format("grid {} {}: {} spurious", k, name, spurious));
      levels += want.size();
    }
    summary += fmt::format("{}{} pts/{} levels/max rel {:.1e}", k ? ", " : "",
                           oracle.points, levels, worst);
  }
  return t.outcome(fmt::format("{} grids: {}", cases.size(), summary));
}

// ---------------------------------------------------------------------------

Outcome synthetic_inversion() {
  const std::size_t lines = 200, n = 50000;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uw(0.1, 3.0), ud(0.1, 1.0);
  std::vector<double> w(lines), d(lines);
  for (std::size_t k = 0; k < lines; ++k) {
    w[k] = uw(rng);
    d[k] = ud(rng);
  }
  std::vector<double> c(n, 0.0);
  for (std::size_t k = 0; k < lines; ++k)
    for (std::size_t i = 0; i < n; ++i)
      c[i] += d[k] * std::cos(static_cast<double>(i) * w[k]);

  const double e_lo = std::cos(3.0) - 0.005, e_hi = std::cos(0.1) + 1e-4;
  auto invert = [&](std::span<const double> seq) {
    const hinv::SpectralScaling s{};
    const auto plan = hinv::plan_windows(e_lo, e_hi, s, seq.size(), {});
    hinv::FilterDiagonalizer engine(seq, s, plan.grid_size);
    hinv::MergeOptions mo;
    mo.c0 = seq[0];
    return hinv::invert_plan(engine, plan, e_lo, e_hi, mo, Parity::none);
  };
  const auto full = invert(c);
  const auto half = invert(std::span<const double>(c).first(n / 2));

  Tally t;
  t.check(full.lines.size() == lines, fmt::format("{} lines found", full.lines.size()));
  double werr = 0.0, derr = 0.0;
  for (std::size_t k = 0; k < lines; ++k) {
    const hinv::SpectralLine *best = nullptr;
    for (const auto &l : full.lines)
      if (!best || std::abs(l.omega - w[k]) < std::abs(best->omega - w[k]))
        best = &l;
    if (!best)
      break;
    werr = std::max(werr, std::abs(best->omega - w[k]));
    derr = std::max(derr, std::abs(best->amplitude - d[k]));
  }
  t.check(werr < 1e-8, fmt::format("frequency error {:.1e}", werr));
  t.check(derr < 1e-6, fmt::format("amplitude error {:.1e}", derr));
  const auto conv = hinv::convergence_error(full.lines, half.lines);
  double cerr = 0.0;
  for (const auto &e : conv)
    cerr = std::max(cerr, e.converged ? e.error : INFINITY);
  t.check(cerr < 1e-9, fmt::format("half-sequence error {:.1e}", cerr));
  return t.outcome(fmt::format("{} lines, max |dw| {:.1e}, max |dd| {:.1e}, half {:.1e}",
                               full.lines.size(), werr, derr, cerr));
}

// ---------------------------------------------------------------------------

Outcome multi_cutoff(const std::filesystem::path &config) {
  auto cfg = app::load_config(config);
  Tally t;
  t.check(cfg.grid.v_cut.size() == 2, "desk config needs two cutoffs");
  if (cfg.grid.v_cut.size() != 2)
    return t.outcome(config.string());
  const double gap = cfg.grid.v_cut[1] / cfg.grid.v_cut[0] - 1.0;
  t.check(gap > 0.015 && gap < 0.035, fmt::format("cutoffs {:.1f}% apart", 100 * gap));

  app::PipelineOptions po;
  po.write_files = false;
  po.log = [](const std::string &s) { std::fprintf(stderr, "  %s\n", s.c_str()); };
  const auto runs = app::run_pipeline(cfg, po);
  const double v_min = runs[0].grid.v_min;
  const double limit = 0.6 * cfg.grid.v_cut[0];

  std::string summary = fmt::format("V_cut {:.4f}/{:.4f} eV",
                                    cfg.grid.v_cut[0] * units::hartree_ev,
                                    cfg.grid.v_cut[1] * units::hartree_ev);
  for (std::size_t p = 0; p < runs[0].parities.size(); ++p) {
    const auto a = runs[0].parities[p].levels.energies();
    const auto b = runs[1].parities[p].levels.energies();
    const auto *name = runs[0].parities[p].parity == Parity::even ? "even" : "odd";

    const auto cmp = app::compare_runs(a, b, cfg.compare_window);
    const auto &ws = cmp.windows;
    t.check(ws.size() >= 3, fmt::format("{}: only {} windows", name, ws.size()));
    bool increasing = ws.size() >= 3 && ws.back().median_error > ws.front().median_error;
    if (ws.size() >= 3) {
      // least-squares slope of log(median error) against window energy
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (const auto &w : ws) {
        const double y = std::log(std::max(w.median_error, 1e-300));
        sx += w.energy;
        sy += y;
        sxx += w.energy * w.energy;
        sxy += w.energy * y;
      }
      const double nw = static_cast<double>(ws.size());
      increasing = increasing && (nw * sxy - sx * sy) / (nw * sxx - sx * sx) > 0.0;
    }
    t.check(increasing, fmt::format("{}: median error not increasing with energy", name));

    double worst = 0.0, at = 0.0;
    std::size_t below = 0;
    for (double e : a) {
      if (e - v_min >= limit)
        continue;
      ++below;
      double best = INFINITY;
      for (double x : b)
        best = std::min(best, std::abs(x - e));
      const double rel = best / std::abs(e - v_min);
      if (rel > worst) {
        worst = rel;
        at = e;
      }
    }
    t.check(worst < cfg.accuracy_goal,
            fmt::format("{}: {:.1e} relative at {:.4f} eV", name, worst,
                        at * units::hartree_ev));
    summary += fmt::format("; {} {} levels, {} windows {:.1e}..{:.1e}, {} below 0.6 V_cut "
                           "max rel {:.1e}",
                           name, a.size(), ws.size(),
                           ws.empty() ? 0.0 : ws.front().median_error,
                           ws.empty() ? 0.0 : ws.back().median_error, below, worst);
  }
  return t.outcome(summary);
}

// ---------------------------------------------------------------------------

double mean_delta3_100(const std::vector<double> &unfolded) {
  const std::vector<double> L{100.0};
  const auto av = stats::averaged_delta3(unfolded, unfolded.front(), unfolded.back(), L);
  return av.at(0).mean;
}

Outcome statistics_anchors() {
  Tally t;
  const stats::UnfoldOptions uo{stats::UnfoldMethod::polynomial, 5};

  const auto poi = stats::unfold(samples::poisson(10000, 77), uo);
  const double d3p = mean_delta3_100(poi.unfolded);
  t.check(std::abs(d3p - 100.0 / 15.0) <= 0.15 * 100.0 / 15.0,
          fmt::format("Poisson Delta_3(100) {:.3f}", d3p));
  const auto np = stats::nnsd(poi);
  t.check(np.ks_poisson < 0.03 && np.ks_wigner > np.ks_poisson && np.better == "poisson",
          fmt::format("Poisson KS {:.3f}/{:.3f}", np.ks_poisson, np.ks_wigner));

  // 20 GOE realizations; each central half unfolded on its own, then
  // stitched into one unit-spacing sequence for the NNSD
  double d3g = 0.0;
  stats::UnfoldedLevels stitched;
  const int realizations = 20;
  for (int r = 0; r < realizations; ++r) {
    const auto u = stats::unfold(samples::goe_central(1000, 500 + r), uo);
    d3g += mean_delta3_100(u.unfolded) / realizations;
    const double off = stitched.unfolded.empty() ? 0.0 : stitched.unfolded.back() + 1.0;
    for (double x : u.unfolded)
      stitched.unfolded.push_back(x - u.unfolded.front() + off);
  }
  stitched.energies = stitched.unfolded;
  t.check(std::abs(d3g - 0.46) <= 0.2 * 0.46, fmt::format("GOE Delta_3(100) {:.3f}", d3g));
  const auto ng = stats::nnsd(stitched);
  t.check(ng.ks_wigner < 0.03 && ng.ks_poisson > ng.ks_wigner && ng.better == "wigner",
          fmt::format("GOE KS {:.3f}/{:.3f}", ng.ks_wigner, ng.ks_poisson));

  const auto fence = samples::picket_fence(1000);
  const double d3f = mean_delta3_100(fence);
  t.check(d3f <= 1.0 / 12.0 + 1e-3, fmt::format("picket fence {:.5f}", d3f));

  return t.outcome(fmt::format(
      "Poisson {:.2f} (KS P {:.3f} W {:.3f}), GOE {:.3f} (KS W {:.3f} P {:.3f}), fence {:.5f}",
      d3p, np.ks_poisson, np.ks_wigner, d3g, ng.ks_wigner, ng.ks_poisson, d3f));
}

// ---------------------------------------------------------------------------

std::vector<double> random_vector(std::size_t n, std::mt19937_64 &rng) {
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (auto &x : v)
    x = g(rng);
  return v;
}

Outcome property_suites() {
  Tally t;
  std::mt19937_64 rng(12);

  // adiabatic sheets
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 20000; ++i) {
    const pes::DiabaticTriple d{u(rng), u(rng), u(rng)};
    const auto a = pes::adiabatic_from_diabatic(d);
    const double tr = d.v11 + d.v22;
    t.check(a.ground <= a.excited, "adiabatic ordering");
    t.check(std::abs(a.ground + a.excited - tr) <= 4e-14 * std::max(1.0, std::abs(tr)),
            "adiabatic trace");
  }

  // continuity across the switch onsets of the reference model
  const auto &model = fixtures::model();
  struct Cut {
    int coord;
    double x0, range;
  };
  for (const Cut c : {Cut{0, 2.08, 3.0}, Cut{1, 2.08, 3.0}, Cut{0, 3.0, 3.0},
                      Cut{1, 3.0, 3.0}, Cut{2, 71.0 * units::deg, std::numbers::pi},
                      Cut{2, 131.0 * units::deg, std::numbers::pi}})
    for (double r1 : {2.2, 2.5})
      for (double frac : {1e-3, 1e-4, 1e-5, 1e-6}) {
        auto eval = [&](double x) {
          pes::Geometry g{r1, 2.4, 115.0 * units::deg};
          (c.coord == 0 ? g.r1 : c.coord == 1 ? g.r2 : g.angle) = x;
          return model.apply_corrections(g);
        };
        const double eps = frac * c.range;
        const auto lo = eval(c.x0 - eps), hi = eval(c.x0 + eps);
        const double jump = std::max({std::abs(hi.v11 - lo.v11), std::abs(hi.v22 - lo.v22),
                                      std::abs(hi.v12 - lo.v12)});
        t.check(jump <= 20.0 * eps, fmt::format("switch jump {:.1e} at {}", jump, c.x0));
      }

  // apply_h symmetry and exchange commutation
  const auto grid = fixtures::tiny_grid();
  ham::ScaledHamiltonian h(grid, model.masses().m1);
  const std::size_t n = grid->size();
  std::vector<double> hu(n), hv(n), hpv(n);
  for (int k = 0; k < 50; ++k) {
    const auto a = random_vector(n, rng), b = random_vector(n, rng);
    h.apply(a, hu);
    h.apply(b, hv);
    const double x = compensated_dot(a, hv), y = compensated_dot(hu, b);
    const double s = std::sqrt(compensated_dot(a, a) * compensated_dot(hv, hv));
    t.check(std::abs(x - y) <= 1e-12 * s, "apply_h symmetry");
    h.apply(ham::exchange_image(*grid, b), hpv);
    const auto phv = ham::exchange_image(*grid, hv);
    for (std::size_t i = 0; i < n; ++i)
      t.check(std::abs(phv[i] - hpv[i]) <= 1e-12 * std::abs(hv[i]) + 1e-300,
              "apply_h exchange commutation");
  }
  for (auto parity : {Parity::even, Parity::odd}) {
    const auto v = ham::random_parity_vector(*grid, parity, 99);
    h.apply(v, hv);
    const auto phv = ham::exchange_image(*grid, hv);
    const double sign = parity == Parity::even ? 1.0 : -1.0;
    for (std::size_t i = 0; i < n; ++i)
      t.check(phv[i] == sign * hv[i], "parity not conserved exactly");
  }

  // Chebyshev boundedness and doubling against the plain recursion
  h.set_scaling(ham::estimate_spectral_bounds(h).scaling);
  const auto xi0 = ham::random_parity_vector(*grid, Parity::even, 4);
  const auto seq = cheby::generate_sequence(h, xi0, {4000, Parity::even, 4});
  for (double c : seq.c)
    t.check(std::abs(c) <= seq.c[0] + 1e-10, "Chebyshev sequence unbounded");
  std::vector<double> prev = xi0, cur(n), next(n);
  h.apply_scaled(xi0, cur);
  double dbl = std::abs(seq.c[1] - compensated_dot(xi0, cur));
  for (std::size_t k = 2; k < 400; ++k) {
    h.apply_scaled(cur, next, 2.0, -1.0, prev);
    dbl = std::max(dbl, std::abs(seq.c[k] - compensated_dot(xi0, next)));
    prev.swap(cur);
    cur.swap(next);
  }
  t.check(dbl < 1e-12, fmt::format("doubling mismatch {:.1e}", dbl));

  // Delta_3 under affine maps
  const auto poi = samples::poisson(2000, 9);
  std::vector<double> moved;
  for (double e : poi)
    moved.push_back(3.7 * e - 12.5);
  for (double x0 : {10.0, 300.0, 1200.0}) {
    const double v = stats::delta3(poi, x0, x0 + 100.0);
    const double w = stats::delta3(moved, 3.7 * x0 - 12.5, 3.7 * (x0 + 100.0) - 12.5);
    t.check(std::abs(v - w) <= 1e-10 * std::max(1.0, v), "Delta_3 not affine invariant");
  }

  // two identical end-to-end runs agree bit for bit
  const auto cfg = tiny_config({{}, 20000});
  const auto m = app::build_model(cfg.model);
  const auto r1 = app::run_cutoff(cfg, m, 0, {false, false, {}});
  const auto r2 = app::run_cutoff(cfg, m, 0, {false, false, {}});
  for (std::size_t p = 0; p < r1.parities.size(); ++p) {
    t.check(r1.parities[p].levels.energies() == r2.parities[p].levels.energies(),
            "end-to-end levels differ between identical runs");
    t.check(r1.parities[p].sequences[0].c == r2.parities[p].sequences[0].c,
            "end-to-end sequences differ between identical runs");
  }
  return t.outcome(fmt::format("{} failed checks", t.failures));
}

// ---------------------------------------------------------------------------

struct Criterion {
  std::string name;
  double budget; // seconds
  std::function<Outcome()> run;
};

} // namespace

int main(int argc, char **argv) {
  std::string only;
  std::filesystem::path desk = source_dir() / "configs" / "desk.yaml";
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--only")
      only = argv[i + 1];
    else if (flag == "--desk")
      desk = argv[i + 1];
  }

  const std::vector<Criterion> criteria{
      {"analytic-1d", 1.0, analytic_1d},
      {"oracle-equivalence", 300.0, oracle_equivalence},
      {"synthetic-inversion", 60.0, synthetic_inversion},
      {"multi-cutoff", 1800.0, [&] { return multi_cutoff(desk); }},
      {"statistics", 300.0, statistics_anchors},
      {"properties", 120.0, property_suites},
  };

  int failed = 0;
  for (const auto &c : criteria) {
    if (!only.empty() && c.name != only)
      continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && dt < c.budget;
    failed += pass ? 0 : 1;
    std::printf("%s %-20s %7.1f s (limit %.0f s)  %s\n", pass ? "PASS" : "FAIL",
                c.name.c_str(), dt, c.budget, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
