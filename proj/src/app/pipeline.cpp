#include "chebfd/app.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

namespace chebfd::app {

namespace {

using clock = std::chrono::steady_clock;

double seconds_since(clock::time_point t0) {
  return std::chrono::duration<double>(clock::now() - t0).count();
}

// Line ids from different start vectors must not collide in the merge.
constexpr int window_id_stride = 100000;

std::uint64_t start_seed(std::uint64_t base, Parity p, int k) {
  Fnv1a h;
  h.update(std::int64_t(base));
  h.update(std::int64_t(p));
  h.update(std::int64_t(k));
  return h.digest();
}

std::vector<hinv::SpectralLine> invert_all(std::span<const double> c,
                                           const hinv::SpectralScaling &s,
                                           const hinv::WindowPlan &plan,
                                           const hinv::InversionOptions &opts,
                                           int id_offset, Parity parity,
                                           std::vector<hinv::Window> &used,
                                           std::vector<std::string> &warnings,
                                           int *unresolved = nullptr) {
  hinv::FilterDiagonalizer fd(c, s, plan.grid_size, opts);
  const auto nw = static_cast<std::ptrdiff_t>(plan.ranges.size());
  std::vector<hinv::WindowResult> res(plan.ranges.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < nw; ++i) {
    const auto [lo, hi] = plan.ranges[std::size_t(i)];
    res[std::size_t(i)] = fd.invert_range(lo, hi, id_offset + int(i));
  }
  std::vector<hinv::SpectralLine> out;
  for (std::size_t i = 0; i < res.size(); ++i) {
    if (res[i].rejected) {
      warnings.push_back(fmt::format("window {} rejected: {}", id_offset + int(i),
                                     res[i].diagnostic));
      continue;
    }
    used.push_back(plan.windows[i]);
    if (unresolved)
      *unresolved += res[i].unresolved;
    for (auto l : res[i].lines) {
      l.parity = parity;
      out.push_back(l);
    }
  }
  return out;
}

void log_to(const PipelineOptions &o, const std::string &msg) {
  if (o.log)
    o.log(msg);
}

// Prefixes errors with the pipeline stage that raised them.
template <class F> auto stage(const char *name, F &&f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError &e) {
    throw ConfigError(fmt::format("[{}] {}", name, e.what()));
  } catch (const NumericalError &e) {
    throw NumericalError(fmt::format("[{}] {}", name, e.what()));
  } catch (const CheckpointError &e) {
    throw CheckpointError(fmt::format("[{}] {}", name, e.what()));
  } catch (const DomainError &e) {
    throw DomainError(fmt::format("[{}] {}", name, e.what()));
  }
}

} // namespace

GridBuild build_grid(const RunConfig &cfg, const pes::SurfaceModel &model,
                     std::size_t vcut_index) {
  if (vcut_index >= cfg.grid.v_cut.size())
    throw ConfigError(fmt::format("V_cut index {} out of range (the run lists {})",
                                  vcut_index, cfg.grid.v_cut.size()));
  GridBuild g;
  const auto ref = dvr::reference_geometry(model);
  g.v_min = model.ground_energy_radau(ref.r0, ref.r0, ref.theta0);
  g.v_cut = g.v_min + cfg.grid.v_cut[vcut_index];
  g.sizing = dvr::size_grids_for_vcut(g.v_cut, model, ref, cfg.grid.sizing);
  g.warnings = g.sizing.warnings;

  dvr::RadialGridSpec radial = cfg.grid.radial ? *cfg.grid.radial : g.sizing.radial;
  const int n3 = cfg.grid.n3 ? *cfg.grid.n3 : g.sizing.angular.n3;
  g.primitive_radial = radial.n;
  const double mass = model.masses().m1;
  const auto sinc = dvr::build_sinc_dvr(radial, mass);
  const auto cut = dvr::radial_cut(model, sinc.points, ref);
  const double cmin = *std::min_element(cut.begin(), cut.end());
  g.contraction_cutoff = cmin + cfg.grid.contraction_factor * (g.v_cut - g.v_min);
  const auto b = dvr::contract_radial(sinc, radial, cut, g.contraction_cutoff);
  const auto ang = dvr::build_legendre_dvr({n3});
  g.grid = std::make_shared<const dvr::TruncatedGrid>(
      dvr::prune_grid(b, b, ang, model, g.v_cut));
  return g;
}

std::string grid_manifest(const GridBuild &g, double radial_mass) {
  const auto &grid = *g.grid;
  std::string s;
  auto kv = [&](std::string_view k, const std::string &v) {
    s += fmt::format("{} = {}\n", k, v);
  };
  kv("grid_hash", hex64(grid.content_hash()));
  Fnv1a mh;
  mh.update(grid.model_fingerprint());
  kv("model_hash", hex64(mh.digest()));
  kv("v_min_hartree", fmt::format("{:.17g}", g.v_min));
  kv("v_cut_hartree", fmt::format("{:.17g}", g.v_cut));
  kv("v_cut_above_min_ev", fmt::format("{:.10g}", (g.v_cut - g.v_min) * units::hartree_ev));
  kv("radial_mass_me", fmt::format("{:.17g}", radial_mass));
  kv("r0_bohr", fmt::format("{:.17g}", g.sizing.r0));
  kv("theta0_deg", fmt::format("{:.17g}", g.sizing.theta0 / units::deg));
  const auto &spec = grid.basis1().spec;
  kv("radial_r_min", fmt::format("{:.17g}", spec.r_min));
  kv("radial_r_max", fmt::format("{:.17g}", spec.r_max));
  kv("radial_primitive_n", fmt::format("{}", spec.n));
  kv("radial_contraction_cutoff_hartree", fmt::format("{:.17g}", g.contraction_cutoff));
  kv("radial_contracted_n", fmt::format("{}", grid.n1()));
  kv("angular_n", fmt::format("{}", grid.n3()));
  kv("t_radial_hartree", fmt::format("{:.10g}", g.sizing.t_radial));
  kv("t_angular_hartree", fmt::format("{:.10g}", g.sizing.t_angular));
  kv("direct_product_size", fmt::format("{}", std::int64_t(grid.n1()) * grid.n2() * grid.n3()));
  kv("retained_points", fmt::format("{}", grid.size()));
  kv("exchange_symmetric", grid.symmetric() ? "true" : "false");
  for (std::size_t i = 0; i < g.warnings.size(); ++i)
    kv(fmt::format("warning_{}", i), g.warnings[i]);
  return s;
}

std::uint64_t sequence_config_hash(const RunConfig &cfg,
                                   const hinv::SpectralScaling &s) {
  Fnv1a h;
  h.update("chebfd-sequence-v1");
  h.update(s.shift);
  h.update(s.half_width);
  h.update(cfg.model.masses.m1);
  h.update(std::int64_t(cfg.sequence.seed));
  h.update(std::int64_t(cfg.bounds.probe_iterations));
  h.update(cfg.bounds.margin);
  h.update(std::int64_t(cfg.bounds.seed));
  return h.digest();
}

hinv::LevelList invert_sequences(const std::vector<cheby::ChebyshevSequence> &seqs,
                                 const RunConfig &cfg, double e_lo, double e_hi,
                                 Parity parity) {
  if (seqs.empty())
    throw ConfigError("no sequences to invert");
  std::vector<hinv::SpectralLine> full_lines, half_lines;
  std::vector<hinv::Window> full_used, half_used;
  std::vector<std::string> warnings;
  for (std::size_t k = 0; k < seqs.size(); ++k) {
    const auto &q = seqs[k];
    const std::size_t n = q.c.size() - q.c.size() % 2;
    const std::size_t nh = (n / 2) - (n / 2) % 2;
    if (nh < 40)
      throw ConfigError(fmt::format("sequence {} has only {} coefficients", k, q.c.size()));
    const std::span<const double> c(q.c.data(), n);
    const int off = int(k) * window_id_stride;
    const auto plan = hinv::plan_windows(e_lo, e_hi, q.scaling, n, cfg.inversion.plan);
    int unresolved = 0;
    auto f = invert_all(c, q.scaling, plan, cfg.inversion.options, off, parity,
                        full_used, warnings, &unresolved);
    if (unresolved > 0)
      warnings.push_back(fmt::format(
          "start vector {}: {} Ritz value(s) failed the residual gate; if levels are "
          "missing, lengthen the sequence",
          k, unresolved));
    full_lines.insert(full_lines.end(), f.begin(), f.end());
    const auto hplan =
        hinv::plan_windows(e_lo, e_hi, q.scaling, nh, cfg.inversion.plan);
    std::vector<std::string> ignored;
    auto h = invert_all(c.first(nh), q.scaling, hplan, cfg.inversion.options, off,
                        parity, half_used, ignored);
    half_lines.insert(half_lines.end(), h.begin(), h.end());
  }
  hinv::MergeOptions mo{cfg.inversion.merge_tolerance, cfg.inversion.amplitude_floor,
                        seqs.front().c.front()};
  auto full = hinv::merge_and_dedupe(std::move(full_lines), full_used, e_lo, e_hi, mo);
  const auto half = hinv::merge_and_dedupe(std::move(half_lines), half_used, e_lo, e_hi, mo);
  const auto conv = hinv::convergence_error(full.lines, half.lines);
  std::size_t unconverged = 0;
  for (std::size_t i = 0; i < full.lines.size(); ++i) {
    auto &l = full.lines[i];
    l.converged = conv[i].converged;
    if (std::isfinite(conv[i].error))
      l.error = conv[i].error;
    if (!l.converged)
      ++unconverged;
  }
  if (unconverged)
    warnings.push_back(fmt::format(
        "{} {} line(s) have no half-sequence partner; their error is the window estimate",
        unconverged, to_string(parity)));
  full.warnings.insert(full.warnings.begin(), warnings.begin(), warnings.end());
  return full;
}

CutoffRun run_cutoff(const RunConfig &cfg, const pes::SurfaceModel &model,
                     std::size_t vcut_index, const PipelineOptions &opts) {
  CutoffRun run;
  auto t0 = clock::now();
  run.grid = stage("grid", [&] { return build_grid(cfg, model, vcut_index); });
  const auto &grid = run.grid.grid;
  log_to(opts, fmt::format("V_cut[{}] = {:.6f} eV: {} points ({}x{}x{} product), "
                           "built in {:.1f} s",
                           vcut_index, cfg.grid.v_cut[vcut_index] * units::hartree_ev,
                           grid->size(), grid->n1(), grid->n2(), grid->n3(),
                           seconds_since(t0)));
  for (const auto &w : run.grid.warnings)
    log_to(opts, "warning: " + w);

  const double mass = model.masses().m1;
  ham::ScaledHamiltonian h(grid, mass);
  run.bounds = stage("bounds", [&] { return ham::estimate_spectral_bounds(h, cfg.bounds); });
  h.set_scaling(run.bounds.scaling);
  log_to(opts, fmt::format("spectral bounds [{:.8f}, {:.8f}] hartree (analytic {:.8f})",
                           run.bounds.e_lo, run.bounds.e_hi, run.bounds.analytic_hi));
  const auto chash = sequence_config_hash(cfg, h.scaling());

  if (opts.write_files) {
    std::filesystem::create_directories(cfg.out_dir);
    const auto path = cfg.out_dir / fmt::format("grid_v{}.manifest", vcut_index);
    std::ofstream(path) << grid_manifest(run.grid, mass);
  }

  hinv::LevelList combined;
  for (const Parity p : cfg.parities()) {
    ParityRun pr;
    pr.parity = p;
    const auto ts = clock::now();
    for (int k = 0; k < cfg.sequence.start_vectors; ++k) {
      const auto seed = start_seed(cfg.sequence.seed, p, k);
      const auto xi = stage("start vector", [&] { return ham::random_parity_vector(*grid, p, seed); });
      cheby::CheckpointPolicy pol;
      if (opts.write_files) {
        pol.path = cfg.out_dir /
                   fmt::format("{}_s{}.chk", levels_stem(vcut_index, p), k);
        pol.stride = cfg.sequence.checkpoint_stride;
        pol.resume = opts.resume;
      }
      if (opts.log) {
        pol.progress = [&, k](const cheby::Progress &g) {
          const double rate = g.seconds > 0.0 ? 2.0 * double(g.steps) / g.seconds : 0.0;
          const double eta =
              rate > 0.0 ? 2.0 * double(g.total_steps - g.steps) / rate : 0.0;
          opts.log(fmt::format("  {} start {}: step {}/{}, {:.0f} coeff/s, ETA {:.1f} s",
                               to_string(p), k, g.steps, g.total_steps, rate, eta));
        };
        pol.progress_every = std::max<std::uint64_t>(1, cfg.sequence.n_coeffs / 8);
      }
      pr.sequences.push_back(stage("sequence", [&] {
        return cheby::generate_sequence(h, xi, {cfg.sequence.n_coeffs, p, seed, chash}, pol);
      }));
    }
    pr.seconds_sequence = seconds_since(ts);
    const auto ti = clock::now();
    pr.levels = stage("inversion", [&] {
      return invert_sequences(pr.sequences, cfg, run.bounds.e_lo, grid->v_cut(), p);
    });
    std::erase_if(pr.levels.lines, [&](const hinv::SpectralLine &l) {
      return l.energy > grid->v_cut() || l.energy < run.bounds.e_lo;
    });
    pr.seconds_inversion = seconds_since(ti);

    auto &pv = pr.levels.provenance;
    pv["tool"] = "chebfd";
    pv["grid_hash"] = hex64(grid->content_hash());
    pv["config_hash"] = hex64(chash);
    pv["parity"] = std::string(to_string(p));
    pv["v_cut_index"] = std::to_string(vcut_index);
    pv["v_cut_hartree"] = fmt::format("{:.17g}", grid->v_cut());
    pv["v_min_hartree"] = fmt::format("{:.17g}", run.grid.v_min);
    pv["grid_points"] = std::to_string(grid->size());
    pv["n_coeffs"] = std::to_string(cfg.sequence.n_coeffs);
    pv["start_vectors"] = std::to_string(cfg.sequence.start_vectors);
    std::string seeds;
    for (const auto &q : pr.sequences)
      seeds += (seeds.empty() ? "" : " ") + std::to_string(q.seed);
    pv["seeds"] = seeds;
    pv["scaling_shift"] = fmt::format("{:.17g}", h.scaling().shift);
    pv["scaling_half_width"] = fmt::format("{:.17g}", h.scaling().half_width);
    pv["window_basis_size"] = std::to_string(cfg.inversion.plan.basis_size);
    pv["seconds_sequence"] = fmt::format("{:.3f}", pr.seconds_sequence);
    pv["seconds_inversion"] = fmt::format("{:.3f}", pr.seconds_inversion);
    std::uint64_t steps = 0;
    for (const auto &q : pr.sequences)
      steps += q.steps;
    pv["matvec_steps"] = std::to_string(steps);

    std::size_t above_goal = 0;
    for (const auto &l : pr.levels.lines)
      if (l.error > cfg.accuracy_goal * std::abs(l.energy - run.grid.v_min))
        ++above_goal;
    if (above_goal)
      pr.levels.warnings.push_back(fmt::format(
          "{} line(s) exceed the relative accuracy goal {:g}", above_goal,
          cfg.accuracy_goal));
    log_to(opts, fmt::format("{}: {} levels, sequence {:.1f} s, inversion {:.1f} s",
                             to_string(p), pr.levels.lines.size(), pr.seconds_sequence,
                             pr.seconds_inversion));
    for (const auto &w : pr.levels.warnings)
      log_to(opts, "warning: " + w);

    if (opts.write_files) {
      const auto stem = cfg.out_dir / levels_stem(vcut_index, p);
      write_levels_csv(stem.string() + ".csv", pr.levels);
      write_levels_json(stem.string() + ".json", pr.levels);
    }
    combined.lines.insert(combined.lines.end(), pr.levels.lines.begin(),
                          pr.levels.lines.end());
    for (const auto &w : pr.levels.warnings)
      combined.warnings.push_back(std::string(to_string(p)) + ": " + w);
    combined.provenance = pr.levels.provenance;
    run.parities.push_back(std::move(pr));
  }
  run.counters = h.counters();
  if (opts.write_files && run.parities.size() > 1) {
    std::stable_sort(combined.lines.begin(), combined.lines.end(),
                     [](const auto &a, const auto &b) { return a.energy < b.energy; });
    combined.provenance["parity"] = "both";
    std::string seeds;
    for (const auto &pr : run.parities)
      seeds += (seeds.empty() ? "" : " ") + pr.levels.provenance.at("seeds");
    combined.provenance["seeds"] = seeds;
    combined.provenance["matvec_steps"] = std::to_string(run.counters.applications);
    const auto stem = cfg.out_dir / fmt::format("levels_v{}", vcut_index);
    write_levels_csv(stem.string() + ".csv", combined);
    write_levels_json(stem.string() + ".json", combined);
  }
  return run;
}

std::vector<CutoffRun> run_pipeline(const RunConfig &cfg, const PipelineOptions &opts) {
  const auto model = build_model(cfg.model);
  std::vector<CutoffRun> out;
  for (std::size_t i = 0; i < cfg.grid.v_cut.size(); ++i)
    out.push_back(run_cutoff(cfg, model, i, opts));
  return out;
}

std::string levels_stem(std::size_t vcut_index, Parity p) {
  return fmt::format("levels_v{}_{}", vcut_index, to_string(p));
}

} // namespace chebfd::app
