// chebfd command line: grids, Chebyshev spectra, inversion, statistics.

#include <array>
#include <cstdio>
#include <sstream>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "chebfd/app.hpp"

using namespace chebfd;

namespace {

struct Common {
  std::string config;
  std::string parity;
  std::optional<std::size_t> vcut_index;
  bool resume = false;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out;
};

void add_common(CLI::App *c, Common &o) {
  c->add_option("--config", o.config, "YAML run file")->check(CLI::ExistingFile);
  c->add_option("--parity", o.parity, "exchange parity")
      ->check(CLI::IsMember({"even", "odd", "both"}));
  c->add_option("--vcut-index", o.vcut_index, "index into grid.v_cut_ev");
  c->add_flag("--resume", o.resume, "continue from checkpoints in the output dir");
  c->add_option("--seed", o.seed, "base seed for start vectors");
  c->add_option("--threads", o.threads, "OpenMP threads (0 = runtime default)");
  c->add_option("--out", o.out, "output directory");
}

app::RunConfig load(const Common &o, bool need_grid = true) {
  auto cfg = o.config.empty() ? app::parse_config("", need_grid)
                              : app::load_config(o.config, need_grid);
  if (!o.parity.empty())
    cfg.parity = o.parity;
  if (o.seed)
    cfg.sequence.seed = *o.seed;
  if (o.threads > 0)
    cfg.threads = o.threads;
  if (!o.out.empty())
    cfg.out_dir = o.out;
  cfg.validate(need_grid);
  set_threads(cfg.threads);
  return cfg;
}

std::vector<std::size_t> cutoffs(const app::RunConfig &cfg, const Common &o) {
  if (o.vcut_index) {
    if (*o.vcut_index >= cfg.grid.v_cut.size())
      throw ConfigError(fmt::format("--vcut-index {} out of range ({} cutoffs)",
                                    *o.vcut_index, cfg.grid.v_cut.size()));
    return {*o.vcut_index};
  }
  std::vector<std::size_t> v(cfg.grid.v_cut.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = i;
  return v;
}

void log(const std::string &s) { std::cerr << s << '\n'; }

hinv::LevelList select(hinv::LevelList l, const std::string &parity) {
  if (parity.empty() || parity == "both")
    return l;
  const auto p = parity_from_string(parity);
  std::erase_if(l.lines, [&](const hinv::SpectralLine &x) { return x.parity != p; });
  return l;
}

int run(int argc, char **argv) {
  CLI::App cli{"Vibrational bound states from Chebyshev correlation sequences"};
  cli.require_subcommand(1);

  // pes-eval
  Common pe_o;
  double r1 = 0, r2 = 0, angle = 0;
  std::string coords = "bond";
  auto *pe = cli.add_subcommand("pes-eval", "evaluate the surfaces at one geometry");
  add_common(pe, pe_o);
  std::string geom_file;
  auto *o_r1 = pe->add_option("--r1", r1, "bohr");
  pe->add_option("--r2", r2, "bohr")->needs(o_r1);
  pe->add_option("--angle", angle, "degrees")->needs(o_r1);
  pe->add_option("--geometries", geom_file,
                 "file with one 'r1 r2 angle_deg' per line ('-' for stdin)")
      ->excludes(o_r1);
  pe->add_option("--coords", coords)->check(CLI::IsMember({"bond", "radau"}));

  Common gb_o;
  auto *gb = cli.add_subcommand("grid-build", "size and prune the DVR grid, write manifests");
  add_common(gb, gb_o);

  Common sp_o;
  auto *sp = cli.add_subcommand("spectrum", "full run: sequences, inversion, level lists");
  add_common(sp, sp_o);

  Common inv_o;
  std::vector<std::string> seq_files;
  std::optional<double> e_lo, e_hi;
  auto *inv = cli.add_subcommand("invert", "harmonic inversion of stored sequences");
  add_common(inv, inv_o);
  inv->add_option("sequences", seq_files, "checkpoint or sequence files (same parity)")
      ->required()
      ->check(CLI::ExistingFile);
  inv->add_option("--e-lo", e_lo, "hartree");
  inv->add_option("--e-hi", e_hi, "hartree");

  Common st_o;
  std::string levels_file;
  auto *st = cli.add_subcommand("stats", "unfolding, NNSD and Delta_3 of a level list");
  add_common(st, st_o);
  st->add_option("levels", levels_file)->required()->check(CLI::ExistingFile);

  Common or_o;
  auto *orc = cli.add_subcommand("oracle", "dense diagonalization on a small grid");
  add_common(orc, or_o);

  Common cmp_o;
  std::string file_a, file_b;
  int window = 0;
  double tolerance = 0.0;
  auto *cmp = cli.add_subcommand("compare", "match two level lists, windowed errors");
  add_common(cmp, cmp_o);
  cmp->add_option("a", file_a)->required()->check(CLI::ExistingFile);
  cmp->add_option("b", file_b)->required()->check(CLI::ExistingFile);
  cmp->add_option("--window", window, "matched levels per window");
  cmp->add_option("--tolerance", tolerance, "hartree; default half the local spacing");

  CLI11_PARSE(cli, argc, argv);

  if (*pe) {
    const auto cfg = load(pe_o, false);
    const auto model = app::build_model(cfg.model);
    std::vector<std::array<double, 3>> pts;
    if (!geom_file.empty()) {
      std::ifstream f;
      if (geom_file != "-") {
        f.open(geom_file);
        if (!f)
          throw ConfigError("cannot read " + geom_file);
      }
      std::istream &in = geom_file == "-" ? std::cin : f;
      std::string line;
      for (int row = 1; std::getline(in, line); ++row) {
        if (const auto h = line.find('#'); h != std::string::npos)
          line.erase(h);
        std::istringstream ls(line);
        std::array<double, 3> g{};
        if (!(ls >> g[0]))
          continue;
        if (!(ls >> g[1] >> g[2]))
          throw ConfigError(fmt::format("{}:{}: expected r1 r2 angle", geom_file, row));
        pts.push_back(g);
      }
    } else {
      if (pe->count("--r1") == 0 || pe->count("--r2") == 0 || pe->count("--angle") == 0)
        throw ConfigError("pes-eval needs --r1 --r2 --angle or --geometries");
      pts.push_back({r1, r2, angle});
    }
    fmt::print("r1_bohr,r2_bohr,angle_deg,v11,v22,v12,v_ground,v_excited\n");
    for (const auto &[a, b, c] : pts) {
      pes::Geometry g{a, b, c * units::deg,
                      coords == "radau" ? pes::Flavor::radau : pes::Flavor::bond};
      if (g.flavor == pes::Flavor::radau)
        g = pes::radau_to_bond(g, model.masses());
      const auto d = model.apply_corrections(g);
      const auto e = model.adiabatic(g);
      fmt::print("{:.12g},{:.12g},{:.12g},{:.15g},{:.15g},{:.15g},{:.15g},{:.15g}\n", g.r1,
                 g.r2, g.angle / units::deg, d.v11, d.v22, d.v12, e.ground, e.excited);
    }
    return 0;
  }
  if (*gb) {
    const auto cfg = load(gb_o);
    const auto model = app::build_model(cfg.model);
    std::filesystem::create_directories(cfg.out_dir);
    for (auto i : cutoffs(cfg, gb_o)) {
      const auto g = app::build_grid(cfg, model, i);
      const auto text = app::grid_manifest(g, model.masses().m1);
      const auto path = cfg.out_dir / fmt::format("grid_v{}.manifest", i);
      std::ofstream(path) << text;
      fmt::print("# {}\n{}", path.string(), text);
    }
    return 0;
  }
  if (*sp) {
    const auto cfg = load(sp_o);
    const auto model = app::build_model(cfg.model);
    app::PipelineOptions po;
    po.resume = sp_o.resume;
    po.log = log;
    for (auto i : cutoffs(cfg, sp_o)) {
      const auto r = app::run_cutoff(cfg, model, i, po);
      for (const auto &p : r.parities)
        fmt::print("V_cut[{}] {}: {} levels -> {}\n", i, to_string(p.parity),
                   p.levels.lines.size(),
                   (cfg.out_dir / (app::levels_stem(i, p.parity) + ".csv")).string());
    }
    return 0;
  }
  if (*inv) {
    const auto cfg = load(inv_o, false);
    std::vector<cheby::ChebyshevSequence> seqs;
    for (const auto &f : seq_files) {
      auto s = cheby::read_checkpoint(f).sequence;
      if (!seqs.empty() && (s.parity != seqs.front().parity ||
                            s.grid_hash != seqs.front().grid_hash))
        throw ConfigError(fmt::format("{} differs in parity or grid from {}", f,
                                      seq_files.front()));
      seqs.push_back(std::move(s));
    }
    const auto &sc = seqs.front().scaling;
    const double lo = e_lo.value_or(sc.energy(-1.0));
    const double hi = e_hi.value_or(sc.energy(1.0));
    auto levels = app::invert_sequences(seqs, cfg, lo, hi, seqs.front().parity);
    levels.provenance["tool"] = "chebfd invert";
    levels.provenance["grid_hash"] = hex64(seqs.front().grid_hash);
    levels.provenance["config_hash"] = hex64(seqs.front().config_hash);
    levels.provenance["parity"] = std::string(to_string(seqs.front().parity));
    levels.provenance["n_coeffs"] = std::to_string(seqs.front().c.size());
    const auto stem = cfg.out_dir / fmt::format("inverted_{}", to_string(seqs.front().parity));
    app::write_levels_csv(stem.string() + ".csv", levels);
    app::write_levels_json(stem.string() + ".json", levels);
    for (const auto &w : levels.warnings)
      log("warning: " + w);
    fmt::print("{} levels -> {}.csv\n", levels.lines.size(), stem.string());
    return 0;
  }
  if (*st) {
    const auto cfg = load(st_o, false);
    const auto l = select(app::read_levels(levels_file), st_o.parity);
    const auto r = app::analyze_levels(l.energies(), cfg.stats);
    const auto stem = std::filesystem::path(levels_file).stem().string();
    app::write_stats(cfg.out_dir, stem, r, cfg.stats);
    fmt::print("{} levels; NNSD KS poisson {:.4f} wigner {:.4f} -> {}\n",
               r.unfolded.energies.size(), r.nnsd.ks_poisson, r.nnsd.ks_wigner,
               r.nnsd.better);
    for (const auto &p : r.averaged)
      fmt::print("  <Delta3({:g})> = {:.4f} +- {:.4f}  (poisson {:.4f}, goe {:.4f})\n", p.L,
                 p.mean, p.rms, p.poisson, p.goe);
    return 0;
  }
  if (*orc) {
    const auto cfg = load(or_o);
    const auto model = app::build_model(cfg.model);
    for (auto i : cutoffs(cfg, or_o)) {
      const auto g = app::build_grid(cfg, model, i);
      ham::ScaledHamiltonian h(g.grid, model.masses().m1);
      auto r = app::oracle_diagonalize(h, cfg.oracle_max_points);
      auto levels = select(r.levels, cfg.parity);
      const auto stem = cfg.out_dir / fmt::format("oracle_v{}", i);
      app::write_levels_csv(stem.string() + ".csv", levels);
      app::write_levels_json(stem.string() + ".json", levels);
      fmt::print("V_cut[{}]: {} points, {} levels, parity coupling {:.2e} -> {}.csv\n", i,
                 r.points, levels.lines.size(), r.max_parity_defect, stem.string());
    }
    return 0;
  }
  if (*cmp) {
    const auto cfg = load(cmp_o, false);
    const auto a = select(app::read_levels(file_a), cmp_o.parity);
    const auto b = select(app::read_levels(file_b), cmp_o.parity);
    const auto r = app::compare_runs(a.energies(), b.energies(),
                                     window > 0 ? window : cfg.compare_window, tolerance);
    std::filesystem::create_directories(cfg.out_dir);
    const auto path = cfg.out_dir / "compare.csv";
    app::write_compare_csv(path, r);
    for (const auto &w : r.warnings)
      log("warning: " + w);
    fmt::print("matched {} of {}/{} levels ({:.1f}%) -> {}\n", r.pairs.size(),
               a.lines.size(), b.lines.size(), 100.0 * r.match_rate, path.string());
    for (const auto &w : r.windows)
      fmt::print("  E ~ {:.8f}: median |dE| {:.3e} hartree over {} levels\n", w.energy,
                 w.median_error, w.matched);
    return 0;
  }
  return 1;
}

} // namespace

int main(int argc, char **argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError &e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError &e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const CheckpointError &e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return 4;
  } catch (const DomainError &e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return 5;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
