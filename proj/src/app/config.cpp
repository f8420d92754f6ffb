#include "chebfd/app.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace chebfd::app {

namespace {

// Rejects keys outside `allowed` so that typos do not silently fall back
// to defaults.
void check_keys(const YAML::Node &n, const std::string &where,
                std::initializer_list<const char *> allowed) {
  if (!n)
    return;
  if (!n.IsMap())
    throw ConfigError(fmt::format("'{}' must be a mapping", where));
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto &kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!ok.count(key))
      throw ConfigError(fmt::format("unknown key '{}' in '{}'", key,
                                    where.empty() ? "<top>" : where));
  }
}

template <class T>
void get(const YAML::Node &n, const char *key, T &out, const std::string &where) {
  if (!n || !n[key])
    return;
  try {
    out = n[key].as<T>();
  } catch (const YAML::Exception &e) {
    throw ConfigError(fmt::format("bad value for '{}.{}': {}", where, key, e.what()));
  }
}

void get_scaled(const YAML::Node &n, const char *key, double &out, double scale,
                const std::string &where) {
  double x = out / scale;
  get(n, key, x, where);
  out = x * scale;
}

void read_all(const YAML::Node &root, RunConfig &c);

pes::Side side_of(const std::string &s) {
  if (s == "below")
    return pes::Side::below;
  if (s == "above")
    return pes::Side::above;
  throw ConfigError(fmt::format("switch side must be 'below' or 'above', got '{}'", s));
}

// x0 is in bohr for radial switches and degrees for angular ones
void read_switch(const YAML::Node &n, pes::SwitchParams &s, const std::string &where,
                 bool angular) {
  if (!n)
    return;
  check_keys(n, where, {"a", "b", "x0", "side"});
  get(n, "a", s.a, where);
  get(n, "b", s.b, where);
  get_scaled(n, "x0", s.x0, angular ? units::deg : 1.0, where);
  if (n["side"])
    s.side = side_of(n["side"].as<std::string>());
}

void read_model(const YAML::Node &n, ModelConfig &m) {
  if (!n)
    return;
  check_keys(n, "model", {"stretch", "bend1", "bend2", "crossing_deg", "coupling",
                          "corrections", "v_diss_ev", "v_no", "masses_amu", "domain"});
  auto &p = m.params;
  if (const auto s = n["stretch"]) {
    check_keys(s, "model.stretch", {"depth_ev", "alpha", "re"});
    get_scaled(s, "depth_ev", p.stretch.depth, 1.0 / units::hartree_ev, "model.stretch");
    get(s, "alpha", p.stretch.alpha, "model.stretch");
    get(s, "re", p.stretch.re, "model.stretch");
  }
  if (const auto b = n["bend1"]) {
    check_keys(b, "model.bend1", {"k", "angle_deg"});
    get(b, "k", p.k1, "model.bend1");
    get_scaled(b, "angle_deg", p.beta1, units::deg, "model.bend1");
  }
  if (const auto b = n["bend2"]) {
    check_keys(b, "model.bend2", {"k", "angle_deg"});
    get(b, "k", p.k2, "model.bend2");
    get_scaled(b, "angle_deg", p.beta2, units::deg, "model.bend2");
  }
  get_scaled(n, "crossing_deg", p.beta_x, units::deg, "model");
  if (const auto c = n["coupling"]) {
    check_keys(c, "model.coupling", {"lambda", "center_deg", "width_deg"});
    get(c, "lambda", p.lambda, "model.coupling");
    get_scaled(c, "center_deg", p.beta_c, units::deg, "model.coupling");
    get_scaled(c, "width_deg", p.width, units::deg, "model.coupling");
  }
  if (const auto c = n["corrections"]) {
    const std::string w = "model.corrections";
    check_keys(c, w, {"enabled", "short_v11", "wall_k", "v22_floor", "angle_low",
                      "angle_high", "long_v11", "long_v22"});
    auto &k = m.corrections;
    get(c, "enabled", k.enabled, w);
    read_switch(c["short_v11"], k.short_v11, w + ".short_v11", false);
    get(c, "wall_k", k.wall_k, w);
    get(c, "v22_floor", k.v22_floor, w);
    read_switch(c["angle_low"], k.angle_low, w + ".angle_low", true);
    read_switch(c["angle_high"], k.angle_high, w + ".angle_high", true);
    read_switch(c["long_v11"], k.long_v11, w + ".long_v11", false);
    read_switch(c["long_v22"], k.long_v22, w + ".long_v22", false);
  }
  get_scaled(n, "v_diss_ev", m.v_diss, 1.0 / units::hartree_ev, "model");
  if (const auto v = n["v_no"]) {
    check_keys(v, "model.v_no", {"depth_ev", "alpha", "re"});
    get_scaled(v, "depth_ev", m.v_no.depth, 1.0 / units::hartree_ev, "model.v_no");
    get(v, "alpha", m.v_no.alpha, "model.v_no");
    get(v, "re", m.v_no.re, "model.v_no");
  }
  if (const auto v = n["masses_amu"]) {
    check_keys(v, "model.masses_amu", {"end", "center"});
    double end = m.masses.m1 / units::amu_me, center = m.masses.m3 / units::amu_me;
    get(v, "end", end, "model.masses_amu");
    get(v, "center", center, "model.masses_amu");
    m.masses = {end * units::amu_me, end * units::amu_me, center * units::amu_me};
  }
  if (const auto d = n["domain"]) {
    check_keys(d, "model.domain", {"r_min", "r_max"});
    get(d, "r_min", m.domain.r_min, "model.domain");
    get(d, "r_max", m.domain.r_max, "model.domain");
  }
}

void read_grid(const YAML::Node &n, GridConfig &g) {
  if (!n)
    return;
  check_keys(n, "grid", {"v_cut_ev", "contraction_factor", "sizing", "radial", "n3"});
  if (const auto v = n["v_cut_ev"]) {
    g.v_cut.clear();
    if (v.IsScalar())
      g.v_cut.push_back(v.as<double>() / units::hartree_ev);
    else
      for (const auto &x : v)
        g.v_cut.push_back(x.as<double>() / units::hartree_ev);
  }
  get(n, "contraction_factor", g.contraction_factor, "grid");
  if (const auto s = n["sizing"]) {
    check_keys(s, "grid.sizing", {"profile", "margin", "r_floor", "r_ceiling",
                                  "kinetic_factor", "min_radial", "min_angular"});
    if (s["profile"]) {
      const auto p = s["profile"].as<std::string>();
      if (p != "cut" && p != "relaxed")
        throw ConfigError("grid.sizing.profile must be cut or relaxed, got '" + p + "'");
      g.sizing.profile = p == "cut" ? dvr::SizingProfile::cut : dvr::SizingProfile::relaxed;
    }
    get(s, "kinetic_factor", g.sizing.kinetic_factor, "grid.sizing");
    get(s, "margin", g.sizing.margin, "grid.sizing");
    get(s, "r_floor", g.sizing.r_floor, "grid.sizing");
    get(s, "r_ceiling", g.sizing.r_ceiling, "grid.sizing");
    get(s, "min_radial", g.sizing.min_radial, "grid.sizing");
    get(s, "min_angular", g.sizing.min_angular, "grid.sizing");
  }
  if (const auto r = n["radial"]) {
    check_keys(r, "grid.radial", {"r_min", "r_max", "n"});
    dvr::RadialGridSpec spec;
    get(r, "r_min", spec.r_min, "grid.radial");
    get(r, "r_max", spec.r_max, "grid.radial");
    get(r, "n", spec.n, "grid.radial");
    g.radial = spec;
  }
  if (n["n3"])
    g.n3 = n["n3"].as<int>();
}

} // namespace

void RunConfig::validate(bool require_cutoffs) const {
  if (require_cutoffs && grid.v_cut.empty())
    throw ConfigError("grid.v_cut_ev must list at least one cutoff");
  for (double v : grid.v_cut)
    if (!(v > 0.0))
      throw ConfigError("every V_cut must be positive (eV above the minimum)");
  if (!(accuracy_goal > 0.0 && accuracy_goal < 1.0))
    throw ConfigError("accuracy_goal must lie in (0, 1)");
  if (!(grid.contraction_factor > 0.0))
    throw ConfigError("grid.contraction_factor must be positive");
  if (grid.radial)
    grid.radial->validate();
  if (grid.n3 && *grid.n3 < 1)
    throw ConfigError("grid.n3 must be positive");
  if (sequence.n_coeffs < 40 || sequence.n_coeffs % 2 != 0)
    throw ConfigError("sequence.n_coeffs must be even and at least 40");
  if (sequence.start_vectors < 1)
    throw ConfigError("sequence.start_vectors must be at least 1");
  if (inversion.plan.basis_size < 4)
    throw ConfigError("inversion.basis_size must be at least 4");
  if (!(inversion.plan.overlap >= 0.0 && inversion.plan.overlap < 1.0))
    throw ConfigError("inversion.overlap must lie in [0, 1)");
  (void)parities();
  model.corrections.validate();
  model.params.validate();
  if (!(model.v_diss > 0.0))
    throw ConfigError("model.v_diss_ev must be positive");
  if (out_dir.empty())
    throw ConfigError("output.dir must not be empty");
}

std::vector<Parity> RunConfig::parities() const {
  if (parity == "even")
    return {Parity::even};
  if (parity == "odd")
    return {Parity::odd};
  if (parity == "both")
    return {Parity::even, Parity::odd};
  if (parity == "none")
    return {Parity::none};
  throw ConfigError(fmt::format("parity must be even, odd, both or none (got '{}')", parity));
}

RunConfig parse_config(const std::string &text, bool require_cutoffs) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception &e) {
    throw ConfigError(fmt::format("cannot parse configuration: {}", e.what()));
  }
  RunConfig c;
  c.source = text;
  if (!root || root.IsNull()) {
    c.validate(require_cutoffs);
    return c;
  }
  try {
    read_all(root, c);
  } catch (const YAML::Exception &e) {
    throw ConfigError(fmt::format("bad configuration value: {}", e.what()));
  }
  c.validate(require_cutoffs);
  return c;
}

namespace {

void read_all(const YAML::Node &root, RunConfig &c) {
  check_keys(root, "", {"model", "grid", "bounds", "sequence", "inversion", "stats",
                        "accuracy_goal", "parity", "oracle_max_points",
                        "compare_window", "output", "threads"});
  read_model(root["model"], c.model);
  read_grid(root["grid"], c.grid);
  if (const auto b = root["bounds"]) {
    check_keys(b, "bounds", {"probe_iterations", "margin", "seed"});
    get(b, "probe_iterations", c.bounds.probe_iterations, "bounds");
    get(b, "margin", c.bounds.margin, "bounds");
    get(b, "seed", c.bounds.seed, "bounds");
  }
  if (const auto s = root["sequence"]) {
    check_keys(s, "sequence", {"n_coeffs", "start_vectors", "seed", "checkpoint_stride"});
    get(s, "n_coeffs", c.sequence.n_coeffs, "sequence");
    get(s, "start_vectors", c.sequence.start_vectors, "sequence");
    get(s, "seed", c.sequence.seed, "sequence");
    get(s, "checkpoint_stride", c.sequence.checkpoint_stride, "sequence");
  }
  if (const auto s = root["inversion"]) {
    const std::string w = "inversion";
    check_keys(s, w, {"basis_size", "overlap", "spacing_factor", "overlap_threshold",
                      "residual_threshold", "merge_tolerance", "amplitude_floor"});
    get(s, "basis_size", c.inversion.plan.basis_size, w);
    get(s, "overlap", c.inversion.plan.overlap, w);
    get(s, "spacing_factor", c.inversion.plan.spacing_factor, w);
    get(s, "overlap_threshold", c.inversion.options.overlap_threshold, w);
    get(s, "residual_threshold", c.inversion.options.residual_threshold, w);
    get(s, "merge_tolerance", c.inversion.merge_tolerance, w);
    get(s, "amplitude_floor", c.inversion.amplitude_floor, w);
  }
  if (const auto s = root["stats"]) {
    const std::string w = "stats";
    check_keys(s, w, {"unfold", "degree", "median_window", "bins", "s_max",
                      "sliding_window", "sliding_step", "L_values", "averaging_step"});
    if (s["unfold"])
      c.stats.unfold.method = stats::unfold_method_from_string(s["unfold"].as<std::string>());
    get(s, "degree", c.stats.unfold.degree, w);
    get(s, "median_window", c.stats.unfold.window, w);
    get(s, "bins", c.stats.bins, w);
    get(s, "s_max", c.stats.s_max, w);
    get(s, "sliding_window", c.stats.sliding_window, w);
    get(s, "sliding_step", c.stats.sliding_step, w);
    get(s, "L_values", c.stats.L_values, w);
    get(s, "averaging_step", c.stats.averaging_step, w);
  }
  get(root, "accuracy_goal", c.accuracy_goal, "");
  get(root, "parity", c.parity, "");
  get(root, "oracle_max_points", c.oracle_max_points, "");
  get(root, "compare_window", c.compare_window, "");
  get(root, "threads", c.threads, "");
  if (const auto o = root["output"]) {
    check_keys(o, "output", {"dir"});
    std::string d = c.out_dir.string();
    get(o, "dir", d, "output");
    c.out_dir = d;
  }
}

} // namespace

RunConfig load_config(const std::filesystem::path &path, bool require_cutoffs) {
  std::ifstream f(path);
  if (!f)
    throw ConfigError(fmt::format("cannot read configuration {}", path.string()));
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), require_cutoffs);
}

pes::SurfaceModel build_model(const ModelConfig &m) {
  return pes::SurfaceModel(std::make_shared<pes::ReferenceSurface>(m.params),
                           m.corrections, m.v_diss, m.v_no, m.masses, m.domain,
                           pes::Geometry{m.params.stretch.re, m.params.stretch.re,
                                         m.params.beta1});
}

} // namespace chebfd::app
