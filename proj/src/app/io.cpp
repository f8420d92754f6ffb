#include "chebfd/app.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace chebfd::app {

namespace {

using nlohmann::json;

// temp + rename so a crash never leaves a half-written result
void write_atomically(const std::filesystem::path &path, const std::string &text) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f)
      throw ConfigError(fmt::format("cannot write {}", tmp.string()));
    f << text;
    if (!f)
      throw ConfigError(fmt::format("write failed for {}", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

std::string read_all(const std::filesystem::path &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw ConfigError(fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

constexpr const char *csv_header =
    "energy_hartree,energy_ev,energy_cm1,amplitude,error,parity,window_id";

double finite_or(double x, double fallback) { return std::isfinite(x) ? x : fallback; }

} // namespace

void write_levels_csv(const std::filesystem::path &path, const hinv::LevelList &l) {
  std::string s = csv_header;
  s += '\n';
  for (const auto &x : l.lines)
    s += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{}\n", x.energy,
                     x.energy * units::hartree_ev, x.energy * units::hartree_cm1,
                     x.amplitude, finite_or(x.error, -1.0), to_string(x.parity),
                     x.window_id);
  write_atomically(path, s);
}

void write_levels_json(const std::filesystem::path &path, const hinv::LevelList &l) {
  json j;
  j["format"] = "chebfd-levels";
  j["version"] = 1;
  j["provenance"] = l.provenance;
  j["warnings"] = l.warnings;
  json lines = json::array();
  for (const auto &x : l.lines)
    lines.push_back({{"energy_hartree", x.energy},
                     {"energy_ev", x.energy * units::hartree_ev},
                     {"energy_cm1", x.energy * units::hartree_cm1},
                     {"amplitude", x.amplitude},
                     {"error", finite_or(x.error, -1.0)},
                     {"residual", finite_or(x.residual, -1.0)},
                     {"converged", x.converged},
                     {"parity", std::string(to_string(x.parity))},
                     {"window_id", x.window_id}});
  j["levels"] = std::move(lines);
  write_atomically(path, j.dump(1) + "\n");
}

hinv::LevelList read_levels(const std::filesystem::path &path) {
  const auto text = read_all(path);
  hinv::LevelList out;
  const auto ext = path.extension().string();
  if (ext == ".json") {
    try {
      const auto j = json::parse(text);
      if (j.contains("provenance"))
        out.provenance = j["provenance"].get<std::map<std::string, std::string>>();
      if (j.contains("warnings"))
        out.warnings = j["warnings"].get<std::vector<std::string>>();
      for (const auto &x : j.at("levels")) {
        hinv::SpectralLine l;
        l.energy = x.at("energy_hartree").get<double>();
        l.amplitude = x.value("amplitude", 0.0);
        l.error = x.value("error", 0.0);
        l.residual = x.value("residual", 0.0);
        l.converged = x.value("converged", true);
        l.parity = parity_from_string(x.value("parity", std::string("none")));
        l.window_id = x.value("window_id", -1);
        out.lines.push_back(l);
      }
    } catch (const json::exception &e) {
      throw ConfigError(fmt::format("{}: bad level list: {}", path.string(), e.what()));
    }
  } else {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line != csv_header)
      throw ConfigError(fmt::format("{}: unexpected CSV header '{}'", path.string(), line));
    int row = 1;
    while (std::getline(in, line)) {
      ++row;
      if (line.empty())
        continue;
      std::vector<std::string> f;
      std::stringstream ls(line);
      for (std::string cell; std::getline(ls, cell, ',');)
        f.push_back(cell);
      if (f.size() != 7)
        throw ConfigError(fmt::format("{}:{}: expected 7 fields", path.string(), row));
      try {
        hinv::SpectralLine l;
        l.energy = std::stod(f[0]);
        l.amplitude = std::stod(f[3]);
        l.error = std::stod(f[4]);
        l.parity = parity_from_string(f[5]);
        l.window_id = std::stoi(f[6]);
        out.lines.push_back(l);
      } catch (const std::logic_error &) {
        throw ConfigError(fmt::format("{}:{}: malformed number", path.string(), row));
      }
    }
  }
  std::stable_sort(out.lines.begin(), out.lines.end(),
                   [](const auto &a, const auto &b) { return a.energy < b.energy; });
  return out;
}

StatsReport analyze_levels(const std::vector<double> &energies, const StatsConfig &cfg) {
  auto e = energies;
  std::sort(e.begin(), e.end());
  StatsReport r;
  r.unfolded = stats::unfold(e, cfg.unfold);
  r.nnsd = stats::nnsd(r.unfolded, cfg.bins, cfg.s_max);
  const auto &u = r.unfolded.unfolded;
  if (int(u.size()) >= cfg.sliding_window)
    r.sliding = stats::sliding_delta3(u, cfg.sliding_window, cfg.sliding_step);
  std::vector<double> Ls;
  const double span = u.back() - u.front();
  for (double L : cfg.L_values)
    if (L < span)
      Ls.push_back(L);
  if (!Ls.empty())
    r.averaged = stats::averaged_delta3(u, u.front(), u.back(), Ls, cfg.averaging_step);
  return r;
}

void write_stats(const std::filesystem::path &dir, const std::string &stem,
                 const StatsReport &r, const StatsConfig &cfg) {
  std::string nn = "s_lo,s_hi,density,poisson,wigner\n";
  for (std::size_t i = 0; i < r.nnsd.density.size(); ++i) {
    const double mid = 0.5 * (r.nnsd.edges[i] + r.nnsd.edges[i + 1]);
    nn += fmt::format("{:.10g},{:.10g},{:.10g},{:.10g},{:.10g}\n", r.nnsd.edges[i],
                      r.nnsd.edges[i + 1], r.nnsd.density[i], stats::poisson_pdf(mid),
                      stats::wigner_pdf(mid));
  }
  write_atomically(dir / (stem + "_nnsd.csv"), nn);

  std::string sl = "center,first_index,delta3\n";
  for (const auto &p : r.sliding)
    sl += fmt::format("{:.12g},{},{:.10g}\n", p.center, p.first, p.value);
  write_atomically(dir / (stem + "_delta3_sliding.csv"), sl);

  std::string av = "L,mean,rms,windows,poisson,goe\n";
  for (const auto &p : r.averaged)
    av += fmt::format("{:g},{:.10g},{:.10g},{},{:.10g},{:.10g}\n", p.L, p.mean, p.rms,
                      p.windows, p.poisson, p.goe);
  write_atomically(dir / (stem + "_delta3_averaged.csv"), av);

  json j;
  j["levels"] = r.unfolded.energies.size();
  j["unfold"] = {{"method", stats::to_string(r.unfolded.method)},
                 {"parameters", r.unfolded.parameters}};
  j["nnsd"] = {{"bins", cfg.bins},
               {"s_max", cfg.s_max},
               {"spacings", r.nnsd.spacings},
               {"sse_poisson", r.nnsd.sse_poisson},
               {"sse_wigner", r.nnsd.sse_wigner},
               {"ks_poisson", r.nnsd.ks_poisson},
               {"ks_wigner", r.nnsd.ks_wigner},
               {"better", r.nnsd.better}};
  json avj = json::array();
  for (const auto &p : r.averaged)
    avj.push_back({{"L", p.L}, {"mean", p.mean}, {"rms", p.rms}, {"windows", p.windows},
                   {"poisson", p.poisson}, {"goe", p.goe}});
  j["delta3_averaged"] = std::move(avj);
  j["sliding"] = {{"window", cfg.sliding_window},
                  {"step", cfg.sliding_step},
                  {"points", r.sliding.size()}};
  write_atomically(dir / (stem + "_summary.json"), j.dump(1) + "\n");
}

void write_compare_csv(const std::filesystem::path &path, const CompareResult &r) {
  std::string s = "energy_hartree,median_error_hartree,median_density_per_hartree,matched\n";
  for (const auto &w : r.windows)
    s += fmt::format("{:.17g},{:.10g},{:.10g},{}\n", w.energy, w.median_error,
                     w.median_density, w.matched);
  write_atomically(path, s);
}

} // namespace chebfd::app
