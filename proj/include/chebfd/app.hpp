#pragma once

// Run configuration and the end-to-end pipeline used by the command line
// tool: grid -> Chebyshev sequences -> harmonic inversion -> level lists.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chebfd/cheby.hpp"
#include "chebfd/dvr.hpp"
#include "chebfd/hamiltonian.hpp"
#include "chebfd/hinv.hpp"
#include "chebfd/pes.hpp"
#include "chebfd/stats.hpp"

namespace chebfd::app {

struct ModelConfig {
  pes::ReferenceParams params;
  pes::Corrections corrections;
  double v_diss = 3.226 / units::hartree_ev;
  pes::MorseCurve v_no{6.5 / units::hartree_ev, 1.5, 2.175};
  pes::Masses masses = pes::no2_masses();
  pes::ValidityDomain domain;
};

struct GridConfig {
  std::vector<double> v_cut; // hartree, above the potential minimum
  dvr::SizingOptions sizing;
  /// 1D contraction cutoff above the minimum of the radial cut, as a
  /// multiple of V_cut (relative to the potential minimum).
  double contraction_factor = 1.5;
  std::optional<dvr::RadialGridSpec> radial; // overrides the sizing protocol
  std::optional<int> n3;
};

struct SequenceConfig {
  std::size_t n_coeffs = 20000;
  int start_vectors = 2; // independent random start vectors per parity
  std::uint64_t seed = 1;
  std::uint64_t checkpoint_stride = 5000;
};

struct InversionConfig {
  hinv::PlanOptions plan;
  hinv::InversionOptions options;
  double merge_tolerance = 1e-9;
  double amplitude_floor = 1e-10;
};

struct StatsConfig {
  stats::UnfoldOptions unfold;
  int bins = 40;
  double s_max = 4.0;
  int sliding_window = 100;
  int sliding_step = 10;
  std::vector<double> L_values = {2, 5, 10, 20, 30, 50};
  double averaging_step = 1.0;
};

struct RunConfig {
  ModelConfig model;
  GridConfig grid;
  ham::BoundsOptions bounds;
  SequenceConfig sequence;
  InversionConfig inversion;
  StatsConfig stats;
  double accuracy_goal = 1e-4;  // relative
  std::string parity = "both";  // even | odd | both
  std::size_t oracle_max_points = 3000;
  int compare_window = 100;
  std::filesystem::path out_dir = "out";
  int threads = 0;
  std::string source; // text of the loaded file (for hashing)

  /// `require_cutoffs = false` accepts an empty V_cut list (commands that
  /// never build a grid).
  void validate(bool require_cutoffs = true) const;
  std::vector<Parity> parities() const;
};

/// Loads a YAML run file; unspecified keys keep their defaults.
RunConfig load_config(const std::filesystem::path &path, bool require_cutoffs = true);
RunConfig parse_config(const std::string &yaml_text, bool require_cutoffs = true);

pes::SurfaceModel build_model(const ModelConfig &m);

struct GridBuild {
  double v_cut = 0.0;           // absolute, hartree
  double v_min = 0.0;           // potential at the reference geometry
  dvr::GridSizing sizing;
  double contraction_cutoff = 0.0;
  int primitive_radial = 0;
  std::shared_ptr<const dvr::TruncatedGrid> grid;
  std::vector<std::string> warnings;
};

GridBuild build_grid(const RunConfig &cfg, const pes::SurfaceModel &model,
                     std::size_t vcut_index);

/// Key-value manifest describing a grid (for checkpoint compatibility).
std::string grid_manifest(const GridBuild &g, double radial_mass);

/// Fingerprint of everything that influences a sequence besides the grid.
std::uint64_t sequence_config_hash(const RunConfig &cfg,
                                   const hinv::SpectralScaling &s);

struct ParityRun {
  Parity parity = Parity::none;
  hinv::LevelList levels;
  std::vector<cheby::ChebyshevSequence> sequences;
  double seconds_sequence = 0.0;
  double seconds_inversion = 0.0;
};

struct CutoffRun {
  GridBuild grid;
  ham::SpectralBounds bounds;
  std::vector<ParityRun> parities;
  ham::OperatorCounters counters;
};

struct PipelineOptions {
  bool resume = false;
  bool write_files = true;
  std::function<void(const std::string &)> log;
};

/// Inverts the sequences of one parity (full and half length) and merges
/// all start vectors; line errors are |E_full - E_half|.
hinv::LevelList invert_sequences(const std::vector<cheby::ChebyshevSequence> &seqs,
                                 const RunConfig &cfg, double e_lo, double e_hi,
                                 Parity parity);

CutoffRun run_cutoff(const RunConfig &cfg, const pes::SurfaceModel &model,
                     std::size_t vcut_index, const PipelineOptions &opts = {});

std::vector<CutoffRun> run_pipeline(const RunConfig &cfg,
                                    const PipelineOptions &opts = {});

/// Dense diagonalization on a small grid, block by block in the symmetry
/// adapted basis; returns the levels below V_cut with parity labels.
struct OracleResult {
  hinv::LevelList levels;
  double max_parity_defect = 0.0; // largest even-odd coupling element
  std::size_t points = 0;
};

OracleResult oracle_diagonalize(const ham::ScaledHamiltonian &h,
                                std::size_t max_points = 3000);

struct CompareWindow {
  double energy = 0.0;         // median energy of the window
  double median_error = 0.0;   // hartree
  double median_density = 0.0; // levels per hartree
  std::size_t matched = 0;
};

struct CompareResult {
  std::vector<CompareWindow> windows;
  std::vector<std::pair<double, double>> pairs; // matched (A, B)
  std::vector<double> unmatched_a, unmatched_b;
  double match_rate = 0.0;
  std::vector<std::string> warnings;
};

/// Greedy nearest matching within half the local mean spacing (or `tolerance`
/// when positive); medians over windows of `window` matched levels of A.
CompareResult compare_runs(const std::vector<double> &a, const std::vector<double> &b,
                           int window = 100, double tolerance = 0.0);

// --- files --------------------------------------------------------------

void write_levels_csv(const std::filesystem::path &path, const hinv::LevelList &l);
void write_levels_json(const std::filesystem::path &path, const hinv::LevelList &l);
/// Reads either format (chosen by extension).
hinv::LevelList read_levels(const std::filesystem::path &path);

struct StatsReport {
  stats::UnfoldedLevels unfolded;
  stats::NnsdResult nnsd;
  std::vector<stats::SlidingPoint> sliding;
  std::vector<stats::AveragedPoint> averaged;
};

StatsReport analyze_levels(const std::vector<double> &energies, const StatsConfig &cfg);
void write_stats(const std::filesystem::path &dir, const std::string &stem,
                 const StatsReport &r, const StatsConfig &cfg);
void write_compare_csv(const std::filesystem::path &path, const CompareResult &r);

std::string levels_stem(std::size_t vcut_index, Parity p);

} // namespace chebfd::app
