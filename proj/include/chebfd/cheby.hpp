#pragma once

// Chebyshev correlation sequence c_n = <xi_0 | T_n(Hs) | xi_0> by the
// three-term recursion, emitting two coefficients per matrix-vector product:
//   c_{2n}   = 2 <xi_n | xi_n> - c_0
//   c_{2n-1} = 2 <xi_{n-1} | xi_n> - c_1

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "chebfd/hamiltonian.hpp"

namespace chebfd::cheby {

struct ChebyshevSequence {
  std::vector<double> c;
  std::uint64_t grid_hash = 0;
  std::uint64_t config_hash = 0; // caller-defined run fingerprint
  hinv::SpectralScaling scaling;
  Parity parity = Parity::none;
  std::uint64_t seed = 0;
  std::uint64_t steps = 0; // matrix-vector products performed
};

struct Progress {
  std::uint64_t steps = 0;
  std::uint64_t total_steps = 0;
  double seconds = 0.0;
};

struct CheckpointPolicy {
  std::filesystem::path path;      // empty: no checkpoints
  std::uint64_t stride = 0;        // steps between checkpoints; 0 = only at the end
  bool resume = false;             // continue from `path` if it exists
  std::uint64_t stop_after = 0;    // stop after this many steps (testing); 0 = run to the end
  std::function<void(const Progress &)> progress;
  std::uint64_t progress_every = 1000;
};

struct SequenceRequest {
  std::size_t n_coeffs = 0; // even
  Parity parity = Parity::none;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

/// Runs the recursion from xi0 (unit norm). Throws NumericalError when some
/// |c_n| exceeds 10 c_0 (the scaled spectrum escaped [-1, 1]). With
/// `stop_after` set the returned sequence is partial (fewer coefficients).
ChebyshevSequence generate_sequence(const ham::ScaledHamiltonian &h,
                                    std::span<const double> xi0,
                                    const SequenceRequest &request,
                                    const CheckpointPolicy &policy = {});

/// Checkpoint / sequence file. Little-endian IEEE doubles and integers:
/// a fixed header (magic, version, hashes, scaling, parity, seed, counts),
/// the coefficients, optionally the two live recursion vectors, and a
/// trailing FNV-1a checksum over everything before it.
struct CheckpointData {
  ChebyshevSequence sequence;
  std::uint64_t target_coeffs = 0;
  std::vector<double> prev, cur; // xi_{n-1}, xi_n; empty in final files
};

void write_checkpoint(const std::filesystem::path &path, const CheckpointData &d);
CheckpointData read_checkpoint(const std::filesystem::path &path);

void write_sequence(const std::filesystem::path &path, const ChebyshevSequence &s);
ChebyshevSequence read_sequence(const std::filesystem::path &path);

} // namespace chebfd::cheby
