#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace chebfd {

// Atomic units internally. Conversion factors follow the values used for
// the NO2 calculations this package was written for.
namespace units {
inline constexpr double hartree_ev = 27.211396;
inline constexpr double bohr_m = 0.529177e-10;
inline constexpr double hartree_cm1 = 219474.6313705;
inline constexpr double amu_me = 1822.888486;
inline constexpr double deg = 3.14159265358979323846 / 180.0;
} // namespace units

/// Raised when a geometry leaves the declared validity domain of a surface.
class DomainError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad or inconsistent user-supplied parameters.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A numerical stage could not produce a trustworthy result.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Checkpoint unreadable, corrupt, or incompatible with the current run.
class CheckpointError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Symmetry under exchange of the two radial coordinates.
enum class Parity { even, odd, none };

std::string_view to_string(Parity p);
Parity parity_from_string(std::string_view s);

/// 64-bit FNV-1a; used for grid content hashes and checkpoint integrity.
class Fnv1a {
public:
  void update(const void *data, std::size_t bytes);
  void update(double x) { update(&x, sizeof x); }
  void update(std::int64_t x) { update(&x, sizeof x); }
  void update(std::string_view s) { update(s.data(), s.size()); }
  std::uint64_t digest() const { return h_; }

private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

std::string hex64(std::uint64_t v);

/// Dot product with Neumaier-compensated summation over fixed-size chunks.
/// Chunk partials are combined serially in chunk order, so the result does
/// not depend on the number of OpenMP threads.
double compensated_dot(std::span<const double> a, std::span<const double> b);

/// Sets the OpenMP thread count when n > 0; returns the count in effect.
int set_threads(int n);

} // namespace chebfd
