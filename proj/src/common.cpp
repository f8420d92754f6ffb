#include "chebfd/common.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

#include <omp.h>

namespace chebfd {

std::string_view to_string(Parity p) {
  switch (p) {
  case Parity::even:
    return "even";
  case Parity::odd:
    return "odd";
  case Parity::none:
    return "none";
  }
  return "none";
}

Parity parity_from_string(std::string_view s) {
  if (s == "even")
    return Parity::even;
  if (s == "odd")
    return Parity::odd;
  if (s == "none")
    return Parity::none;
  throw ConfigError("unknown parity '" + std::string(s) + "'");
}

void Fnv1a::update(const void *data, std::size_t bytes) {
  const auto *p = static_cast<const unsigned char *>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h_ ^= p[i];
    h_ *= 0x100000001b3ULL;
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

struct Neumaier {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

constexpr std::size_t kChunk = 4096;

} // namespace

double compensated_dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const std::size_t nchunks = (n + kChunk - 1) / kChunk;
  std::vector<Neumaier> partial(nchunks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(nchunks); ++c) {
    Neumaier acc;
    const std::size_t lo = static_cast<std::size_t>(c) * kChunk;
    const std::size_t hi = std::min(n, lo + kChunk);
    for (std::size_t i = lo; i < hi; ++i)
      acc.add(a[i] * b[i]);
    partial[c] = acc;
  }
  Neumaier total;
  for (const auto &p : partial) {
    total.add(p.sum);
    total.add(p.comp);
  }
  return total.value();
}

int set_threads(int n) {
  if (n > 0)
    omp_set_num_threads(n);
  return omp_get_max_threads();
}

} // namespace chebfd
