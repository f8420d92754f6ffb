#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "chebfd/hinv.hpp"

using namespace chebfd;
using namespace chebfd::hinv;

namespace {

// <Psi_j| T_p(H) |Psi_k> summed term by term.
double brute_element(const std::vector<double> &c, std::size_t m, double a,
                     double b, int p) {
  auto cc = [&](long k) { return c[static_cast<std::size_t>(std::labs(k))]; };
  double s = 0.0;
  for (long n = 0; n < static_cast<long>(m); ++n)
    for (long q = 0; q < static_cast<long>(m); ++q)
      s += std::cos(n * a) * std::cos(q * b) * 0.25 *
           (cc(n + q + p) + cc(n + q - p) + cc(n - q + p) + cc(n - q - p));
  return s;
}

std::vector<double> signal(const std::vector<double> &w,
                           const std::vector<double> &d, std::size_t n) {
  std::vector<double> c(n, 0.0);
  for (std::size_t k = 0; k < w.size(); ++k)
    for (std::size_t i = 0; i < n; ++i)
      c[i] += d[k] * std::cos(static_cast<double>(i) * w[k]);
  return c;
}

} // namespace

TEST_CASE("closed-form window matrices match direct double sums") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t n : {60u, 61u, 90u}) {
    std::vector<double> c(n);
    for (auto &x : c)
      x = u(rng);
    const std::size_t f = 97;
    FilterDiagonalizer fd(c, {}, f);
    const std::size_t m = fd.basis_length();
    const std::vector<std::size_t> idx{1, 2, 3, 17, 30, 47, 48};
    const auto mats = fd.matrices(idx);
    const double h = 2.0 * std::numbers::pi / static_cast<double>(f);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const double a = h * static_cast<double>(idx[j]);
      double ov = 0.0;
      for (std::size_t q = 0; q < m; ++q)
        ov += std::cos(static_cast<double>(q) * a) * c[q];
      CHECK(mats.overlap_vector[j] == doctest::Approx(ov).epsilon(1e-10));
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const double b = h * static_cast<double>(idx[k]);
        const double e0 = brute_element(c, m, a, b, 0);
        const double e1 = brute_element(c, m, a, b, 1);
        const double e2 = brute_element(c, m, a, b, 2);
        const std::size_t jk = j * idx.size() + k;
        CHECK(mats.u0[jk] == doctest::Approx(e0).epsilon(1e-9).scale(1.0));
        CHECK(mats.u1[jk] == doctest::Approx(e1).epsilon(1e-9).scale(1.0));
        CHECK(mats.uh2[jk] ==
              doctest::Approx(0.5 * (e2 + e0)).epsilon(1e-9).scale(1.0));
      }
    }
  }
}

TEST_CASE("single line is recovered to near machine precision") {
  const auto c = signal({1.0}, {1.0}, 2000);
  Window w{std::cos(1.1), std::cos(0.9), 12};
  const auto lines = harmonic_invert(c, {}, w);
  REQUIRE(lines.size() == 1);
  CHECK(std::abs(lines[0].omega - 1.0) < 1e-10);
  CHECK(lines[0].amplitude == doctest::Approx(1.0).epsilon(1e-8));
}

namespace {

struct Synthetic {
  std::vector<double> w, d, c;
};

Synthetic random_signal(std::size_t lines, std::size_t n, std::uint64_t seed) {
  Synthetic s;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uw(0.1, 3.0), ud(0.1, 1.0);
  for (std::size_t k = 0; k < lines; ++k) {
    s.w.push_back(uw(rng));
    s.d.push_back(ud(rng));
  }
  s.c = signal(s.w, s.d, n);
  return s;
}

LevelList invert_all(const std::vector<double> &c, int basis = 120) {
  const SpectralScaling sc{};
  PlanOptions po;
  po.basis_size = basis;
  const double lo = std::cos(3.05), hi = std::cos(0.05);
  const auto plan = plan_windows(lo, hi, sc, c.size(), po);
  FilterDiagonalizer engine(c, sc, plan.grid_size);
  MergeOptions mo;
  mo.c0 = c[0];
  return invert_plan(engine, plan, lo, hi, mo, Parity::none);
}

const SpectralLine *nearest(const LevelList &l, double omega) {
  const SpectralLine *best = nullptr;
  for (const auto &x : l.lines)
    if (!best || std::abs(x.omega - omega) < std::abs(best->omega - omega))
      best = &x;
  return best;
}

} // namespace

TEST_CASE("forty random lines: frequencies, amplitudes, completeness") {
  const auto s = random_signal(40, 8000, 11);
  const auto out = invert_all(s.c, 60);
  CHECK(out.lines.size() == 40);
  for (std::size_t k = 0; k < s.w.size(); ++k) {
    const auto *l = nearest(out, s.w[k]);
    REQUIRE(l != nullptr);
    CHECK(std::abs(l->omega - s.w[k]) < 1e-9);
    CHECK(std::abs(l->amplitude - s.d[k]) < 1e-6);
  }
  CHECK(out.warnings.empty());
}

TEST_CASE("scaling the sequence scales amplitudes only") {
  const auto s = random_signal(20, 4000, 3);
  std::vector<double> scaled = s.c;
  for (auto &x : scaled)
    x *= 7.5;
  const auto a = invert_all(s.c, 60);
  const auto b = invert_all(scaled, 60);
  REQUIRE(a.lines.size() == b.lines.size());
  for (std::size_t i = 0; i < a.lines.size(); ++i) {
    CHECK(std::abs(a.lines[i].omega - b.lines[i].omega) < 1e-12);
    CHECK(b.lines[i].amplitude ==
          doctest::Approx(7.5 * a.lines[i].amplitude).epsilon(1e-6));
  }
}

TEST_CASE("returned frequencies lie strictly inside their window") {
  const auto s = random_signal(30, 6000, 5);
  FilterDiagonalizer engine(s.c, {}, 6000);
  const double h = engine.spacing();
  for (std::size_t lo = 40; lo + 60 < 1400; lo += 53) {
    const auto r = engine.invert_range(lo, lo + 59);
    for (const auto &l : r.lines) {
      CHECK(l.omega > h * static_cast<double>(lo));
      CHECK(l.omega < h * static_cast<double>(lo + 59));
    }
  }
}

TEST_CASE("window outside the scaled range is an error") {
  const auto c = signal({1.0}, {1.0}, 400);
  CHECK_THROWS_AS(harmonic_invert(c, {}, Window{-1.2, 0.0, 20}),
                  NumericalError);
  CHECK_THROWS_AS(harmonic_invert(c, {}, Window{0.5, 0.2, 20}), NumericalError);
  FilterDiagonalizer engine(c, {}, 400);
  const auto r = engine.invert_range(0, 10);
  CHECK(r.rejected);
}

TEST_CASE("empty window is rejected with a diagnostic") {
  std::vector<double> c(400, 0.0);
  FilterDiagonalizer engine(c, {}, 400);
  const auto r = engine.invert_range(20, 40);
  CHECK(r.rejected);
  CHECK(!r.diagnostic.empty());
}

TEST_CASE("duplicate line from two windows merges to one") {
  const auto c = signal({1.0}, {1.0}, 2000);
  FilterDiagonalizer engine(c, {}, 1998);
  const double h = engine.spacing();
  const auto l0 = static_cast<std::size_t>(std::lround(1.0 / h));
  auto a = engine.invert_range(l0 - 20, l0 + 5, 0);
  auto b = engine.invert_range(l0 - 5, l0 + 20, 1);
  REQUIRE(a.lines.size() == 1);
  REQUIRE(b.lines.size() == 1);
  std::vector<SpectralLine> all{a.lines[0], b.lines[0]};
  const std::vector<Window> ws{{std::cos(1.2), std::cos(0.8), 26}};
  const auto merged =
      merge_and_dedupe(all, ws, std::cos(1.1), std::cos(0.9), {});
  CHECK(merged.lines.size() == 1);
  CHECK(merged.warnings.empty());
}

TEST_CASE("merge drops tiny amplitudes and reports coverage gaps") {
  SpectralLine real{1.0, std::cos(1.0), 0.5, 1e-12, 0.0, Parity::none, 0, true};
  SpectralLine fake{1.2, std::cos(1.2), 1e-13, 1e-12, 0.0, Parity::none, 0,
                    true};
  const std::vector<Window> ws{{0.2, 0.6, 10}};
  const auto m = merge_and_dedupe({real, fake}, ws, 0.1, 0.7, {});
  REQUIRE(m.lines.size() == 1);
  CHECK(m.lines[0].amplitude == 0.5);
  CHECK(m.warnings.size() == 2);
}

TEST_CASE("two lines of one window are never merged") {
  SpectralLine a{1.0, 0.5, 0.5, 1e-6, 0.0, Parity::even, 3, true};
  SpectralLine b = a;
  b.energy = 0.5 + 2e-6;
  const std::vector<Window> ws{{0.0, 1.0, 10}};
  const auto m = merge_and_dedupe({a, b}, ws, 0.1, 0.9, {});
  CHECK(m.lines.size() == 2);
}

TEST_CASE("periodic signal: half-sequence errors at noise floor") {
  const auto s = random_signal(10, 4000, 9);
  const std::vector<double> half(s.c.begin(), s.c.begin() + 2000);
  const auto full = invert_all(s.c, 60);
  const auto h = invert_all(half, 60);
  const auto conv = convergence_error(full.lines, h.lines);
  REQUIRE(conv.size() == 10);
  for (const auto &e : conv) {
    CHECK(e.converged);
    CHECK(e.error < 1e-12);
  }
}

TEST_CASE("undersampled signal flags the dense lines as unconverged") {
  // a cluster of lines spaced 3e-4 cannot be resolved from 400 terms
  std::vector<double> w{0.5, 1.0, 1.0003, 1.0006, 1.0009, 2.0};
  std::vector<double> d(w.size(), 1.0);
  const auto c = signal(w, d, 4000);
  const std::vector<double> half(c.begin(), c.begin() + 400);
  const auto full = invert_all(c, 60);
  REQUIRE(full.lines.size() == w.size());
  const auto h = invert_all(half, 20);
  const auto conv = convergence_error(full.lines, h.lines);
  int bad = 0;
  for (std::size_t i = 0; i < conv.size(); ++i)
    if (!conv[i].converged) {
      ++bad;
      CHECK(std::abs(full.lines[i].omega - 1.00045) < 1e-3);
    }
  CHECK(bad > 0);
}
