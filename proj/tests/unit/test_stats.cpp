#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "chebfd/common.hpp"
#include "chebfd/stats.hpp"
#include "support/samples.hpp"

using namespace chebfd;
using namespace chebfd::stats;

namespace {

// Delta_3 by brute force: midpoint sampling of the staircase and a discrete
// least-squares line.
double delta3_sampled(const std::vector<double> &levels, double x0, double x1,
                      int m) {
  double s0 = 0, s1 = 0, s2 = 0, sn = 0, sxn = 0, snn = 0;
  const double h = (x1 - x0) / m;
  for (int i = 0; i < m; ++i) {
    const double x = x0 + (i + 0.5) * h;
    double n = 0;
    for (double e : levels)
      n += e <= x ? 1.0 : 0.0;
    s0 += 1;
    s1 += x;
    s2 += x * x;
    sn += n;
    sxn += x * n;
    snn += n * n;
  }
  const double det = s2 * s0 - s1 * s1;
  const double a = (sxn * s0 - s1 * sn) / det;
  const double b = (s2 * sn - s1 * sxn) / det;
  return (snn - a * sxn - b * sn) / s0;
}

double mean_spacing(const std::vector<double> &u) {
  return (u.back() - u.front()) / static_cast<double>(u.size() - 1);
}

} // namespace

TEST_CASE("unfolding methods") {
  const auto fence = samples::picket_fence(50, 3.0);
  const auto id = unfold(fence, {UnfoldMethod::none});
  CHECK(id.unfolded == fence);

  std::vector<double> sq;
  for (int n = 1; n <= 400; ++n)
    sq.push_back(static_cast<double>(n) * n);
  const auto p = unfold(sq, {UnfoldMethod::polynomial, 3});
  CHECK(mean_spacing(p.unfolded) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(p.unfolded.size() == sq.size());

  const auto poi = samples::poisson(10000, 21);
  for (auto m : {UnfoldMethod::none, UnfoldMethod::polynomial, UnfoldMethod::local_median}) {
    const auto u = unfold(poi, {m, 5, 100});
    CHECK(std::abs(mean_spacing(u.unfolded) - 1.0) < 1e-2);
    CHECK(std::abs(mean_spacing(u.unfolded) - 1.0) < 1e-6);
    bool increasing = true;
    for (std::size_t i = 1; i < u.unfolded.size(); ++i)
      increasing = increasing && u.unfolded[i] > u.unfolded[i - 1];
    CHECK(increasing);
    CHECK(u.unfolded.size() == poi.size());
  }

  std::vector<double> bad = samples::picket_fence(20);
  std::swap(bad[4], bad[5]);
  bad[12] = bad[11];
  try {
    unfold(bad);
    CHECK(false);
  } catch (const ConfigError &e) {
    const std::string msg = e.what();
    CHECK(msg.find("2 pair") != std::string::npos);
    CHECK(msg.find("4:") != std::string::npos);
  }
  CHECK_THROWS_AS(unfold(samples::picket_fence(5)), ConfigError);
  CHECK(unfold_method_from_string("local_median") == UnfoldMethod::local_median);
  CHECK_THROWS_AS(unfold_method_from_string("spline"), ConfigError);
}

TEST_CASE("spacing distributions") {
  const auto fence = unfold(samples::picket_fence(200), {UnfoldMethod::none});
  const auto f = nnsd(fence, 40, 4.0);
  const double w = f.edges[1] - f.edges[0];
  double area = 0.0;
  int nonzero = 0;
  for (double d : f.density) {
    area += d * w;
    nonzero += d > 0.0;
  }
  CHECK(area == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(nonzero == 1);
  CHECK(f.ks_poisson > 0.3);
  CHECK(f.ks_wigner > 0.3);

  const auto poi = unfold(samples::poisson(10000, 3), {UnfoldMethod::polynomial, 5});
  const auto p = nnsd(poi);
  CHECK(p.better == "poisson");
  CHECK(p.ks_poisson < 0.02);
  CHECK(p.ks_wigner > 0.1);
  area = 0.0;
  for (std::size_t b = 0; b < p.density.size(); ++b)
    area += p.density[b] * (p.edges[b + 1] - p.edges[b]);
  CHECK(area == doctest::Approx(1.0).epsilon(1e-9));

  std::vector<double> goe;
  for (int r = 0; r < 4; ++r) {
    const auto u = unfold(samples::goe_central(400, 50 + r), {UnfoldMethod::polynomial, 5});
    const double off = goe.empty() ? 0.0 : goe.back() + 1.0;
    for (double x : u.unfolded)
      goe.push_back(x - u.unfolded.front() + off);
  }
  UnfoldedLevels g;
  g.unfolded = goe;
  const auto r = nnsd(g);
  CHECK(r.better == "wigner");
  CHECK(r.ks_wigner < 0.05);
  CHECK(r.ks_poisson > 0.15);
}

TEST_CASE("Delta_3 exact evaluation") {
  // two levels: compare with sampled quadrature
  const std::vector<double> two = {0.3, 1.1};
  CHECK(delta3(two, 0.0, 1.5) == doctest::Approx(delta3_sampled(two, 0.0, 1.5, 400000)).epsilon(1e-6));
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int k = 0; k < 5; ++k) {
    std::vector<double> lv = {u(rng), u(rng), u(rng), u(rng)};
    std::sort(lv.begin(), lv.end());
    const double a = lv.front() - 0.5, b = lv.back() + 0.7;
    CHECK(std::abs(delta3(lv, a, b) - delta3_sampled(lv, a, b, 4000000)) < 1e-6);
  }
  const auto fence = samples::picket_fence(400);
  CHECK(delta3(fence, 100.0, 300.0) == doctest::Approx(1.0 / 12.0).epsilon(1e-3));
  CHECK(delta3(fence, 100.0, 300.0) <= 1.0 / 12.0 + 1e-3);
  CHECK_THROWS_AS(delta3(fence, 10.2, 10.8), ConfigError);
  CHECK_THROWS_AS(delta3(fence, 5.0, 5.0), ConfigError);

  // affine invariance
  const auto poi = samples::poisson(500, 4);
  std::vector<double> moved;
  for (double e : poi)
    moved.push_back(3.7 * e - 12.5);
  for (double x0 : {10.0, 50.0, 200.0}) {
    const double v = delta3(poi, x0, x0 + 80.0);
    const double w = delta3(moved, 3.7 * x0 - 12.5, 3.7 * (x0 + 80.0) - 12.5);
    CHECK(std::abs(v - w) <= 1e-10 * std::max(1.0, v));
    CHECK(v >= 0.0);
  }
}

TEST_CASE("averaged Delta_3") {
  const auto fence = samples::picket_fence(500);
  const std::vector<double> Ls = {10, 20, 50, 100};
  for (const auto &p : averaged_delta3(fence, 0.0, 499.0, Ls))
    CHECK(p.mean <= 1.0 / 12.0 + 1e-3);

  const auto poi = unfold(samples::poisson(10000, 77), {UnfoldMethod::polynomial, 5});
  const std::vector<double> small = {2, 5, 10, 20, 35, 50};
  const auto av = averaged_delta3(poi.unfolded, poi.unfolded.front(),
                                  poi.unfolded.back(), small, 2.0);
  for (const auto &p : av) {
    CHECK(std::abs(p.mean - p.L / 15.0) < 2.0 * p.rms);
    CHECK(p.poisson == doctest::Approx(p.L / 15.0));
  }
  CHECK(goe_delta3_reference(100.0) == doctest::Approx(0.46));
  CHECK_THROWS_AS(averaged_delta3(fence, 0.0, 50.0, Ls), ConfigError);
}

TEST_CASE("sliding Delta_3") {
  const auto fence = samples::picket_fence(300);
  const auto s = sliding_delta3(fence, 100, 10);
  CHECK(s.size() == 21);
  for (const auto &p : s)
    CHECK(p.value <= 1.0 / 12.0 + 1e-9);
  CHECK(s[0].center == doctest::Approx(49.5));

  // GOE block followed by a Poisson block
  std::vector<double> levels;
  for (int r = 0; r < 3; ++r) {
    const auto u = unfold(samples::goe_central(400, 900 + r), {UnfoldMethod::polynomial, 5});
    const double off = levels.empty() ? 0.0 : levels.back() + 1.0;
    for (double x : u.unfolded)
      levels.push_back(x - u.unfolded.front() + off);
  }
  const std::size_t seam = levels.size();
  std::mt19937_64 rng(5);
  std::exponential_distribution<double> gap(1.0);
  for (int i = 0; i < 600; ++i)
    levels.push_back(levels.back() + gap(rng));
  const auto series = sliding_delta3(levels, 100, 10);
  double before = 0.0, after = 0.0;
  int nb = 0, na = 0;
  for (const auto &p : series) {
    if (p.first + 100 <= seam) {
      before += p.value;
      ++nb;
    } else if (p.first >= seam) {
      after += p.value;
      ++na;
    }
  }
  before /= nb;
  after /= na;
  CHECK(before < 0.8);
  CHECK(after > 3.0);

  // shifts of up to 0.5% of a spacing barely move the series
  std::uniform_real_distribution<double> jitter(-0.005, 0.005);
  std::vector<double> shaken = levels;
  for (std::size_t i = 0; i < shaken.size(); ++i) {
    const double local = i + 1 < levels.size() ? levels[i + 1] - levels[i]
                                               : levels[i] - levels[i - 1];
    const double prev_gap = i > 0 ? levels[i] - levels[i - 1] : local;
    shaken[i] += jitter(rng) * std::min(local, prev_gap);
  }
  const auto series2 = sliding_delta3(shaken, 100, 10);
  REQUIRE(series2.size() == series.size());
  for (std::size_t k = 0; k < series.size(); ++k)
    CHECK(std::abs(series2[k].value - series[k].value) < 0.1 * series[k].value);
}
