// Times the OpenMP operator application against the serial reference on a
// grid sized by the standard protocol. Usage: bench_apply_h [v_cut_ev] [reps]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>

#include <fmt/format.h>
#include <omp.h>

#include "chebfd/app.hpp"

using namespace chebfd;

int main(int argc, char **argv) {
  const double vcut_ev = argc > 1 ? std::atof(argv[1]) : 1.0;
  const int reps = argc > 2 ? std::atoi(argv[2]) : 50;
  auto cfg = app::parse_config(fmt::format("grid: {{v_cut_ev: [{}]}}", vcut_ev));
  const auto model = app::build_model(cfg.model);
  const auto g = app::build_grid(cfg, model, 0);
  ham::ScaledHamiltonian h(g.grid, model.masses().m1);
  const std::size_t n = h.size();
  fmt::print("grid: {} points ({}x{}x{}), V_cut {:.3f} eV\n", n, g.grid->n1(),
             g.grid->n2(), g.grid->n3(), vcut_ev);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n), y(n), yr(n);
  for (auto &x : v)
    x = u(rng);

  auto time = [&](auto &&f) {
    f(); // warm-up
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r)
      f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() /
           reps;
  };
  const double ts = time([&] { h.apply_reference(v, yr); });
  fmt::print("{:>10} {:>12} {:>10} {:>12}\n", "threads", "ms/apply", "speedup", "max |diff|");
  fmt::print("{:>10} {:>12.3f} {:>10} {:>12}\n", "serial", 1e3 * ts, "1.00", "-");
  const int max_threads = omp_get_num_procs();
  for (int t = 1; t <= max_threads; t *= 2) {
    set_threads(t);
    const double tp = time([&] { h.apply(v, y); });
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      diff = std::max(diff, std::abs(y[i] - yr[i]));
    fmt::print("{:>10} {:>12.3f} {:>10.2f} {:>12.2e}\n", t, 1e3 * tp, ts / tp, diff);
  }
  return 0;
}
