#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "chebfd/cheby.hpp"
#include "support/fixtures.hpp"

using namespace chebfd;
using namespace chebfd::cheby;
using Eigen::MatrixXd;

namespace {

// Scaled Rayleigh quotient through the operator itself, so the reference
// frequency carries no eigensolver roundoff.
double scaled_rq(const ham::ScaledHamiltonian &h, const std::vector<double> &v) {
  std::vector<double> hv(v.size());
  h.apply_scaled(v, hv);
  return compensated_dot(v, hv) / compensated_dot(v, v);
}

struct Setup {
  std::shared_ptr<const dvr::TruncatedGrid> grid;
  std::unique_ptr<ham::ScaledHamiltonian> h;
};

Setup setup(const fixtures::TinySpec &spec = {}) {
  Setup s;
  s.grid = fixtures::tiny_grid(spec);
  s.h = std::make_unique<ham::ScaledHamiltonian>(s.grid,
                                                 fixtures::model().masses().m1);
  s.h->set_scaling(ham::estimate_spectral_bounds(*s.h).scaling);
  return s;
}

std::filesystem::path temp_path(const std::string &name) {
  auto dir = std::filesystem::temp_directory_path() / "chebfd_tests";
  std::filesystem::create_directories(dir);
  auto p = dir / name;
  std::filesystem::remove(p);
  return p;
}

} // namespace

TEST_CASE("eigenvector start gives pure cosines") {
  auto s = setup();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(ham::dense_matrix(*s.h));
  const auto n = static_cast<std::size_t>(eig.eigenvalues().size());
  for (Eigen::Index k : {Eigen::Index{0}, Eigen::Index{5}, eig.eigenvalues().size() - 1}) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
      v[i] = eig.eigenvectors()(static_cast<Eigen::Index>(i), k);
    const auto seq = generate_sequence(*s.h, v, {600});
    const double w = std::acos(scaled_rq(*s.h, v));
    double err = 0.0;
    for (std::size_t j = 0; j < seq.c.size(); ++j)
      err = std::max(err, std::abs(seq.c[j] - std::cos(static_cast<double>(j) * w)));
    CHECK(err < 1e-12);
  }
  // two-state superposition
  std::vector<double> v(n);
  const Eigen::Index a = 2, b = 9;
  for (std::size_t i = 0; i < n; ++i)
    v[i] = (eig.eigenvectors()(static_cast<Eigen::Index>(i), a) +
            eig.eigenvectors()(static_cast<Eigen::Index>(i), b)) /
           std::sqrt(2.0);
  const auto seq = generate_sequence(*s.h, v, {600});
  auto column = [&](Eigen::Index k) {
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i)
      u[i] = eig.eigenvectors()(static_cast<Eigen::Index>(i), k);
    return u;
  };
  const double wa = std::acos(scaled_rq(*s.h, column(a)));
  const double wb = std::acos(scaled_rq(*s.h, column(b)));
  double err = 0.0;
  for (std::size_t j = 0; j < seq.c.size(); ++j) {
    const double x = static_cast<double>(j);
    err = std::max(err, std::abs(seq.c[j] - 0.5 * (std::cos(x * wa) + std::cos(x * wb))));
  }
  CHECK(err < 1e-12);
}

TEST_CASE("doubling agrees with direct projections") {
  auto s = setup();
  const auto xi0 = ham::random_parity_vector(*s.grid, Parity::none, 17);
  const auto seq = generate_sequence(*s.h, xi0, {400});
  REQUIRE(seq.c.size() == 400);
  CHECK(seq.c[0] == doctest::Approx(1.0).epsilon(1e-15));
  std::vector<double> hx(xi0.size());
  s.h->apply_scaled(xi0, hx);
  CHECK(seq.c[1] == compensated_dot(xi0, hx));

  // plain recursion with every vector, c_n = <xi_0 | xi_n>
  std::vector<double> prev = xi0, cur = hx, next(xi0.size());
  std::vector<double> direct = {compensated_dot(xi0, xi0), compensated_dot(xi0, cur)};
  for (int k = 2; k < 400; ++k) {
    s.h->apply_scaled(cur, next, 2.0, -1.0, prev);
    direct.push_back(compensated_dot(xi0, next));
    prev.swap(cur);
    cur.swap(next);
  }
  for (std::size_t k = 0; k < 400; ++k)
    CHECK(std::abs(seq.c[k] - direct[k]) < 1e-12);
}

TEST_CASE("boundedness over a long run") {
  auto s = setup();
  const auto xi0 = ham::random_parity_vector(*s.grid, Parity::even, 4);
  const auto seq = generate_sequence(*s.h, xi0, {4000, Parity::even, 4});
  for (double c : seq.c)
    CHECK(std::abs(c) <= seq.c[0] + 1e-10);
  CHECK(seq.steps == 2000);
}

TEST_CASE("divergence detector") {
  auto s = setup();
  auto sc = s.h->scaling();
  sc.half_width *= 0.5; // spectrum now leaves [-1, 1]
  s.h->set_scaling(sc);
  const auto xi0 = ham::random_parity_vector(*s.grid, Parity::none, 1);
  CHECK_THROWS_AS(generate_sequence(*s.h, xi0, {2000}), NumericalError);
  CHECK_THROWS_AS(generate_sequence(*s.h, xi0, {7}), ConfigError);
}

TEST_CASE("checkpoint resume is bit-identical") {
  auto s = setup();
  const auto xi0 = ham::random_parity_vector(*s.grid, Parity::odd, 8);
  const SequenceRequest req{8000, Parity::odd, 8, 123};
  const auto full = generate_sequence(*s.h, xi0, req);

  const auto path = temp_path("resume.ckpt");
  CheckpointPolicy stop;
  stop.path = path;
  stop.stride = 300;
  stop.stop_after = 1000;
  const auto part = generate_sequence(*s.h, xi0, req, stop);
  CHECK(part.steps == 1000);
  CHECK(std::filesystem::exists(path));
  CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));

  CheckpointPolicy resume;
  resume.path = path;
  resume.resume = true;
  int calls = 0;
  resume.progress = [&](const Progress &p) {
    ++calls;
    CHECK(p.total_steps == 3000);
  };
  const auto rest = generate_sequence(*s.h, xi0, req, resume);
  CHECK(rest.c == full.c);
  CHECK(calls > 0);

  // a finished checkpoint can be extended to a longer sequence
  auto longer = req;
  longer.n_coeffs = 9000;
  resume.progress = nullptr;
  const auto ext = generate_sequence(*s.h, xi0, longer, resume);
  const auto direct = generate_sequence(*s.h, xi0, longer);
  CHECK(ext.c == direct.c);

  // incompatible runs are refused
  auto other_seed = req;
  other_seed.seed = 9;
  CHECK_THROWS_AS(generate_sequence(*s.h, xi0, other_seed, resume), CheckpointError);
  fixtures::TinySpec moved;
  moved.v_cut = 0.061;
  auto t = setup(moved);
  t.h->set_scaling(s.h->scaling());
  const auto xi_t = ham::random_parity_vector(*t.grid, Parity::odd, 8);
  try {
    generate_sequence(*t.h, xi_t, req, resume);
    CHECK(false);
  } catch (const CheckpointError &e) {
    CHECK(std::string(e.what()).find("grid hash") != std::string::npos);
  }
}

TEST_CASE("corrupt checkpoints are rejected") {
  auto s = setup();
  const auto xi0 = ham::random_parity_vector(*s.grid, Parity::none, 2);
  const auto path = temp_path("corrupt.ckpt");
  CheckpointPolicy pol;
  pol.path = path;
  generate_sequence(*s.h, xi0, {100}, pol);
  const auto size = std::filesystem::file_size(path);

  const auto d = read_checkpoint(path);
  CHECK(d.sequence.c.size() == 101);
  CHECK(d.cur.size() == s.grid->size());

  std::filesystem::resize_file(path, size - 20);
  CHECK_THROWS_AS(read_checkpoint(path), CheckpointError);

  generate_sequence(*s.h, xi0, {100}, pol);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(200);
    f.put('\x7f');
  }
  CHECK_THROWS_AS(read_checkpoint(path), CheckpointError);

  const auto seqfile = temp_path("seq.bin");
  const auto seq = generate_sequence(*s.h, xi0, {100});
  write_sequence(seqfile, seq);
  const auto back = read_sequence(seqfile);
  CHECK(back.c == seq.c);
  CHECK(back.scaling.shift == seq.scaling.shift);
  CHECK(back.grid_hash == s.grid->content_hash());
  CHECK_THROWS_AS(read_sequence(temp_path("missing.bin")), CheckpointError);
}
