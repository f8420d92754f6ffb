#include "chebfd/app.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace chebfd::app {

OracleResult oracle_diagonalize(const ham::ScaledHamiltonian &h, std::size_t max_points) {
  const auto &grid = h.grid();
  const std::size_t n = grid.size();
  if (n > max_points)
    throw ConfigError(fmt::format(
        "oracle refuses a grid of {} points (limit {}); lower V_cut or raise "
        "oracle_max_points",
        n, max_points));
  OracleResult out;
  out.points = n;
  const Eigen::MatrixXd H = ham::dense_matrix(h);
  auto keep = [&](const Eigen::VectorXd &ev, Parity p) {
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
      if (ev(k) > grid.v_cut())
        break;
      hinv::SpectralLine l;
      l.energy = ev(k);
      l.amplitude = 1.0;
      l.parity = p;
      out.levels.lines.push_back(l);
    }
  };
  auto solve = [](const Eigen::MatrixXd &m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success)
      throw NumericalError("dense eigensolver failed");
    return Eigen::VectorXd(eig.eigenvalues());
  };

  if (!grid.symmetric()) {
    keep(solve(0.5 * (H + H.transpose())), Parity::none);
  } else {
    // (e_p +/- e_q)/sqrt2 for exchange pairs; fixed points are even only
    const auto &ex = grid.exchange();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<std::size_t> fixed;
    for (std::size_t p = 0; p < n; ++p) {
      const auto q = std::size_t(ex[p]);
      if (q == p)
        fixed.push_back(p);
      else if (p < q)
        pairs.emplace_back(p, q);
    }
    const double r = std::sqrt(0.5);
    const auto ne = Eigen::Index(pairs.size() + fixed.size());
    const auto no = Eigen::Index(pairs.size());
    Eigen::MatrixXd ue = Eigen::MatrixXd::Zero(Eigen::Index(n), ne);
    Eigen::MatrixXd uo = Eigen::MatrixXd::Zero(Eigen::Index(n), no);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [p, q] = pairs[k];
      ue(Eigen::Index(p), Eigen::Index(k)) = r;
      ue(Eigen::Index(q), Eigen::Index(k)) = r;
      uo(Eigen::Index(p), Eigen::Index(k)) = r;
      uo(Eigen::Index(q), Eigen::Index(k)) = -r;
    }
    for (std::size_t k = 0; k < fixed.size(); ++k)
      ue(Eigen::Index(fixed[k]), Eigen::Index(pairs.size() + k)) = 1.0;
    const Eigen::MatrixXd he = ue.transpose() * H * ue;
    keep(solve(0.5 * (he + he.transpose())), Parity::even);
    if (no > 0) {
      const Eigen::MatrixXd ho = uo.transpose() * H * uo;
      keep(solve(0.5 * (ho + ho.transpose())), Parity::odd);
      out.max_parity_defect = (ue.transpose() * H * uo).cwiseAbs().maxCoeff();
    }
  }
  std::stable_sort(out.levels.lines.begin(), out.levels.lines.end(),
                   [](const auto &a, const auto &b) { return a.energy < b.energy; });
  out.levels.provenance["tool"] = "chebfd oracle";
  out.levels.provenance["grid_hash"] = hex64(grid.content_hash());
  out.levels.provenance["grid_points"] = std::to_string(n);
  out.levels.provenance["v_cut_hartree"] = fmt::format("{:.17g}", grid.v_cut());
  return out;
}

CompareResult compare_runs(const std::vector<double> &a_in, const std::vector<double> &b_in,
                           int window, double tolerance) {
  if (window < 1)
    throw ConfigError("compare window must be positive");
  auto a = a_in, b = b_in;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CompareResult out;
  if (a.empty() || b.empty()) {
    out.unmatched_a = a;
    out.unmatched_b = b;
    out.warnings.push_back("one of the level lists is empty");
    return out;
  }
  // local mean spacing of A from +-5 neighbours
  auto spacing = [&](std::size_t i) {
    const std::size_t lo = i >= 5 ? i - 5 : 0;
    const std::size_t hi = std::min(a.size() - 1, i + 5);
    if (hi == lo)
      return std::numeric_limits<double>::infinity();
    return (a[hi] - a[lo]) / double(hi - lo);
  };
  struct Cand {
    double d;
    std::size_t i, j;
  };
  std::vector<Cand> cand;
  std::vector<double> tol(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    tol[i] = tolerance > 0.0 ? tolerance : 0.5 * spacing(i);
    auto it = std::lower_bound(b.begin(), b.end(), a[i] - tol[i]);
    for (; it != b.end() && *it <= a[i] + tol[i]; ++it)
      cand.push_back({std::abs(*it - a[i]), i, std::size_t(it - b.begin())});
  }
  std::sort(cand.begin(), cand.end(), [](const Cand &x, const Cand &y) {
    return x.d != y.d ? x.d < y.d : (x.i != y.i ? x.i < y.i : x.j < y.j);
  });
  std::vector<std::ptrdiff_t> match(a.size(), -1);
  std::vector<char> used(b.size(), 0);
  for (const auto &c : cand)
    if (match[c.i] < 0 && !used[c.j]) {
      match[c.i] = std::ptrdiff_t(c.j);
      used[c.j] = 1;
    }
  std::vector<std::size_t> matched_i;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (match[i] >= 0) {
      out.pairs.emplace_back(a[i], b[std::size_t(match[i])]);
      matched_i.push_back(i);
    } else {
      out.unmatched_a.push_back(a[i]);
    }
  }
  for (std::size_t j = 0; j < b.size(); ++j)
    if (!used[j])
      out.unmatched_b.push_back(b[j]);

  auto median = [](std::vector<double> v) {
    if (v.empty())
      return 0.0;
    const auto mid = v.begin() + std::ptrdiff_t(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2)
      return *mid;
    return 0.5 * (*mid + *std::max_element(v.begin(), mid));
  };
  for (std::size_t s = 0; s < out.pairs.size(); s += std::size_t(window)) {
    const std::size_t e = std::min(out.pairs.size(), s + std::size_t(window));
    std::vector<double> en, err, dens;
    for (std::size_t k = s; k < e; ++k) {
      en.push_back(out.pairs[k].first);
      err.push_back(std::abs(out.pairs[k].first - out.pairs[k].second));
      dens.push_back(1.0 / spacing(matched_i[k]));
    }
    out.windows.push_back({median(en), median(err), median(dens), e - s});
  }
  out.match_rate = double(out.pairs.size()) / double(std::max(a.size(), b.size()));
  if (out.match_rate < 0.9) {
    auto list = [](const std::vector<double> &v) {
      std::string s;
      for (std::size_t i = 0; i < v.size() && i < 20; ++i)
        s += fmt::format("{}{:.10g}", i ? " " : "", v[i]);
      return v.size() > 20 ? s + " ..." : s;
    };
    out.warnings.push_back(fmt::format(
        "only {:.1f}% of levels matched; unmatched in A ({}): {}; unmatched in B ({}): {}",
        100.0 * out.match_rate, out.unmatched_a.size(), list(out.unmatched_a),
        out.unmatched_b.size(), list(out.unmatched_b)));
  }
  return out;
}

} // namespace chebfd::app
