#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>

#include "qpspec/spectrum.hpp"

using namespace qpspec;

namespace {

CocycleParams params(double lambda) { return {golden_mean(40), lambda, 0}; }

// Dense oracle eigenvalues of the truncation.
std::vector<double> oracle_eigs(const TruncatedOperator& op) {
  const auto n = static_cast<Eigen::Index>(op.size());
  Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(op.diag.data(), n);
  Eigen::VectorXd e = Eigen::VectorXd::Ones(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
  std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + n);
  return v;
}

}  // namespace

TEST_CASE("sturm counts and bisection agree with dense oracle") {
  auto cosv = Potential::cosine();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(0, 1);
  for (double lam : {0.0, 0.5, 3.0, 40.0}) {
    auto op = truncated_operator(uni(rng), params(lam), cosv, 100);
    REQUIRE(op.size() == 201);
    auto ref = oracle_eigs(op);
    auto ev = eigenvalues(op);
    REQUIRE(ev.size() == ref.size());
    for (std::size_t j = 0; j < ev.size(); ++j) CHECK(std::abs(ev[j] - ref[j]) < 1e-11 * std::max(1.0, lam));
    for (int k = 0; k < 200; ++k) {
      double E = -lam - 3 + (2 * lam + 6) * uni(rng);
      auto c = std::count_if(ref.begin(), ref.end(), [&](double r) { return r < E; });
      CHECK(eigen_count(op, E) == c);
    }
  }
}

TEST_CASE("batched counts match single counts, zero pivot handled") {
  auto cosv = Potential::cosine();
  auto op = truncated_operator(0.2, params(2), cosv, 300);
  std::vector<double> es;
  for (int i = 0; i < 37; ++i) es.push_back(-4 + 8.0 * i / 36);
  std::vector<std::int64_t> out(es.size());
  eigen_count_batch(op.diag, es, out);
  for (std::size_t i = 0; i < es.size(); ++i) CHECK(out[i] == eigen_count(op, es[i]));
  // E equal to an eigenvalue hits a zero pivot; the recount just above E includes it
  TruncatedOperator one{{0.5}};
  CHECK(eigen_count(one, 0.5) == 1);
  CHECK(eigen_count(one, 0.4) == 0);
  CHECK(eigen_count(one, 0.6) == 1);
}

TEST_CASE("free laplacian eigenvalues") {
  auto zero = Potential::constant(0);
  auto op = truncated_operator(0, params(1), zero, 50);
  auto ev = eigenvalues(op);
  const int n = 101;
  for (int k = 1; k <= n; ++k) CHECK(ev[static_cast<std::size_t>(n - k)] == doctest::Approx(2 * std::cos(k * std::numbers::pi / (n + 1))).epsilon(1e-13));
}

TEST_CASE("hoffman-wielandt") {
  auto cosv = Potential::cosine();
  for (double lam : {0.0, 1.0, 5.0, 50.0}) {
    auto hw = hoffman_wielandt_check(0.3, params(lam), cosv, 200);
    CHECK(hw.lhs <= hw.bound * (1 + 1e-12));
    if (lam == 0) CHECK(hw.lhs == doctest::Approx(hw.bound).epsilon(1e-12));
  }
}

TEST_CASE("ids basics") {
  auto cosv = Potential::cosine();
  auto p = params(5);
  auto below = ids(-20, p, cosv, 200, 8);
  CHECK(below.value == 0);
  CHECK(ids(20, p, cosv, 200, 8).value == 1);
  // symmetry of the cosine spectrum: N(0) = 1/2
  auto mid = ids(0, p, cosv, 1000, 16);
  CHECK(std::abs(mid.value - 0.5) <= mid.error);
  // monotone
  std::vector<double> es;
  for (int i = 0; i <= 200; ++i) es.push_back(-8 + 16.0 * i / 200);
  auto curve = ids_curve(es, p, cosv, 200, 4);
  for (std::size_t i = 1; i < es.size(); ++i) CHECK(curve.values[i] >= curve.values[i - 1]);
  CHECK(curve.at(0.01) == curve.values[100]);
  CHECK(potential_level_measure(0, p, cosv) == doctest::Approx(0.5));
}

TEST_CASE("gap labels") {
  auto f = golden_mean(40);
  auto l = gap_label(wrap_unit(f.value()), f);
  CHECK(l.m == 1);
  CHECK(l.residual < 1e-12);
  CHECK_FALSE(l.ambiguous);
  CHECK(gap_label(wrap_unit(-2 * f.value()), f).m == -2);
  CHECK(gap_label(0.0, f).m == 0);
}

TEST_CASE("scan at moderate coupling finds the first gaps") {
  auto cosv = Potential::cosine();
  auto p = params(5);
  auto w = spectral_window(p, cosv);
  auto grid = uniform_grid(w.lo, w.hi, 1e-3);
  ScanOptions opt;
  opt.L = 400;
  opt.phase_count = 8;
  auto res = scan_and_ids(p, cosv, grid, opt);
  const auto& s = res.scan;
  CHECK(s.intervals.size() >= 3);
  CHECK(s.measure() < 0.5 * (w.hi - w.lo));
  auto gaps = detect_gaps(s, res.ids, p.freq);
  REQUIRE(gaps.size() >= 4);
  CHECK(gaps[gaps.size() - 1].outer);
  CHECK(gaps[gaps.size() - 2].outer);
  // the two widest interior gaps carry labels +-1
  std::vector<int> top{std::abs(gaps[0].label_k), std::abs(gaps[1].label_k)};
  CHECK(top[0] == 1);
  CHECK(top[1] == 1);
  for (std::size_t i = 0; i + 1 < gaps.size() - 2; ++i) CHECK(gaps[i].width >= gaps[i + 1].width);
}

TEST_CASE("homogeneity input checks") {
  SpectrumApprox s;
  s.t = uniform_grid(0, 1, 0.01);
  s.covered.assign(s.t.size() - 1, 1);
  s.resolution = 0.01;
  s.intervals = {{0, 1}};
  std::vector<double> bad{0.05};
  CHECK_THROWS(homogeneity_profile(s, bad, 10));
  std::vector<double> good{0.1, 0.2};
  auto h = homogeneity_profile(s, good, 10);
  CHECK(h.table.size() == 20);
  // worst sample sits at t = 0.05 with eps = 0.2: |(0, 0.25)| / 0.2
  CHECK(h.mu == doctest::Approx(1.25));
}

TEST_CASE("weak coupling: bands do not turn into gaps") {
  auto cosv = Potential::cosine();
  auto p = params(0.1);
  auto w = spectral_window(p, cosv);
  auto grid = uniform_grid(w.lo, w.hi, 1e-2);
  ScanOptions opt;
  opt.L = 1000;
  opt.phase_count = 8;
  auto res = scan_and_ids(p, cosv, grid, opt);
  auto gaps = detect_gaps(res.scan, res.ids, p.freq);
  REQUIRE(gaps.size() >= 4);
  // the widest gaps are the +-1 gaps, of width ~ lambda in energy
  CHECK(std::abs(gaps[0].label_k) == 1);
  CHECK(std::abs(gaps[1].label_k) == 1);
  CHECK(gaps[0].width < 2);
  // the band around E = 0 is covered
  CHECK(res.scan.contains(0.0));
  CHECK(res.scan.measure() > 0.8 * (w.hi - w.lo));
}
