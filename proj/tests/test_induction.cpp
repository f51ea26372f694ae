#include <doctest.h>

#include <cmath>
#include <vector>

#include "qpspec/induction.hpp"

using namespace qpspec;

namespace {

CocycleParams params(double lambda, double t) { return {golden_mean(40), lambda, t}; }

// Centre of the |k| = 1 gap at lambda = 50 located by a scan.
constexpr double kGapCentre = 0.36265;

}  // namespace

TEST_CASE("scale law") {
  auto f = golden_mean(40);
  CHECK(min_return_steps(1, f) == 3);
  CHECK(min_return_steps(3, f) == 8);
  CHECK(critical_radius(1, f) == doctest::Approx(1.0 / 81));
  CHECK(critical_radius(2, f) == doctest::Approx(1.0 / 625));
  CHECK_THROWS(min_return_steps(0, f));
}

TEST_CASE("level-one critical points") {
  auto v = Potential::cosine();
  const double a = golden_mean(40).value();
  auto s = init_state(params(1000, 0), v);
  CHECK(s.level == 1);
  CHECK_FALSE(s.degenerate);
  CHECK(circle_dist(s.critical[0], 0.75 + a) < 2e-3);
  CHECK(circle_dist(s.critical[1], 0.25 + a) < 2e-3);
  CHECK(s.intervals[0].radius == doctest::Approx(1.0 / 81));

  // top of the potential range: a single critical point
  auto top = init_state(params(50, 1.0), v);
  CHECK(top.degenerate);
  CHECK(top.critical[0] == top.critical[1]);
  CHECK(circle_dist(top.critical[0], a) < 2e-2);

  // outside the window: immediate Case 3 with k = 0, certified
  auto out = init_state(params(50, 1.5), v);
  CHECK(out.outside_window);
  CHECK(out.case_tag == StepCase::case3);
  CHECK(out.resonance_k == 0);
  auto cert = certify_gap(out, params(50, 1.5), v);
  CHECK(cert.valid);
  CHECK(cert.uh_rate > 1);
  CHECK(cert.k == 0);
  CHECK_THROWS_AS(advance(out, params(50, 1.5), v), InductionError);
}

TEST_CASE("preconditions") {
  auto v = Potential::cosine();
  CHECK_THROWS_AS(init_state(params(2, 0), v), std::invalid_argument);
  std::vector<double> samples;
  for (int i = 0; i < 64; ++i) samples.push_back(std::cos(4 * std::numbers::pi * i / 64.0));
  CHECK_THROWS_AS(init_state(params(50, 0), Potential::sampled(samples)), InductionError);
  CHECK_THROWS(trace(0, params(50, 0), v, 13));
}

TEST_CASE("case 1 advance in the spectrum") {
  auto v = Potential::cosine();
  auto p = params(50, 0);
  auto s1 = init_state(p, v);
  REQUIRE(s1.case_tag == StepCase::case1);
  CHECK(s1.m.zero_count[0] == 1);
  CHECK(s1.m.zero_count[1] == 1);
  CHECK(s1.m.d1_at_zero[0] * s1.m.d1_at_zero[1] < 0);
  CHECK(s1.m.dt_min > 0.05);
  CHECK(classify_step(s1, p, v).tag == StepCase::case1);
  auto s2 = advance(s1, p, v);
  CHECK(s2.level == 2);
  CHECK(s2.m.drift > 0);
  CHECK(s2.m.drift < s2.m.drift_bound);
  CHECK(std::abs(resonance_distance(s2, p.freq, s2.m.best_k)) > s2.m.radius);
  CHECK(s2.m.zero_count[0] == 1);
  CHECK(s2.m.d1_at_zero[0] * s2.m.d1_at_zero[1] < 0);
  CHECK_FALSE(certify_gap(s2, p, v).valid);

  auto cd = critical_distance_limit(0, p, v, 3);
  CHECK(cd.level == 3);
  CHECK(std::abs(cd.value - 0.5) < 1e-9);
  // Lipschitz in t between nearby spectral energies
  auto cd2 = critical_distance_limit(0.01, p, v, 3);
  CHECK(std::abs(cd2.value - cd.value) <= 0.01);
}

TEST_CASE("gap centre reaches case 3 with a certificate") {
  auto v = Potential::cosine();
  auto p = params(50, kGapCentre);
  auto st = trace(kGapCentre, p, v, 3);
  REQUIRE(st.back().case_tag == StepCase::case3);
  CHECK(st.back().level <= 3);
  REQUIRE(st.back().resonance_k.has_value());
  CHECK(std::abs(*st.back().resonance_k) == 1);
  auto cert = certify_gap(st.back(), p, v);
  CHECK(cert.valid);
  CHECK(cert.uh_rate > 1);
  CHECK(cert.min_angle_gap > cert.threshold);
  CHECK_THROWS_AS(advance(st.back(), p, v), InductionError);
  // the critical-point difference sits at -k alpha
  auto cd = critical_distance_limit(kGapCentre, p, v, 3);
  CHECK(circle_dist(cd.value, orbit_point(0, p.freq, -*st.back().resonance_k)) < 2 * st.back().m.radius);
}

TEST_CASE("resonance distance and the k = 1 resonance") {
  auto v = Potential::cosine();
  auto d = [&](double t) { return resonance_distance(init_state(params(50, t), v), golden_mean(40), 1); };
  // strictly monotone in t on the bracket
  double prev = d(-0.6);
  for (int i = 1; i <= 20; ++i) {
    double cur = d(-0.6 + 0.02 * i);
    CHECK((cur - prev) / 0.02 > 0.05);
    prev = cur;
  }
  double lo = -0.6, hi = -0.2;
  REQUIRE(d(lo) < 0);
  REQUIRE(d(hi) > 0);
  for (int it = 0; it < 50; ++it) {
    double mid = 0.5 * (lo + hi);
    (d(mid) < 0 ? lo : hi) = mid;
  }
  auto s = init_state(params(50, lo), v);
  CHECK(std::abs(resonance_distance(s, golden_mean(40))) < 1e-9);
  REQUIRE(s.resonance_k.has_value());
  CHECK(*s.resonance_k == 1);
  // exact level-one resonance lies inside the gap
  CHECK(s.case_tag == StepCase::case3);
  // just inside the spectrum next to that gap the step is resonant but not a gap
  auto edge = init_state(params(50, -0.34269), v);
  CHECK(edge.case_tag == StepCase::case2);
  CHECK(edge.resonance_k == 1);
  CHECK(edge.m.zero_count[0] <= 2);
  CHECK(edge.m.range[0] <= std::numbers::pi);
}
