#include <doctest.h>

#include <Eigen/SVD>
#include <cmath>
#include <numbers>
#include <random>

#include "qpspec/sl2.hpp"

using namespace qpspec;

namespace {

constexpr double pi = std::numbers::pi;

// Oracle directions from Eigen's Jacobi SVD.
struct OracleSvd {
  double norm, s, u;
};
OracleSvd oracle(const Mat2& a) {
  Eigen::JacobiSVD<Mat2> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& v = svd.matrixV();
  const auto& uu = svd.matrixU();
  return {svd.singularValues()(0), wrap_pi(std::atan2(v(1, 1), v(0, 1))), wrap_pi(std::atan2(uu(1, 0), uu(0, 0)))};
}

Mat2 random_sl2(std::mt19937_64& rng, double lmin, double lmax) {
  std::uniform_real_distribution<double> ang(0, pi), len(lmin, lmax);
  return from_polar(len(rng), ang(rng), ang(rng));
}

}  // namespace

TEST_CASE("polar of diagonal and rotated diagonal") {
  auto p = polar(Mat2(hyperbolic(2.0)));
  CHECK(p.norm == doctest::Approx(2));
  CHECK(p.s == doctest::Approx(pi / 2));
  CHECK(p.u == doctest::Approx(0).epsilon(1e-14));
  for (double th : {0.3, 1.2, 2.9}) {
    auto q = polar(Mat2(rotation(th) * hyperbolic(3.0)));
    CHECK(q.norm == doctest::Approx(3));
    CHECK(direction_dist(q.s, pi / 2) < 1e-12);
    CHECK(direction_dist(q.u, wrap_pi(th)) < 1e-12);
  }
  CHECK_THROWS_AS(polar(Mat2(rotation(0.4))), IllConditionedDirection);
  CHECK_THROWS_AS(polar(Mat2(hyperbolic(1.0 + 1e-8))), IllConditionedDirection);
}

TEST_CASE("polar agrees with Jacobi SVD and reconstructs") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ent(-3, 3);
  int tested = 0;
  double worst_rec = 0, worst_dir = 0;
  while (tested < 100000) {
    Mat2 a;
    a << ent(rng), ent(rng), ent(rng), ent(rng);
    double det = a.determinant();
    if (std::abs(det) < 0.05) continue;
    if (det < 0) a.row(0) *= -1;
    a /= std::sqrt(std::abs(a.determinant()));
    if (op_norm(a) < 1.01) continue;
    ++tested;
    auto p = polar(a);
    auto o = oracle(a);
    worst_dir = std::max({worst_dir, direction_dist(p.s, o.s), direction_dist(p.u, o.u)});
    CHECK(std::abs(p.norm - o.norm) <= 1e-12 * o.norm);
    // norm^2 + norm^-2 equals the squared Frobenius norm
    CHECK(std::abs(p.norm * p.norm + 1 / (p.norm * p.norm) - a.squaredNorm()) <= 1e-12 * a.squaredNorm());
    // reconstruction up to the sign ambiguity of lines
    Mat2 r = from_polar(p.norm, p.s, p.u);
    worst_rec = std::max(worst_rec, std::min((r - a).norm(), (r + a).norm()) / a.norm());
    // s is contracted by 1/norm
    CHECK(std::abs((a * unit(p.s)).norm() * p.norm - 1) < 1e-9);
  }
  CHECK(worst_rec < 1e-9);
  CHECK(worst_dir < 1e-9);
}

TEST_CASE("product norm") {
  CHECK(product_norm(2.0, 3.0, 0.0) == doctest::Approx(6));
  CHECK(product_norm(2.0, 3.0, pi / 2) == doctest::Approx(1.5));
  Mat2 prod = hyperbolic(2.0) * rotation(pi / 4) * hyperbolic(2.0);
  CHECK(std::abs(product_norm(2.0, 2.0, pi / 4) - oracle(prod).norm) < 1e-12 * oracle(prod).norm);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> len(1.0001, 200), ang(-4, 4);
  for (int i = 0; i < 20000; ++i) {
    double l1 = len(rng), l2 = len(rng), th = ang(rng);
    double n = product_norm(l1, l2, th);
    CHECK(n <= l1 * l2 * (1 + 1e-12));
    CHECK(n >= std::max(l2 / l1, l1 / l2) * (1 - 1e-12));
  }
}

TEST_CASE("compose_f values and poles") {
  CHECK(compose_f(2.0, 2.0, pi / 4) == doctest::Approx(-2.125).epsilon(1e-14));
  CHECK(compose_f(2.0, 2.0, pi / 2) == 0.0);
  CHECK(std::isinf(compose_f(2.0, 3.0, 0.0)));
  CHECK(compose_f(2.0, 3.0, 0.0) < 0);
  // l1 < l2: b < 0, so the tan pole is +inf
  CHECK(compose_f(2.0, 3.0, pi / 2) == std::numeric_limits<double>::infinity());
  CHECK_THROWS(compose_f(2.0, 1.0, 0.3));
  // large l2: f -> -(l1^2 cot + ... )/2 shape, i.e. f + (l1^2/2) cot - (l1^-2/2) tan -> 0
  double l1 = 3, th = 0.7;
  for (double l2 : {10.0, 100.0, 1000.0}) {
    double lim = -0.5 * l1 * l1 / std::tan(th) + 0.5 / (l1 * l1) * std::tan(th);
    CHECK(std::abs(compose_f(l1, l2, th) - lim) < 10 * std::pow(l2, -4) * l1 * l1 + 1e-14);
  }
}

TEST_CASE("angle shift laws against explicit products") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> len(2, 100), ang(0, pi);
  double worst_s = 0, worst_u = 0;
  for (int i = 0; i < 20000; ++i) {
    double l1 = len(rng), l2 = len(rng), s1 = ang(rng), u1 = ang(rng), u2 = ang(rng), th = ang(rng);
    if (std::abs(th) < 1e-3 || std::abs(th - pi / 2) < 1e-3 || std::abs(th - pi) < 1e-3) continue;
    double s2 = wrap_pi(u1 + pi / 2 - th);
    Mat2 a1 = from_polar(l1, s1, u1), a2 = from_polar(l2, s2, u2);
    auto o = oracle(a2 * a1);
    worst_s = std::max(worst_s, direction_dist(wrap_pi(s1 - angle_shift_s(l1, l2, th)), o.s));
    worst_u = std::max(worst_u, direction_dist(wrap_pi(u2 - angle_shift_u(l1, l2, th)), o.u));
    CHECK(std::abs(product_norm(l1, l2, th) - o.norm) <= 1e-12 * o.norm);
  }
  CHECK(worst_s < 1e-8);
  CHECK(worst_u < 1e-8);

  // theta = pi/2 with unequal norms
  Mat2 a1 = from_polar(2.0, 0.4, 1.1), a2 = from_polar(3.0, 1.1, 0.2);
  double shift = angle_shift_s(2.0, 3.0, pi / 2);
  CHECK(direction_dist(wrap_pi(0.4 - shift), oracle(a2 * a1).s) < 1e-9);
  auto p1 = polar(a1), p2 = polar(a2);
  CHECK(direction_dist(composed_s(p1, p2), oracle(a2 * a1).s) < 1e-9);
  CHECK(direction_dist(composed_u(p1, p2), oracle(a2 * a1).u) < 1e-9);
  // with equal norms the product at theta = pi/2 is a rotation
  Mat2 b2 = from_polar(2.0, 1.1, 0.2);
  CHECK(product_norm(2.0, 2.0, pi / 2) == doctest::Approx(1.0));
  CHECK_THROWS_AS(polar(Mat2(b2 * a1)), IllConditionedDirection);
}

TEST_CASE("angle shift lift is monotone and sweeps (0, pi)") {
  CHECK(angle_shift_s(50.0, 80.0, 1e-9) < 1e-6);
  for (auto [l1, l2] : {std::pair{2.0, 30.0}, {5.0, 400.0}, {1.5, 2.0}}) {
    double prev = -1;
    for (int i = 1; i < 20000; ++i) {
      double th = pi * i / 20000.0;
      double v = angle_shift_s(l1, l2, th);
      CHECK(v > 0);
      CHECK(v < pi);
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
  }
}

TEST_CASE("direction pushforward") {
  CHECK(direction_pushforward(Mat2(Mat2::Identity()), 0.7) == doctest::Approx(0.7));
  CHECK(direction_pushforward(Mat2(hyperbolic(5.0)), 0.0) == doctest::Approx(0.0));
  CHECK(direction_dist(direction_pushforward(Mat2(rotation(1.0)), 2.5), wrap_pi(3.5)) < 1e-14);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ang(0, pi);
  for (int i = 0; i < 2000; ++i) {
    Mat2 a = random_sl2(rng, 1.5, 20);
    double th = ang(rng), h = 1e-6;
    double fd = wrap_half_pi(direction_pushforward(a, th + h) - direction_pushforward(a, th - h)) / (2 * h);
    double exact = direction_pushforward_derivative(a, th);
    CHECK(std::abs(fd - exact) <= 1e-6 * std::max(1.0, std::abs(exact)));
  }
}

TEST_CASE("contracted and expanded directions of products") {
  Mat2 e1 = rotation(0.3) * hyperbolic(2.0) * rotation(1.0);
  Mat2 e2 = hyperbolic(100.0);
  auto est = contracted_dir_of_product(e2, e1);
  CHECK(direction_dist(est.direction, contracted_dir(Mat2(e2 * e1))) < 1e-3);
  Mat2 d = hyperbolic(3.0);
  CHECK(direction_dist(contracted_dir_of_product(Mat2(hyperbolic(9.0)), d).direction, pi / 2) < 1e-15);
  CHECK_THROWS(contracted_dir_of_product(e1, e2));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> l1d(2, 10), ang(0, pi);
  for (int i = 0; i < 2000; ++i) {
    double l1 = l1d(rng);
    std::uniform_real_distribution<double> l2d(l1 * l1, 10 * l1 * l1);
    Mat2 a = from_polar(l1, ang(rng), ang(rng)), b = from_polar(l2d(rng), ang(rng), ang(rng));
    auto es = contracted_dir_of_product(b, a);
    CHECK(direction_dist(es.direction, contracted_dir(Mat2(b * a))) < es.bound);
    auto eu = expanded_dir_of_product(a, b);
    CHECK(direction_dist(eu.direction, expanded_dir(Mat2(a * b))) < eu.bound);
  }
}

TEST_CASE("block certificates") {
  std::vector<Block> aligned(6, Block{hyperbolic(10.0), 0, 1});
  auto c = uh_block_certificate(aligned);
  CHECK(c.valid);
  CHECK(std::exp(c.log_beta) == doctest::Approx(10));
  // the certified growth is a lower bound for the true product
  Mat2 prod = Mat2::Identity();
  for (const auto& b : aligned) prod = b.m * prod;
  CHECK(op_norm(prod) >= std::pow(c.rate, 6));

  // s(B2) = u(B1): perfect resonance
  std::vector<Block> res{{from_polar(10.0, 0.3, 1.0), 0, 1}, {from_polar(10.0, 1.0, 0.3), 0, 1}};
  auto r = uh_block_certificate(res);
  CHECK(r.gamma < 1e-12);
  CHECK_FALSE(r.valid);

  std::vector<Block> rot(4, Block{rotation(0.5), 0, 1});
  CHECK_FALSE(uh_block_certificate(rot).valid);
  CHECK_FALSE(uh_block_certificate(std::vector<Block>{}).valid);
  // log-scale carried blocks
  std::vector<Block> big(3, Block{hyperbolic(2.0), 500.0, 1000});
  auto b = uh_block_certificate(big);
  CHECK(b.valid);
  CHECK(b.log_beta == doctest::Approx(500 + std::log(2.0)));
}
