#pragma once

// Unimodular 2x2 calculus: singular directions, product norms and the
// closed-form composition laws for contracted/expanded directions.
//
// Conventions. R_t is the counterclockwise rotation by t. A line in RP^1 is an
// angle in [0, pi). For ||A|| > 1,
//   A = R_u * diag(||A||, 1/||A||) * R_{pi/2 - s}
// with s the most contracted and u the most expanded direction.

#include <Eigen/Core>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qpspec {

template <typename Scalar>
using Mat2T = Eigen::Matrix<Scalar, 2, 2>;
template <typename Scalar>
using Vec2T = Eigen::Matrix<Scalar, 2, 1>;
using Mat2 = Mat2T<double>;
using Vec2 = Vec2T<double>;

/// Raised when singular directions are requested from a near-conformal matrix.
struct IllConditionedDirection : std::domain_error {
  using std::domain_error::domain_error;
};

inline constexpr double kConformalTol = 1e-6;

/// Reduce an angle to [0, pi).
template <typename Scalar>
Scalar wrap_pi(Scalar a) {
  const Scalar pi = std::numbers::pi_v<Scalar>;
  Scalar r = std::fmod(a, pi);
  if (r < 0) r += pi;
  if (r >= pi) r -= pi;
  return r;
}

/// Reduce an angle to (-pi/2, pi/2].
template <typename Scalar>
Scalar wrap_half_pi(Scalar a) {
  const Scalar pi = std::numbers::pi_v<Scalar>;
  Scalar r = wrap_pi(a);
  return r > pi / 2 ? r - pi : r;
}

/// Metric on RP^1.
template <typename Scalar>
Scalar direction_dist(Scalar a, Scalar b) {
  Scalar d = wrap_pi(a - b);
  return std::min(d, std::numbers::pi_v<Scalar> - d);
}

template <typename Scalar>
Mat2T<Scalar> rotation(Scalar t) {
  Mat2T<Scalar> r;
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return r;
}

template <typename Scalar>
Mat2T<Scalar> hyperbolic(Scalar l) {
  Mat2T<Scalar> d;
  d << l, 0, 0, 1 / l;
  return d;
}

template <typename Scalar>
Vec2T<Scalar> unit(Scalar angle) {
  return {std::cos(angle), std::sin(angle)};
}

/// Adjugate; equals the inverse for determinant one.
template <typename Scalar>
Mat2T<Scalar> adjugate(const Mat2T<Scalar>& a) {
  Mat2T<Scalar> r;
  r << a(1, 1), -a(0, 1), -a(1, 0), a(0, 0);
  return r;
}

template <typename Scalar>
struct Svd2 {
  Scalar sigma1;  // largest singular value
  Scalar sigma2;  // signed; equals det / sigma1
  Scalar phi;     // A = R_phi diag(sigma1, sigma2) R_theta
  Scalar theta;
};

/// Closed-form singular decomposition of a real 2x2 matrix.
template <typename Scalar>
Svd2<Scalar> svd2(const Mat2T<Scalar>& a) {
  const Scalar e = (a(0, 0) + a(1, 1)) / 2, f = (a(0, 0) - a(1, 1)) / 2;
  const Scalar g = (a(1, 0) + a(0, 1)) / 2, h = (a(1, 0) - a(0, 1)) / 2;
  const Scalar q = std::hypot(e, h), r = std::hypot(f, g);
  const Scalar a1 = std::atan2(g, f), a2 = std::atan2(h, e);
  const Scalar s1 = q + r;
  const Scalar det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  return {s1, s1 > 0 ? det / s1 : Scalar(0), (a2 + a1) / 2, (a2 - a1) / 2};
}

/// Operator norm, computed from the closed form.
template <typename Scalar>
Scalar op_norm(const Mat2T<Scalar>& a) {
  const Scalar e = (a(0, 0) + a(1, 1)) / 2, f = (a(0, 0) - a(1, 1)) / 2;
  const Scalar g = (a(1, 0) + a(0, 1)) / 2, h = (a(1, 0) - a(0, 1)) / 2;
  return std::hypot(e, h) + std::hypot(f, g);
}

template <typename Scalar>
struct PolarFormT {
  Scalar norm;  // largest singular value of the matrix as given
  Scalar s;     // most contracted direction, [0, pi)
  Scalar u;     // most expanded direction, [0, pi)
};
using PolarForm = PolarFormT<double>;

/// Polar form of A. A may carry an overall positive scale (rescaled products);
/// the conditioning test compares sigma1^2 with |det A|.
template <typename Scalar>
PolarFormT<Scalar> polar(const Mat2T<Scalar>& a) {
  const Svd2<Scalar> d = svd2(a);
  const Scalar det = std::abs(a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0));
  const Scalar tol = Scalar(1) + Scalar(kConformalTol);
  if (!(d.sigma1 * d.sigma1 >= tol * tol * det) || !(d.sigma1 > 0))
    throw IllConditionedDirection("matrix too close to conformal for singular directions");
  const Scalar pi = std::numbers::pi_v<Scalar>;
  return {d.sigma1, wrap_pi(pi / 2 - d.theta), wrap_pi(d.phi)};
}

/// Most contracted direction of A.
template <typename Scalar>
Scalar contracted_dir(const Mat2T<Scalar>& a) {
  return polar(a).s;
}

/// Most expanded direction of A; equals s(A^{-1}).
template <typename Scalar>
Scalar expanded_dir(const Mat2T<Scalar>& a) {
  return polar(a).u;
}

/// R_u diag(l, 1/l) R_{pi/2 - s}.
template <typename Scalar>
Mat2T<Scalar> from_polar(Scalar l, Scalar s, Scalar u) {
  const Scalar pi = std::numbers::pi_v<Scalar>;
  return rotation(u) * hyperbolic(l) * rotation(pi / 2 - s);
}

/// Norm of diag(l2, 1/l2) R_theta diag(l1, 1/l1) from the Frobenius identity
/// l^2 + l^-2 = l2^2 l1^2 cos^2 + l2^-2 l1^2 sin^2 + l2^2 l1^-2 sin^2 + l2^-2 l1^-2 cos^2.
template <typename Scalar>
Scalar product_norm(Scalar l1, Scalar l2, Scalar theta) {
  const Scalar c2 = std::pow(std::cos(theta), 2), s2 = std::pow(std::sin(theta), 2);
  const Scalar a1 = l1 * l1, b1 = 1 / a1, a2 = l2 * l2, b2 = 1 / a2;
  const Scalar rhs = a2 * a1 * c2 + b2 * a1 * s2 + a2 * b1 * s2 + b2 * b1 * c2;
  // x + 1/x = rhs, root x >= 1; written to avoid cancellation
  const Scalar disc = std::sqrt(std::max(Scalar(0), (rhs - 2) * (rhs + 2)));
  return std::sqrt((rhs + disc) / 2);
}

/// f(l1, l2, theta) = -a cot(theta) - b tan(theta) with
///   a = (l1^2 - l1^-2 l2^-4) / (2 (1 - l2^-4)),
///   b = (l1^2 l2^-4 - l1^-2) / (2 (1 - l2^-4)).
/// theta = 0 mod pi gives a signed infinity. At theta = pi/2 mod pi the tan
/// term alone decides: 0 when b vanishes, a signed infinity otherwise.
template <typename Scalar>
Scalar compose_f(Scalar l1, Scalar l2, Scalar theta) {
  if (!(l2 > 1)) throw std::invalid_argument("compose_f needs l2 > 1");
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar l2m4 = std::pow(l2, -4), den = 2 * (1 - l2m4);
  const Scalar a = (l1 * l1 - l2m4 / (l1 * l1)) / den;
  const Scalar b = (l1 * l1 * l2m4 - 1 / (l1 * l1)) / den;
  const Scalar tr = wrap_pi(theta);
  if (tr == 0) return a == 0 ? Scalar(0) : (a > 0 ? -inf : inf);
  const Scalar eps = 4 * std::numeric_limits<Scalar>::epsilon();
  if (std::abs(tr - pi / 2) <= eps) {
    // cot vanishes, tan runs to +inf from the left
    if (b == 0) return Scalar(0);
    return b > 0 ? -inf : inf;
  }
  const Scalar c = std::cos(tr), s = std::sin(tr);
  return -a * (c / s) - b * (s / c);
}

/// Lift of the s-shift in (0, pi):
///   pi/2 - arccot(f)/2 + (theta > pi/2 ? pi/2 : 0), arccot valued in (0, pi).
/// For l1 < l2 it increases from 0 to pi as theta sweeps (0, pi).
template <typename Scalar>
Scalar lifted_shift(Scalar l1, Scalar l2, Scalar theta) {
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar tr = wrap_pi(theta);
  const Scalar f = compose_f(l1, l2, tr);
  Scalar acot;
  if (std::isinf(f))
    acot = f > 0 ? Scalar(0) : pi;
  else
    acot = std::atan2(Scalar(1), f);
  return pi / 2 - acot / 2 + (tr > pi / 2 ? pi / 2 : Scalar(0));
}

/// For A = A2 A1 with ||A1|| = l1, ||A2|| = l2 and theta = pi/2 - (s(A2) - u(A1)):
///   s(A) = s(A1) - angle_shift_s(l1, l2, theta)   (mod pi).
template <typename Scalar>
Scalar angle_shift_s(Scalar l1, Scalar l2, Scalar theta) {
  return lifted_shift(l1, l2, theta);
}

/// Same setting: u(A) = u(A2) - angle_shift_u(l1, l2, theta)   (mod pi).
template <typename Scalar>
Scalar angle_shift_u(Scalar l1, Scalar l2, Scalar theta) {
  return lifted_shift(l2, l1, std::numbers::pi_v<Scalar> - wrap_pi(theta));
}

/// Angle between the expanded line of A1 and the contracted line of A2 in the
/// form used by the shift laws.
template <typename Scalar>
Scalar composition_angle(Scalar s2, Scalar u1) {
  return wrap_pi(std::numbers::pi_v<Scalar> / 2 - (s2 - u1));
}

/// s(A2 A1) from the two polar forms alone.
template <typename Scalar>
Scalar composed_s(const PolarFormT<Scalar>& p1, const PolarFormT<Scalar>& p2) {
  return wrap_pi(p1.s - angle_shift_s(p1.norm, p2.norm, composition_angle(p2.s, p1.u)));
}

/// u(A2 A1) from the two polar forms alone.
template <typename Scalar>
Scalar composed_u(const PolarFormT<Scalar>& p1, const PolarFormT<Scalar>& p2) {
  return wrap_pi(p2.u - angle_shift_u(p1.norm, p2.norm, composition_angle(p2.s, p1.u)));
}

/// Image of the line at angle dir under A.
template <typename Scalar>
Scalar direction_pushforward(const Mat2T<Scalar>& a, Scalar dir) {
  const Vec2T<Scalar> w = a * unit(dir);
  return wrap_pi(std::atan2(w(1), w(0)));
}

/// Derivative of the induced projective map at dir: det(A) / |A unit(dir)|^2.
template <typename Scalar>
Scalar direction_pushforward_derivative(const Mat2T<Scalar>& a, Scalar dir) {
  const Vec2T<Scalar> w = a * unit(dir);
  return a.determinant() / w.squaredNorm();
}

template <typename Scalar>
struct DirectionEstimate {
  Scalar direction;
  Scalar bound;  // C / ||E2 E1||^2
};

inline constexpr double kProductDirConstant = 10.0;

namespace detail {
template <typename Scalar>
void require_norm_order(Scalar big, Scalar small) {
  const Scalar slack = 1 - 64 * std::numeric_limits<Scalar>::epsilon();
  if (!(small * small >= 4 * slack) || !(big >= small * small * slack))
    throw std::invalid_argument("norm ordering ||big|| >= ||small||^2 >= 4 violated");
}
}  // namespace detail

/// s(E2 E1) ~ E1^{-1} s(E2) when ||E2|| >= ||E1||^2 >= 4.
template <typename Scalar>
DirectionEstimate<Scalar> contracted_dir_of_product(const Mat2T<Scalar>& e2, const Mat2T<Scalar>& e1) {
  detail::require_norm_order(op_norm(e2), op_norm(e1));
  const Scalar s2 = contracted_dir(e2);
  const Scalar n = op_norm(Mat2T<Scalar>(e2 * e1));
  return {direction_pushforward(Mat2T<Scalar>(adjugate(e1)), s2),
          Scalar(kProductDirConstant) / (n * n)};
}

/// u(E2 E1) ~ E2 u(E1) when ||E1|| >= ||E2||^2 >= 4.
template <typename Scalar>
DirectionEstimate<Scalar> expanded_dir_of_product(const Mat2T<Scalar>& e2, const Mat2T<Scalar>& e1) {
  detail::require_norm_order(op_norm(e1), op_norm(e2));
  const Scalar u1 = expanded_dir(e1);
  const Scalar n = op_norm(Mat2T<Scalar>(e2 * e1));
  return {direction_pushforward(e2, u1), Scalar(kProductDirConstant) / (n * n)};
}

/// A (possibly rescaled) block product: the true matrix is exp(log_scale) * m,
/// covering `length` base steps.
template <typename Scalar>
struct BlockT {
  Mat2T<Scalar> m = Mat2T<Scalar>::Identity();
  Scalar log_scale = 0;
  long length = 1;

  Scalar log_norm() const { return std::log(op_norm(m)) + log_scale; }
};
using Block = BlockT<double>;

struct UhCriteria {
  double min_beta_gamma = 4.0;
  double min_gamma_sqrt_beta = 2.0;
};

struct UhCertificate {
  double log_beta = 0;  // log of the smallest block norm
  double gamma = 0;     // smallest |tan(s(B_k) - u(B_{k-1}))|
  double rate = 1;      // per-step growth rate
  bool valid = false;
};

/// Certificate from a lower bound exp(log_beta) on block norms, a lower bound
/// gamma on |tan| of junction angles and the mean block length. Valid iff
/// beta*gamma >= 4, gamma*sqrt(beta) >= 2 and the rate
/// (beta*min(gamma,1)/4)^(1/mean length) exceeds one.
inline UhCertificate uh_certificate_from_bounds(double log_beta, double gamma, double mean_length,
                                                const UhCriteria& crit = {}) {
  UhCertificate cert;
  cert.log_beta = log_beta;
  cert.gamma = gamma;
  if (!(log_beta > 0) || !(gamma > 0) || !(mean_length > 0)) return cert;
  const double log_g = std::log(gamma);
  const bool ok = log_beta + log_g >= std::log(crit.min_beta_gamma) &&
                  log_g + 0.5 * log_beta >= std::log(crit.min_gamma_sqrt_beta);
  if (!ok) return cert;
  const double log_rate = (log_beta + std::min(log_g, 0.0) - std::log(4.0)) / mean_length;
  cert.rate = std::exp(log_rate);
  cert.valid = log_rate > 0;
  return cert;
}

/// Block-product hyperbolicity test on consecutive blocks: beta = min block
/// norm, gamma = min over consecutive pairs of |tan(s(B_k) - u(B_{k-1}))|.
/// Needs at least two blocks.
template <typename Scalar>
UhCertificate uh_block_certificate(std::span<const BlockT<Scalar>> blocks, const UhCriteria& crit = {}) {
  UhCertificate cert;
  if (blocks.empty()) return cert;
  double log_beta = std::numeric_limits<double>::infinity();
  double total_len = 0;
  for (const auto& b : blocks) {
    log_beta = std::min(log_beta, static_cast<double>(b.log_norm()));
    total_len += static_cast<double>(b.length);
  }
  cert.log_beta = log_beta;
  if (blocks.size() < 2 || !(log_beta > 0)) return cert;

  double gamma = std::numeric_limits<double>::infinity();
  std::vector<PolarFormT<Scalar>> pf;
  pf.reserve(blocks.size());
  try {
    for (const auto& b : blocks) pf.push_back(polar(b.m));
  } catch (const IllConditionedDirection&) {
    return cert;
  }
  for (std::size_t k = 1; k < pf.size(); ++k)
    gamma = std::min(gamma, static_cast<double>(std::abs(std::tan(pf[k].s - pf[k - 1].u))));
  cert = uh_certificate_from_bounds(log_beta, gamma, total_len / static_cast<double>(blocks.size()), crit);
  cert.gamma = gamma;
  return cert;
}

template <typename Scalar>
UhCertificate uh_block_certificate(const std::vector<BlockT<Scalar>>& blocks, const UhCriteria& crit = {}) {
  return uh_block_certificate(std::span<const BlockT<Scalar>>(blocks), crit);
}

}  // namespace qpspec
