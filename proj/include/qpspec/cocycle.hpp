#pragma once

// Schrodinger cocycle (alpha, A) with A(x) = [[E - lambda v(x), -1], [1, 0]],
// E = lambda t. Transfer products, Lyapunov exponents and the angle
// functions g_n built from return-time block products.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qpspec/arithmetic.hpp"
#include "qpspec/potential.hpp"
#include "qpspec/sl2.hpp"

namespace qpspec {

struct CocycleParams {
  Frequency freq;
  double lambda = 1;
  double t = 0;

  double energy() const { return lambda * t; }
};

/// raw: the Schrodinger matrix itself. scaled: its conjugate by
/// D = diag(sqrt(lambda), 1/sqrt(lambda)),
///   M(x) = D^{-1} A(x) D = [[lambda (t - v), -1/lambda], [lambda, 0]],
/// whose norm is at least lambda, so singular directions of single steps are
/// always well defined. D is constant, so norms change by at most a factor
/// lambda and Lyapunov exponents, rotation numbers and gaps are unchanged.
enum class Frame { raw, scaled };

Mat2 step_matrix(double x, const CocycleParams& params, const Potential& pot, Frame frame = Frame::raw);

/// Spectral window for t: [min v - 2/lambda, max v + 2/lambda].
struct Window {
  double lo, hi;
  bool contains(double t) const { return t >= lo && t <= hi; }
};
Window spectral_window(const CocycleParams& params, const Potential& pot);

struct TransferResult {
  Mat2 matrix = Mat2::Identity();  // true product is exp(log_scale) * matrix
  double log_scale = 0;
  double log_norm = 0;
  std::optional<double> s, u;  // when the product is not near-conformal

  Mat2 value() const;
};

/// A_n(x) = A(x + (n-1) alpha) ... A(x); A_0 = I; A_n(x) = A_{-n}(x + n alpha)^{-1} for n < 0.
/// Renormalised by a power of two every 32 steps.
TransferResult transfer(double x, const CocycleParams& params, const Potential& pot, std::int64_t n,
                        Frame frame = Frame::raw);

/// Forward product of n >= 0 steps starting at x, as a block.
Block block_product(double x, const CocycleParams& params, const Potential& pot, std::int64_t n,
                    Frame frame = Frame::raw);

enum class LyapunovMethod { phase_average, single_orbit };

/// phase_average: mean of log||A_n(x_j)||/n over phase_count uniform phases.
/// single_orbit: log||A_N(x0)||/N along one orbit of N = n * phase_count steps.
double lyapunov(const CocycleParams& params, const Potential& pot, std::int64_t n, LyapunovMethod method,
                int phase_count = 64, double x0 = 0.0);

struct G1Value {
  double g;       // s(M(x)) - u(M(x - alpha)), reduced to (-pi/2, pi/2]
  double approx;  // arctan(t - v(x - alpha))
  double diff;    // |g - approx| on RP^1
  bool fallback;  // a two-step block was needed
};

G1Value initial_angle_g1(double x, const CocycleParams& params, const Potential& pot);

struct ReturnTimes {
  std::int64_t plus = 1;
  std::int64_t minus = 1;
};
using ReturnTimeFn = std::function<ReturnTimes(double)>;

/// g(x) = s(M_{r+}(x)) - u(M_{r-}(x - r- alpha)) in the scaled frame, reduced
/// to (-pi/2, pi/2].
double angle_value(double x, const CocycleParams& params, const Potential& pot, ReturnTimes rt);

struct ProfileInterval {
  Arc arc;
  std::vector<double> x;     // uniform cell centres, unwrapped (may leave [0, 1))
  std::vector<double> lift;  // continuous lift of g
  std::vector<double> d1, d2;
  std::vector<std::int64_t> r_plus, r_minus;

  double spacing() const { return 2 * arc.radius / static_cast<double>(x.size()); }
};

struct AngleProfile {
  std::vector<ProfileInterval> intervals;
};

struct ProfileOptions {
  int points = 2048;
  int max_refine = 30;
};

/// Thrown when a profile cannot be lifted continuously or a direction fails.
struct ProfileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

AngleProfile angle_profile(const IntervalUnion& intervals, const CocycleParams& params, const Potential& pot,
                           const ReturnTimeFn& returns, const ProfileOptions& opt = {});

/// Lift increment of g between a and b (same interval), following the path
/// through midpoints until every step is below pi/4.
double lift_increment(double a, double b, double ga, double gb, const CocycleParams& params,
                      const Potential& pot, const ReturnTimeFn& returns, int max_refine);

}  // namespace qpspec
