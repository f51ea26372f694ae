#include "qpspec/cocycle.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qpspec {

namespace {

constexpr long double kTwoPiL = 2 * std::numbers::pi_v<long double>;

// v(y + k alpha) for k = 0, 1, ... . The cosine uses a complex rotation
// recurrence, resynchronised every 256 steps.
class OrbitValues {
 public:
  OrbitValues(long double y0, const Frequency& freq, const Potential& pot)
      : y0_(y0), alpha_(freq.alpha), pot_(pot), cosine_(pot.kind() == Potential::Kind::cosine) {
    if (cosine_) {
      w_ = std::polar(1.0, static_cast<double>(kTwoPiL * alpha_));
      sync();
    }
  }

  double next() {
    double v;
    if (cosine_) {
      if ((k_ & 255) == 0 && k_ != 0) sync();
      v = z_.real();
      z_ *= w_;
    } else {
      long double y = y0_ + static_cast<long double>(k_) * alpha_;
      v = pot_.value(wrap_unit(y));
    }
    ++k_;
    return v;
  }

 private:
  void sync() {
    long double y = y0_ + static_cast<long double>(k_) * alpha_;
    y -= std::floor(y);
    z_ = std::polar(1.0, static_cast<double>(kTwoPiL * y));
  }

  long double y0_, alpha_;
  const Potential& pot_;
  bool cosine_;
  std::int64_t k_ = 0;
  std::complex<double> z_{1, 0}, w_{1, 0};
};

struct Acc {
  double a = 1, b = 0, c = 0, d = 1;
  double log_scale = 0;

  void renormalize() {
    double m = std::max(std::max(std::abs(a), std::abs(b)), std::max(std::abs(c), std::abs(d)));
    if (!std::isfinite(m) || m == 0) throw std::overflow_error("transfer product overflow");
    int k = std::ilogb(m);
    if (k == 0) return;
    a = std::ldexp(a, -k);
    b = std::ldexp(b, -k);
    c = std::ldexp(c, -k);
    d = std::ldexp(d, -k);
    log_scale += k * std::numbers::ln2;
  }

  Mat2 mat() const {
    Mat2 m;
    m << a, b, c, d;
    return m;
  }
};

// Forward product of n >= 0 steps from y0.
Acc forward_product(long double y0, std::int64_t n, const CocycleParams& p, const Potential& pot, Frame frame) {
  Acc acc;
  if (n == 0) return acc;
  const double lam = p.lambda, t = p.t;
  const double e = frame == Frame::raw ? 1.0 : 1.0 / lam;
  const double f = frame == Frame::raw ? 1.0 : lam;
  OrbitValues orbit(y0, p.freq, pot);
  for (std::int64_t k = 0; k < n; ++k) {
    const double diag = lam * (t - orbit.next());
    const double a = diag * acc.a - e * acc.c;
    const double b = diag * acc.b - e * acc.d;
    acc.c = f * acc.a;
    acc.d = f * acc.b;
    acc.a = a;
    acc.b = b;
    if ((k & 31) == 31) acc.renormalize();
  }
  acc.renormalize();
  return acc;
}

}  // namespace

Mat2 step_matrix(double x, const CocycleParams& params, const Potential& pot, Frame frame) {
  const double lam = params.lambda;
  const double diag = lam * (params.t - pot.value(x));
  Mat2 m;
  if (frame == Frame::raw)
    m << diag, -1, 1, 0;
  else
    m << diag, -1 / lam, lam, 0;
  return m;
}

Window spectral_window(const CocycleParams& params, const Potential& pot) {
  return {pot.min_value() - 2 / params.lambda, pot.max_value() + 2 / params.lambda};
}

Mat2 TransferResult::value() const { return std::exp(log_scale) * matrix; }

TransferResult transfer(double x, const CocycleParams& params, const Potential& pot, std::int64_t n, Frame frame) {
  TransferResult r;
  if (n == 0) return r;
  Acc acc;
  if (n > 0) {
    acc = forward_product(x, n, params, pot, frame);
    r.matrix = acc.mat();
  } else {
    long double y = static_cast<long double>(x) + static_cast<long double>(n) * params.freq.alpha;
    acc = forward_product(y - std::floor(y), -n, params, pot, frame);
    r.matrix = adjugate(acc.mat());
  }
  r.log_scale = acc.log_scale;
  r.log_norm = std::log(op_norm(r.matrix)) + r.log_scale;
  try {
    auto pf = polar(r.matrix);
    r.s = pf.s;
    r.u = pf.u;
  } catch (const IllConditionedDirection&) {
  }
  return r;
}

Block block_product(double x, const CocycleParams& params, const Potential& pot, std::int64_t n, Frame frame) {
  if (n < 0) throw std::invalid_argument("block length must be nonnegative");
  Acc acc = forward_product(x, n, params, pot, frame);
  return {acc.mat(), acc.log_scale, static_cast<long>(n)};
}

double lyapunov(const CocycleParams& params, const Potential& pot, std::int64_t n, LyapunovMethod method,
                int phase_count, double x0) {
  if (n < 1) throw std::invalid_argument("lyapunov needs n >= 1");
  if (phase_count < 1) throw std::invalid_argument("phase_count must be >= 1");
  if (method == LyapunovMethod::single_orbit) {
    const std::int64_t total = n * phase_count;
    Acc acc = forward_product(x0, total, params, pot, Frame::raw);
    return (std::log(op_norm(acc.mat())) + acc.log_scale) / static_cast<double>(total);
  }
  std::vector<double> vals(static_cast<std::size_t>(phase_count));
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < phase_count; ++j) {
    double x = wrap_unit(x0 + static_cast<double>(j) / phase_count);
    Acc acc = forward_product(x, n, params, pot, Frame::raw);
    vals[static_cast<std::size_t>(j)] = std::log(op_norm(acc.mat())) + acc.log_scale;
  }
  // fixed-order sum keeps the result independent of the thread count
  double sum = 0;
  for (double v : vals) sum += v;
  return sum / (static_cast<double>(phase_count) * static_cast<double>(n));
}

G1Value initial_angle_g1(double x, const CocycleParams& params, const Potential& pot) {
  if (!(params.lambda > 1)) throw std::invalid_argument("initial_angle_g1 needs lambda > 1");
  G1Value r{};
  const double xm = orbit_point(x, params.freq, -1);
  try {
    const double s = contracted_dir(step_matrix(x, params, pot, Frame::scaled));
    const double u = expanded_dir(step_matrix(xm, params, pot, Frame::scaled));
    r.g = wrap_half_pi(s - u);
  } catch (const IllConditionedDirection&) {
    // two-step blocks on each side
    r.fallback = true;
    const double s = contracted_dir(block_product(x, params, pot, 2, Frame::scaled).m);
    const double u = expanded_dir(block_product(orbit_point(x, params.freq, -2), params, pot, 2, Frame::scaled).m);
    r.g = wrap_half_pi(s - u);
  }
  r.approx = std::atan(params.t - pot.value(xm));
  r.diff = direction_dist(r.g, r.approx);
  return r;
}

double angle_value(double x, const CocycleParams& params, const Potential& pot, ReturnTimes rt) {
  const double xw = wrap_unit(x);
  const Block plus = block_product(xw, params, pot, rt.plus, Frame::scaled);
  const Block minus = block_product(orbit_point(xw, params.freq, -rt.minus), params, pot, rt.minus, Frame::scaled);
  return wrap_half_pi(contracted_dir(plus.m) - expanded_dir(minus.m));
}

double lift_increment(double a, double b, double ga, double gb, const CocycleParams& params,
                      const Potential& pot, const ReturnTimeFn& returns, int max_refine) {
  const double inc = wrap_half_pi(gb - ga);
  if (std::abs(inc) <= std::numbers::pi / 4) return inc;
  if (max_refine <= 0)
    throw ProfileError("angle lift unresolved between x=" + std::to_string(a) + " and x=" + std::to_string(b));
  const double m = 0.5 * (a + b);
  const double gm = angle_value(m, params, pot, returns(wrap_unit(m)));
  return lift_increment(a, m, ga, gm, params, pot, returns, max_refine - 1) +
         lift_increment(m, b, gm, gb, params, pot, returns, max_refine - 1);
}

AngleProfile angle_profile(const IntervalUnion& intervals, const CocycleParams& params, const Potential& pot,
                           const ReturnTimeFn& returns, const ProfileOptions& opt) {
  if (opt.points < 3) throw std::invalid_argument("profile needs at least 3 points per interval");
  AngleProfile prof;
  for (const Arc& arc : intervals.arcs()) {
    ProfileInterval pi;
    pi.arc = arc;
    const auto n = static_cast<std::size_t>(opt.points);
    const double h = 2 * arc.radius / static_cast<double>(n);
    pi.x.resize(n);
    pi.r_plus.resize(n);
    pi.r_minus.resize(n);
    std::vector<double> g(n);
    std::string failure;
#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t i = 0; i < n; ++i) {
      const double x = arc.center - arc.radius + (static_cast<double>(i) + 0.5) * h;
      pi.x[i] = x;
      try {
        ReturnTimes rt = returns(wrap_unit(x));
        pi.r_plus[i] = rt.plus;
        pi.r_minus[i] = rt.minus;
        g[i] = angle_value(x, params, pot, rt);
      } catch (const std::exception& e) {
#pragma omp critical
        failure = "profile point x=" + std::to_string(wrap_unit(x)) + ": " + e.what();
      }
    }
    if (!failure.empty()) throw ProfileError(failure);

    pi.lift.resize(n);
    pi.lift[0] = g[0];
    for (std::size_t i = 1; i < n; ++i)
      pi.lift[i] = pi.lift[i - 1] +
                   lift_increment(pi.x[i - 1], pi.x[i], g[i - 1], g[i], params, pot, returns, opt.max_refine);

    pi.d1.resize(n);
    pi.d2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t lo = i == 0 ? 0 : i - 1, hi = i + 1 == n ? n - 1 : i + 1;
      pi.d1[i] = (pi.lift[hi] - pi.lift[lo]) / (static_cast<double>(hi - lo) * h);
      const std::size_t c = std::min(std::max<std::size_t>(i, 1), n - 2);
      pi.d2[i] = (pi.lift[c + 1] - 2 * pi.lift[c] + pi.lift[c - 1]) / (h * h);
    }
    prof.intervals.push_back(std::move(pi));
  }
  return prof;
}

}  // namespace qpspec
