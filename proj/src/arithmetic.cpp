#include "qpspec/arithmetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qpspec {

double wrap_unit(long double x) {
  long double r = x - std::floor(x);
  if (r >= 1.0L) r -= 1.0L;
  double d = static_cast<double>(r);
  return d >= 1.0 ? 0.0 : d;
}

double circle_dist(double x, double y) {
  double d = std::fabs(x - y);
  d -= std::floor(d);
  return std::min(d, 1.0 - d);
}

double circle_signed(double x) {
  double r = x - std::floor(x);
  return r > 0.5 ? r - 1.0 : r;
}

std::int64_t Frequency::q(std::size_t n) const {
  if (n == 0 || n > convergents.size())
    throw std::out_of_range("convergent index " + std::to_string(n) + " beyond depth " +
                            std::to_string(convergents.size()));
  return convergents[n - 1].q;
}

std::int64_t Frequency::p(std::size_t n) const {
  if (n == 0 || n > convergents.size())
    throw std::out_of_range("convergent index " + std::to_string(n) + " beyond depth " +
                            std::to_string(convergents.size()));
  return convergents[n - 1].p;
}

namespace {

// Appends a_n and the matching convergent; false on int64 overflow.
bool push_quotient(Frequency& f, std::int64_t a, Convergent& prev, Convergent& prev2) {
  __int128 p = static_cast<__int128>(a) * prev.p + prev2.p;
  __int128 q = static_cast<__int128>(a) * prev.q + prev2.q;
  if (q > std::numeric_limits<std::int64_t>::max() || p > std::numeric_limits<std::int64_t>::max())
    return false;
  f.partial_quotients.push_back(a);
  prev2 = prev;
  prev = {static_cast<std::int64_t>(p), static_cast<std::int64_t>(q)};
  f.convergents.push_back(prev);
  return true;
}

std::int64_t isqrt(std::int64_t n) {
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<long double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

Frequency continued_fraction(double alpha, int depth) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");

  Frequency f;
  f.alpha = alpha;
  Convergent prev{0, 1}, prev2{1, 0};  // p_0/q_0 = 0/1, p_{-1}/q_{-1} = 1/0
  const long double eps = std::numeric_limits<long double>::epsilon();
  long double x = alpha;
  long double err = 0;  // the input double is taken as exact
  for (int n = 0; n < depth; ++n) {
    if (x == 0) {
      f.truncated = true;
      break;
    }
    long double y = 1.0L / x;
    long double y_err = err / (x * x) + eps * y;
    long double a = std::floor(y);
    long double frac = y - a;
    // the floor is ambiguous once the error reaches the nearest integer
    if (frac < 4 * y_err || 1.0L - frac < 4 * y_err || a > 9.0e18L) {
      f.truncated = true;
      break;
    }
    if (!push_quotient(f, static_cast<std::int64_t>(a), prev, prev2)) {
      f.truncated = true;
      break;
    }
    x = frac;
    err = y_err;
  }
  return f;
}

Frequency continued_fraction(const QuadraticSurd& surd, int depth) {
  if (surd.q == 0 || surd.d <= 0) throw std::invalid_argument("invalid quadratic surd");
  std::int64_t root = isqrt(surd.d);
  if (root * root == surd.d) throw std::invalid_argument("surd radicand is a perfect square");
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");

  long double alpha = (static_cast<long double>(surd.p) + std::sqrt(static_cast<long double>(surd.d))) /
                      static_cast<long double>(surd.q);
  if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("surd value must lie in (0, 1)");

  // Normalise so that q | (d - p^2).
  std::int64_t P = surd.p, D = surd.d, Q = surd.q;
  if ((D - P * P) % Q != 0) {
    std::int64_t aq = Q < 0 ? -Q : Q;
    P *= aq;
    D *= Q * Q;
    Q *= aq;
    root = isqrt(D);
  }

  Frequency f;
  f.alpha = alpha;
  f.surd = surd;
  Convergent prev{0, 1}, prev2{1, 0};
  auto next_quotient = [&]() {
    std::int64_t a = Q > 0 ? floor_div(P + root, Q) : floor_div(P + root + 1, Q);
    P = a * Q - P;
    Q = (D - P * P) / Q;
    return a;
  };
  next_quotient();  // a_0 = 0
  for (int n = 0; n < depth; ++n) {
    if (!push_quotient(f, next_quotient(), prev, prev2)) {
      f.truncated = true;
      break;
    }
  }
  return f;
}

Frequency golden_mean(int depth) { return continued_fraction(QuadraticSurd{-1, 5, 2}, depth); }

Frequency silver_mean(int depth) { return continued_fraction(QuadraticSurd{-1, 2, 1}, depth); }

DiophantineEstimate diophantine_estimate(const Frequency& freq, double tau) {
  if (tau < 2.0) throw std::invalid_argument("tau must be >= 2");
  if (freq.convergents.empty()) throw std::invalid_argument("no convergents to examine");
  if (freq.truncated && !freq.surd)
    throw std::invalid_argument("frequency is rational at working precision");
  double gamma = std::numeric_limits<double>::infinity();
  for (const auto& c : freq.convergents) {
    long double qa = static_cast<long double>(c.q) * freq.alpha;
    long double dist = std::fabs(qa - std::nearbyint(qa));
    double value = std::pow(static_cast<double>(c.q), tau - 1.0) * static_cast<double>(dist);
    gamma = std::min(gamma, value);
  }
  return {tau, gamma, static_cast<int>(freq.convergents.size())};
}

double orbit_point(double x, const Frequency& freq, std::int64_t n) {
  long double na = static_cast<long double>(n) * freq.alpha;
  na -= std::floor(na);
  return wrap_unit(static_cast<long double>(x) + na);
}

IntervalUnion::IntervalUnion(std::vector<Arc> arcs) : arcs_(std::move(arcs)) {
  double total = 0;
  for (auto& a : arcs_) {
    if (!(a.radius > 0)) throw std::invalid_argument("arc radius must be positive");
    a.center = wrap_unit(a.center);
    total += 2 * a.radius;
  }
  if (total >= 1.0) throw std::invalid_argument("interval union must have measure < 1");
  for (std::size_t i = 0; i < arcs_.size(); ++i)
    for (std::size_t j = i + 1; j < arcs_.size(); ++j)
      if (circle_dist(arcs_[i].center, arcs_[j].center) < arcs_[i].radius + arcs_[j].radius)
        throw std::invalid_argument("arcs overlap");
}

IntervalUnion IntervalUnion::merged(std::vector<Arc> arcs) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < arcs.size() && !changed; ++i) {
      for (std::size_t j = i + 1; j < arcs.size() && !changed; ++j) {
        double gap = circle_dist(arcs[i].center, arcs[j].center);
        if (gap < arcs[i].radius + arcs[j].radius) {
          // fuse along the shorter connecting arc
          double delta = circle_signed(arcs[j].center - arcs[i].center);
          double lo = std::min(-arcs[i].radius, delta - arcs[j].radius);
          double hi = std::max(arcs[i].radius, delta + arcs[j].radius);
          Arc fused{wrap_unit(arcs[i].center + 0.5 * (lo + hi)), 0.5 * (hi - lo)};
          arcs[i] = fused;
          arcs.erase(arcs.begin() + static_cast<std::ptrdiff_t>(j));
          changed = true;
        }
      }
    }
  }
  return IntervalUnion(std::move(arcs));
}

bool IntervalUnion::contains(double x) const {
  for (const auto& a : arcs_)
    if (circle_dist(x, a.center) < a.radius) return true;
  return false;
}

double IntervalUnion::measure() const {
  double m = 0;
  for (const auto& a : arcs_) m += 2 * a.radius;
  return m;
}

std::optional<std::int64_t> first_return_time(double x, const IntervalUnion& target,
                                              const Frequency& freq, Heading heading,
                                              std::int64_t min_steps, std::int64_t cap) {
  if (!target.contains(x)) throw std::invalid_argument("start point is not in the target set");
  if (cap <= min_steps) throw std::invalid_argument("cap must exceed min_steps");
  const long double step = heading == Heading::forward ? freq.alpha : -freq.alpha;
  long double y = x;
  for (std::int64_t l = 1; l <= cap; ++l) {
    y += step;
    if (y >= 1.0L)
      y -= 1.0L;
    else if (y < 0.0L)
      y += 1.0L;
    if (l >= min_steps && target.contains(static_cast<double>(y))) return l;
  }
  return std::nullopt;
}

}  // namespace qpspec
