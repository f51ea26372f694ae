#pragma once

// Base dynamics: continued fractions, Diophantine constants, circle rotation
// orbits and first-return times.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace qpspec {

/// Reduce to [0, 1).
double wrap_unit(long double x);

/// Wrap-aware distance on R/Z.
double circle_dist(double x, double y);

/// Representative of x mod 1 in (-1/2, 1/2].
double circle_signed(double x);

/// (p + sqrt(d)) / q with d > 0 not a perfect square.
struct QuadraticSurd {
  std::int64_t p;
  std::int64_t d;
  std::int64_t q;
};

struct Convergent {
  std::int64_t p;
  std::int64_t q;
};

/// An irrational rotation number in (0, 1) with its continued fraction data.
/// Convergents are indexed from 1: convergents[0] is p_1/q_1 with q_1 = a_1.
struct Frequency {
  long double alpha = 0;
  std::vector<std::int64_t> partial_quotients;
  std::vector<Convergent> convergents;
  /// Expansion stopped early because alpha could not be told apart from a
  /// rational at working precision.
  bool truncated = false;
  std::optional<QuadraticSurd> surd;

  double value() const { return static_cast<double>(alpha); }
  /// q_n, 1-based; throws std::out_of_range past the stored depth.
  std::int64_t q(std::size_t n) const;
  std::int64_t p(std::size_t n) const;
  std::size_t depth() const { return convergents.size(); }
};

Frequency continued_fraction(double alpha, int depth);
Frequency continued_fraction(const QuadraticSurd& surd, int depth);
Frequency golden_mean(int depth = 40);
Frequency silver_mean(int depth = 40);

struct DiophantineEstimate {
  double tau;
  double gamma;
  int depth;
};

/// gamma = min over stored denominators q of q^{tau-1} dist(q alpha, Z).
DiophantineEstimate diophantine_estimate(const Frequency& freq, double tau);

/// x + n alpha mod 1.
double orbit_point(double x, const Frequency& freq, std::int64_t n);

/// Open arc (center - radius, center + radius) on R/Z.
struct Arc {
  double center;
  double radius;
};

/// Pairwise disjoint open arcs on the circle with total measure < 1.
class IntervalUnion {
 public:
  IntervalUnion() = default;
  explicit IntervalUnion(std::vector<Arc> arcs);

  /// Builds a union from possibly overlapping arcs, fusing the overlaps.
  static IntervalUnion merged(std::vector<Arc> arcs);

  bool contains(double x) const;
  std::span<const Arc> arcs() const { return arcs_; }
  std::size_t size() const { return arcs_.size(); }
  double measure() const;

 private:
  std::vector<Arc> arcs_;
};

enum class Heading { forward, backward };

inline constexpr std::int64_t kDefaultReturnCap = 10'000'000;

/// Smallest l >= min_steps with x +/- l alpha in target, by exhaustive scan.
/// Returns nullopt when no return happens within cap steps.
std::optional<std::int64_t> first_return_time(double x, const IntervalUnion& target,
                                              const Frequency& freq, Heading heading,
                                              std::int64_t min_steps,
                                              std::int64_t cap = kDefaultReturnCap);

}  // namespace qpspec
