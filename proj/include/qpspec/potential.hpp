#pragma once

// 1-periodic potentials v(x): the builtin cosine, a periodic cubic spline
// through uniform samples, and constants (free operator).

#include <string>
#include <vector>

namespace qpspec {

struct CosineTypeReport {
  bool ok = false;
  std::vector<double> critical_points;  // zeros of v' on [0, 1)
  std::vector<double> second_derivs;    // v'' at those points
  std::string reason;
};

class Potential {
 public:
  enum class Kind { cosine, sampled, constant };

  /// v(x) = cos(2 pi x).
  static Potential cosine();
  /// Periodic cubic spline through v(i/n) = samples[i], n >= 8.
  static Potential sampled(std::vector<double> samples);
  /// Reads whitespace-separated samples from a text file ('#' starts a comment).
  static Potential from_file(const std::string& path);
  static Potential constant(double c);

  Kind kind() const { return kind_; }
  std::string describe() const;

  double value(double x) const;
  double d1(double x) const;
  double d2(double x) const;

  double min_value() const { return min_v_; }
  double max_value() const { return max_v_; }
  double argmin() const { return argmin_; }
  double argmax() const { return argmax_; }

  /// Lebesgue measure of {x in [0,1) : v(x) < s}.
  double sublevel_measure(double s) const;

  /// Points of [0,1) where v(x) = s, sorted. Empty if s is outside (min, max).
  std::vector<double> level_crossings(double s) const;

  /// Exactly two nondegenerate critical points.
  CosineTypeReport validate_cosine_type() const;

 private:
  Potential() = default;
  void locate_extrema();

  Kind kind_ = Kind::constant;
  double c_ = 0;
  std::vector<double> y_, m_;  // spline knots and second derivatives
  double min_v_ = 0, max_v_ = 0, argmin_ = 0, argmax_ = 0;
};

}  // namespace qpspec
