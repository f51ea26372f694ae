#include "qpspec/potential.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace qpspec {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

double frac(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

// Sign changes of f on a uniform grid of [0,1), refined by bisection.
template <typename F>
std::vector<double> periodic_roots(F f, int grid) {
  std::vector<double> roots;
  double x0 = 0, f0 = f(0.0);
  for (int i = 1; i <= grid; ++i) {
    double x1 = static_cast<double>(i) / grid;
    double f1 = f(x1);
    if (f0 == 0) {
      roots.push_back(x0);
    } else if ((f0 < 0) != (f1 < 0) && f1 != 0) {
      double a = x0, b = x1, fa = f0;
      for (int it = 0; it < 60 && b - a > 1e-15; ++it) {
        double m = 0.5 * (a + b), fm = f(m);
        if (fm == 0) {
          a = b = m;
          break;
        }
        if ((fm < 0) == (fa < 0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      roots.push_back(frac(0.5 * (a + b)));
    }
    x0 = x1;
    f0 = f1;
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace

Potential Potential::cosine() {
  Potential p;
  p.kind_ = Kind::cosine;
  p.min_v_ = -1;
  p.max_v_ = 1;
  p.argmin_ = 0.5;
  p.argmax_ = 0;
  return p;
}

Potential Potential::constant(double c) {
  Potential p;
  p.kind_ = Kind::constant;
  p.c_ = c;
  p.min_v_ = p.max_v_ = c;
  return p;
}

Potential Potential::sampled(std::vector<double> samples) {
  const std::size_t n = samples.size();
  if (n < 8) throw std::invalid_argument("sampled potential needs at least 8 samples");
  for (double s : samples)
    if (!std::isfinite(s)) throw std::invalid_argument("non-finite potential sample");
  Potential p;
  p.kind_ = Kind::sampled;
  p.y_ = std::move(samples);
  // m_{i-1} + 4 m_i + m_{i+1} = 6 (y_{i+1} - 2 y_i + y_{i-1}) / h^2, cyclic.
  // Strict diagonal dominance makes Jacobi contract by 1/2 per sweep.
  const double h2 = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  std::vector<double> rhs(n), m(n, 0.0), next(n);
  for (std::size_t i = 0; i < n; ++i)
    rhs[i] = 6 * (p.y_[(i + 1) % n] - 2 * p.y_[i] + p.y_[(i + n - 1) % n]) / h2;
  for (int sweep = 0; sweep < 80; ++sweep) {
    for (std::size_t i = 0; i < n; ++i)
      next[i] = (rhs[i] - m[(i + n - 1) % n] - m[(i + 1) % n]) / 4;
    m.swap(next);
  }
  p.m_ = std::move(m);
  p.locate_extrema();
  return p;
}

Potential Potential::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open potential file " + path);
  std::vector<double> samples;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    double v;
    while (ss >> v) samples.push_back(v);
    if (!ss.eof()) throw std::runtime_error("malformed sample in " + path);
  }
  return sampled(std::move(samples));
}

std::string Potential::describe() const {
  switch (kind_) {
    case Kind::cosine:
      return "cosine";
    case Kind::sampled:
      return "sampled(" + std::to_string(y_.size()) + ")";
    case Kind::constant:
      break;
  }
  std::ostringstream os;
  os << "constant(" << c_ << ")";
  return os.str();
}

double Potential::value(double x) const {
  switch (kind_) {
    case Kind::cosine:
      return std::cos(kTwoPi * x);
    case Kind::constant:
      return c_;
    case Kind::sampled:
      break;
  }
  const std::size_t n = y_.size();
  const double pos = frac(x) * static_cast<double>(n);
  const std::size_t i = std::min(static_cast<std::size_t>(pos), n - 1);
  const std::size_t j = (i + 1) % n;
  const double b = pos - static_cast<double>(i), a = 1 - b;
  const double h2 = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  return a * y_[i] + b * y_[j] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[j]) * h2 / 6;
}

double Potential::d1(double x) const {
  switch (kind_) {
    case Kind::cosine:
      return -kTwoPi * std::sin(kTwoPi * x);
    case Kind::constant:
      return 0;
    case Kind::sampled:
      break;
  }
  const std::size_t n = y_.size();
  const double nd = static_cast<double>(n), h = 1.0 / nd;
  const double pos = frac(x) * nd;
  const std::size_t i = std::min(static_cast<std::size_t>(pos), n - 1);
  const std::size_t j = (i + 1) % n;
  const double b = pos - static_cast<double>(i), a = 1 - b;
  return (y_[j] - y_[i]) * nd - (3 * a * a - 1) / 6 * h * m_[i] + (3 * b * b - 1) / 6 * h * m_[j];
}

double Potential::d2(double x) const {
  switch (kind_) {
    case Kind::cosine:
      return -kTwoPi * kTwoPi * std::cos(kTwoPi * x);
    case Kind::constant:
      return 0;
    case Kind::sampled:
      break;
  }
  const std::size_t n = y_.size();
  const double pos = frac(x) * static_cast<double>(n);
  const std::size_t i = std::min(static_cast<std::size_t>(pos), n - 1);
  const double b = pos - static_cast<double>(i);
  return (1 - b) * m_[i] + b * m_[(i + 1) % n];
}

void Potential::locate_extrema() {
  const int grid = std::max<int>(4096, 8 * static_cast<int>(y_.size()));
  min_v_ = max_v_ = value(0);
  argmin_ = argmax_ = 0;
  auto consider = [&](double x) {
    double v = value(x);
    if (v < min_v_) min_v_ = v, argmin_ = x;
    if (v > max_v_) max_v_ = v, argmax_ = x;
  };
  for (int i = 0; i < grid; ++i) consider(static_cast<double>(i) / grid);
  for (double x : periodic_roots([this](double y) { return d1(y); }, grid)) consider(x);
}

double Potential::sublevel_measure(double s) const {
  if (kind_ == Kind::cosine) {
    if (s <= -1) return 0;
    if (s >= 1) return 1;
    return 1 - std::acos(s) / std::numbers::pi;
  }
  if (s <= min_v_) return 0;
  if (s > max_v_) return 1;
  auto cross = level_crossings(s);
  if (cross.empty()) return value(0.5) < s ? 1.0 : 0.0;
  double m = 0;
  for (std::size_t i = 0; i < cross.size(); ++i) {
    double a = cross[i];
    double b = i + 1 < cross.size() ? cross[i + 1] : cross[0] + 1;
    if (value(frac(0.5 * (a + b))) < s) m += b - a;
  }
  return m;
}

std::vector<double> Potential::level_crossings(double s) const {
  if (!(s > min_v_ && s < max_v_)) return {};
  if (kind_ == Kind::cosine) {
    double a = std::acos(s) / kTwoPi;
    return {a, 1 - a};
  }
  const int grid = std::max<int>(4096, 8 * static_cast<int>(y_.size()));
  return periodic_roots([this, s](double x) { return value(x) - s; }, grid);
}

CosineTypeReport Potential::validate_cosine_type() const {
  CosineTypeReport rep;
  if (kind_ == Kind::constant) {
    rep.reason = "constant potential has no isolated critical points";
    return rep;
  }
  if (kind_ == Kind::cosine) {
    rep.critical_points = {0.0, 0.5};
    rep.second_derivs = {d2(0.0), d2(0.5)};
    rep.ok = true;
    return rep;
  }
  const int grid = std::max<int>(4096, 8 * static_cast<int>(y_.size()));
  rep.critical_points = periodic_roots([this](double x) { return d1(x); }, grid);
  double scale = std::max(1e-300, max_v_ - min_v_);
  for (double x : rep.critical_points) rep.second_derivs.push_back(d2(x));
  if (rep.critical_points.size() != 2) {
    rep.reason = "v' has " + std::to_string(rep.critical_points.size()) + " zeros, expected 2";
    return rep;
  }
  for (double c : rep.second_derivs)
    if (std::abs(c) < 1e-6 * scale) {
      rep.reason = "degenerate critical point";
      return rep;
    }
  rep.ok = true;
  return rep;
}

}  // namespace qpspec
