#include "qpspec/induction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace qpspec {

namespace {

constexpr double pi = std::numbers::pi;

CocycleParams at_t(const CocycleParams& params, double t) {
  CocycleParams p = params;
  p.t = t;
  return p;
}

// Distance of a lift value to pi Z.
double dist_pi(double v) { return std::abs(v - pi * std::round(v / pi)); }

ReturnTimeFn make_returns(IntervalUnion target, const Frequency& freq, std::int64_t min_steps) {
  return [target = std::move(target), freq, min_steps](double x) {
    auto fwd = first_return_time(x, target, freq, Heading::forward, min_steps);
    auto bwd = first_return_time(x, target, freq, Heading::backward, min_steps);
    if (!fwd || !bwd) throw InductionError("no return to the critical intervals within the step cap");
    return ReturnTimes{*fwd, *bwd};
  };
}

IntervalUnion return_target(const CriticalState& s) {
  if (s.degenerate) return IntervalUnion({s.intervals[0]});
  return IntervalUnion::merged({s.intervals[0], s.intervals[1]});
}

ReturnTimeFn state_returns(const CriticalState& s, const Frequency& freq, const InductionConfig& cfg) {
  return make_returns(return_target(s), freq, min_return_steps(s.level, freq, cfg));
}

double golden_min(double a, double b, const std::function<double(double)>& f, double tol) {
  const double r = (std::sqrt(5.0) - 1) / 2;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && b - a > tol; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Lift crossings of pi Z: (cell index i, crossed multiple of pi).
std::vector<std::pair<std::size_t, double>> crossings(const ProfileInterval& iv) {
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t i = 0; i + 1 < iv.lift.size(); ++i) {
    const double a = std::floor(iv.lift[i] / pi), b = std::floor(iv.lift[i + 1] / pi);
    if (a != b) out.emplace_back(i, pi * std::max(a, b));
  }
  return out;
}

// Bisection on the continuous lift between grid points i and i+1.
double refine_zero(const ProfileInterval& iv, std::size_t i, double target, const CocycleParams& p,
                   const Potential& pot, const ReturnTimeFn& returns, const InductionConfig& cfg) {
  const double a = iv.x[i], ga = wrap_half_pi(iv.lift[i]);
  auto f = [&](double x) {
    const double gx = angle_value(x, p, pot, returns(wrap_unit(x)));
    return iv.lift[i] + lift_increment(a, x, ga, gx, p, pot, returns, cfg.max_refine) - target;
  };
  double lo = a, hi = iv.x[i + 1];
  const bool neg = iv.lift[i] - target < 0;
  for (int it = 0; it < 80 && hi - lo > cfg.zero_tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0) return mid;
    ((fm < 0) == neg ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Minimizer of |g mod pi| near the grid minimum.
double refine_min(const ProfileInterval& iv, const CocycleParams& p, const Potential& pot,
                  const ReturnTimeFn& returns, const InductionConfig& cfg) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < iv.lift.size(); ++i)
    if (dist_pi(iv.lift[i]) < dist_pi(iv.lift[best])) best = i;
  const double a = iv.x[best == 0 ? 0 : best - 1], b = iv.x[std::min(best + 1, iv.x.size() - 1)];
  return golden_min(
      a, b, [&](double x) { return std::abs(angle_value(x, p, pot, returns(wrap_unit(x)))); }, cfg.zero_tol);
}

// Level-1 zero of g_1 near x0, or the minimizer of |g_1| when none exists.
double level_one_point(double x0, double delta, const CocycleParams& p, const Potential& pot,
                       const InductionConfig& cfg) {
  auto g = [&](double x) { return angle_value(x, p, pot, ReturnTimes{1, 1}); };
  constexpr int n = 64;
  std::vector<double> xs(n + 1), gs(n + 1);
  for (int i = 0; i <= n; ++i) {
    xs[i] = x0 - delta + 2 * delta * i / n;
    gs[i] = g(xs[i]);
  }
  int pick = -1;
  for (int i = 0; i < n; ++i) {
    const bool sign_change = (gs[i] < 0) != (gs[i + 1] < 0);
    if (sign_change && std::abs(gs[i]) < pi / 4 && std::abs(gs[i + 1]) < pi / 4)
      if (pick < 0 || std::abs(xs[i] - x0) < std::abs(xs[pick] - x0)) pick = i;
  }
  if (pick < 0) return wrap_unit(golden_min(x0 - delta, x0 + delta, [&](double x) { return std::abs(g(x)); }, cfg.zero_tol));
  double lo = xs[pick], hi = xs[pick + 1];
  const bool neg = gs[pick] < 0;
  for (int it = 0; it < 80 && hi - lo > cfg.zero_tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (gm == 0) return wrap_unit(mid);
    ((gm < 0) == neg ? lo : hi) = mid;
  }
  return wrap_unit(0.5 * (lo + hi));
}

// Builds the next profile on the state's intervals and classifies the step.
void evaluate(CriticalState& s, const CriticalState* prev, const CocycleParams& p, const Potential& pot,
              const InductionConfig& cfg) {
  const Frequency& freq = p.freq;
  LevelMeasurements& m = s.m;
  m.radius = critical_radius(s.level, freq, cfg);
  for (int j = 0; j < 2; ++j) s.intervals[j] = Arc{wrap_unit(s.critical[j]), m.radius};
  const auto returns = state_returns(s, freq, cfg);
  const ProfileOptions popt{cfg.points, cfg.max_refine};

  s.profile.intervals.clear();
  const int distinct = s.degenerate ? 1 : 2;
  for (int j = 0; j < distinct; ++j) {
    auto one = angle_profile(IntervalUnion({s.intervals[j]}), p, pot, returns, popt);
    s.profile.intervals.push_back(std::move(one.intervals.front()));
  }
  if (s.degenerate) s.profile.intervals.push_back(s.profile.intervals.front());

  m.r_min = std::numeric_limits<std::int64_t>::max();
  m.r_max = 0;
  s.r_plus = s.r_minus = std::numeric_limits<std::int64_t>::max();
  bool any_zero = false;
  double min_angle = std::numeric_limits<double>::infinity();
  m.cubic_c = std::numeric_limits<double>::infinity();
  for (int j = 0; j < 2; ++j) {
    const auto& iv = s.profile.intervals[static_cast<std::size_t>(j)];
    for (std::size_t i = 0; i < iv.x.size(); ++i) {
      s.r_plus = std::min(s.r_plus, iv.r_plus[i]);
      s.r_minus = std::min(s.r_minus, iv.r_minus[i]);
      m.r_max = std::max({m.r_max, iv.r_plus[i], iv.r_minus[i]});
      min_angle = std::min(min_angle, dist_pi(iv.lift[i]));
    }
    const auto [lo, hi] = std::minmax_element(iv.lift.begin(), iv.lift.end());
    m.range[j] = *hi - *lo;
    const auto zs = crossings(iv);
    m.zero_count[j] = static_cast<int>(zs.size());
    m.d1_at_zero[j] = 0;
    if (zs.empty()) continue;
    any_zero = true;
    // derivative at the crossing nearest to the current critical point
    std::size_t near = zs.front().first;
    for (const auto& z : zs)
      if (std::abs(iv.x[z.first] - iv.arc.center) < std::abs(iv.x[near] - iv.arc.center)) near = z.first;
    m.d1_at_zero[j] = 0.5 * (iv.d1[near] + iv.d1[near + 1]);
    // cubic nondegeneracy away from the zeros (linear interpolation of the crossings)
    std::vector<double> zx;
    for (const auto& [i, target] : zs)
      zx.push_back(iv.x[i] + (target - iv.lift[i]) / (iv.lift[i + 1] - iv.lift[i]) * (iv.x[i + 1] - iv.x[i]));
    const double h = iv.spacing();
    for (std::size_t i = 0; i < iv.x.size(); ++i) {
      double d = std::numeric_limits<double>::infinity();
      for (double z : zx) d = std::min(d, std::abs(iv.x[i] - z));
      if (d > 2 * h) m.cubic_c = std::min(m.cubic_c, dist_pi(iv.lift[i]) / (d * d * d));
    }
  }
  if (!std::isfinite(m.cubic_c)) m.cubic_c = 0;
  m.r_min = std::min(s.r_plus, s.r_minus);
  m.min_angle = any_zero ? 0.0 : min_angle;
  m.threshold = 2 * std::pow(p.lambda, -std::pow(static_cast<double>(m.r_min), cfg.kappa));

  // d/dt along sampled points with frozen return times
  m.dt_min = std::numeric_limits<double>::infinity();
  const double ht = 1e-7 * std::max(1.0, std::abs(p.t));
  const auto stride = static_cast<std::size_t>(std::max(1, cfg.sample_stride));
  for (int j = 0; j < distinct; ++j) {
    const auto& iv = s.profile.intervals[static_cast<std::size_t>(j)];
    for (std::size_t i = stride / 2; i < iv.x.size(); i += stride) {
      const ReturnTimes rt{iv.r_plus[i], iv.r_minus[i]};
      const double gp = angle_value(iv.x[i], at_t(p, p.t + ht), pot, rt);
      const double gm = angle_value(iv.x[i], at_t(p, p.t - ht), pot, rt);
      m.dt_min = std::min(m.dt_min, wrap_half_pi(gp - gm) / (2 * ht));
    }
  }

  // resonances 0 <= |k| < q_{N+n-1}
  const std::int64_t q = min_return_steps(s.level, freq, cfg);
  std::vector<int> overlapping;
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t k = -(q - 1); k <= q - 1; ++k) {
    const double d = circle_signed(orbit_point(s.critical[0], freq, k) - s.critical[1]);
    if (std::abs(d) < best) {
      best = std::abs(d);
      m.best_k = static_cast<int>(k);
      m.resonance_distance = d;
    }
    if (std::abs(d) < 2 * m.radius) overlapping.push_back(static_cast<int>(k));
  }
  if (overlapping.size() > 1) {
    std::ostringstream os;
    os << "resonance is not unique at level " << s.level << ", t=" << p.t << ": k =";
    for (int k : overlapping) os << ' ' << k;
    throw InductionError(os.str());
  }
  s.resonance_k = overlapping.empty() ? std::nullopt : std::optional<int>(overlapping.front());
  if (m.min_angle > m.threshold)
    s.case_tag = StepCase::case3;
  else
    s.case_tag = s.resonance_k ? StepCase::case2 : StepCase::case1;

  if (prev && !prev->outside_window) {
    m.drift = std::max(circle_dist(s.critical[0], prev->critical[0]), circle_dist(s.critical[1], prev->critical[1]));
    m.drift_bound = std::pow(p.lambda, -0.5 * std::pow(static_cast<double>(prev->m.r_min), cfg.kappa));
  }
}

std::string dump(const CriticalState& s) {
  std::ostringstream os;
  os.precision(15);
  os << "level=" << s.level << " t=" << s.t << " case=" << to_string(s.case_tag) << " c=(" << s.critical[0] << ", "
     << s.critical[1] << ") radius=" << s.m.radius << " zeros=(" << s.m.zero_count[0] << ", " << s.m.zero_count[1]
     << ") min_angle=" << s.m.min_angle << " threshold=" << s.m.threshold << " r_min=" << s.m.r_min;
  if (s.resonance_k) os << " k=" << *s.resonance_k;
  return os.str();
}

}  // namespace

const char* to_string(StepCase c) {
  switch (c) {
    case StepCase::case1:
      return "Case1";
    case StepCase::case2:
      return "Case2";
    case StepCase::case3:
      return "Case3";
  }
  return "?";
}

std::int64_t min_return_steps(int level, const Frequency& freq, const InductionConfig& cfg) {
  if (level < 1) throw std::invalid_argument("level must be >= 1");
  return freq.q(static_cast<std::size_t>(cfg.N + level - 1));
}

double critical_radius(int level, const Frequency& freq, const InductionConfig& cfg) {
  return std::pow(static_cast<double>(min_return_steps(level, freq, cfg)), -cfg.sigma * cfg.tau);
}

CriticalState init_state(const CocycleParams& params, const Potential& pot, const InductionConfig& cfg) {
  if (params.lambda < cfg.lambda_min)
    throw std::invalid_argument("coupling below the configured minimum " + std::to_string(cfg.lambda_min));
  const auto report = pot.validate_cosine_type();
  if (!report.ok) throw InductionError("potential is not of cosine type: " + report.reason);

  CriticalState s;
  s.level = 1;
  s.t = params.t;
  if (!spectral_window(params, pot).contains(params.t)) {
    s.outside_window = true;
    s.case_tag = StepCase::case3;
    s.resonance_k = 0;
    s.critical = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    return s;
  }
  const double a = params.freq.value();
  const auto xs = pot.level_crossings(params.t);
  if (xs.size() == 2) {
    const double inc = pot.d1(xs[0]) > 0 ? xs[0] : xs[1];
    const double dec = pot.d1(xs[0]) > 0 ? xs[1] : xs[0];
    const double delta = std::min(0.02, circle_dist(inc, dec) / 3);
    s.critical[0] = level_one_point(wrap_unit(inc + a), delta, params, pot, cfg);
    s.critical[1] = level_one_point(wrap_unit(dec + a), delta, params, pot, cfg);
  } else {
    const bool top = std::abs(params.t - pot.max_value()) < std::abs(params.t - pot.min_value());
    const double x0 = wrap_unit((top ? pot.argmax() : pot.argmin()) + a);
    s.critical[0] = s.critical[1] = level_one_point(x0, 0.02, params, pot, cfg);
    s.degenerate = true;
  }
  evaluate(s, nullptr, params, pot, cfg);
  return s;
}

StepClass classify_step(const CriticalState& state, const CocycleParams& params, const Potential& pot,
                        const InductionConfig& cfg) {
  if (state.outside_window) return {StepCase::case3, 0};
  CriticalState s = state;
  evaluate(s, nullptr, at_t(params, state.t), pot, cfg);
  return {s.case_tag, s.resonance_k};
}

CriticalState advance(const CriticalState& state, const CocycleParams& params, const Potential& pot,
                      const InductionConfig& cfg) {
  if (state.case_tag == StepCase::case3 || state.outside_window)
    throw InductionError("advance after Case3: intervals are frozen (" + dump(state) + ")");
  const CocycleParams p = at_t(params, state.t);
  const auto returns = state_returns(state, p.freq, cfg);

  CriticalState next;
  next.level = state.level + 1;
  next.t = state.t;
  const int distinct = state.degenerate ? 1 : 2;
  std::array<std::vector<double>, 2> zeros;
  for (int j = 0; j < distinct; ++j) {
    const auto& iv = state.profile.intervals[static_cast<std::size_t>(j)];
    for (const auto& [i, target] : crossings(iv)) zeros[j].push_back(wrap_unit(refine_zero(iv, i, target, p, pot, returns, cfg)));
    const auto count = zeros[j].size();
    if (state.case_tag == StepCase::case1 && count != 1)
      throw InductionError("Case1 step needs exactly one zero per interval, found " + std::to_string(count) + " (" +
                           dump(state) + ")");
    if (count > 2)
      throw InductionError("more than two zeros in a critical interval (" + dump(state) + ")");
  }

  if (state.degenerate) {
    const auto& iv = state.profile.intervals[0];
    if (zeros[0].size() == 2) {
      // split J = 1 into two points by the sign of dg/dx, matching the level-1 ordering
      auto slope = [&](double z) {
        const double h = 4 * iv.spacing();
        return wrap_half_pi(angle_value(z + h, p, pot, returns(wrap_unit(z + h))) -
                            angle_value(z - h, p, pot, returns(wrap_unit(z - h))));
      };
      const bool first_dec = slope(zeros[0][0]) < 0;
      next.critical = {first_dec ? zeros[0][0] : zeros[0][1], first_dec ? zeros[0][1] : zeros[0][0]};
    } else {
      const double c = zeros[0].empty() ? wrap_unit(refine_min(iv, p, pot, returns, cfg)) : zeros[0][0];
      next.critical = {c, c};
      next.degenerate = true;
    }
  } else {
    for (int j = 0; j < 2; ++j) {
      const auto& z = zeros[j];
      if (z.empty()) {
        next.critical[j] = wrap_unit(refine_min(state.profile.intervals[static_cast<std::size_t>(j)], p, pot, returns, cfg));
        continue;
      }
      const bool first = z.size() == 1 || circle_dist(z[0], state.critical[j]) <= circle_dist(z[1], state.critical[j]);
      next.critical[j] = first ? z[0] : z[1];
      if (z.size() == 2) next.secondary[j] = first ? z[1] : z[0];
    }
  }
  evaluate(next, &state, p, pot, cfg);
  return next;
}

std::vector<CriticalState> trace(double t, const CocycleParams& params, const Potential& pot, int max_level,
                                 const InductionConfig& cfg) {
  if (max_level < 1 || max_level > 12) throw std::invalid_argument("max_level must lie in [1, 12]");
  const CocycleParams p = at_t(params, t);
  std::vector<CriticalState> states{init_state(p, pot, cfg)};
  while (states.back().case_tag != StepCase::case3 && states.back().level < max_level)
    states.push_back(advance(states.back(), p, pot, cfg));
  return states;
}

double resonance_distance(const CriticalState& state, const Frequency& freq, std::optional<int> k) {
  const int kk = k ? *k : state.resonance_k.value_or(0);
  return circle_signed(orbit_point(state.critical[0], freq, kk) - state.critical[1]);
}

GapCertificate certify_gap(const CriticalState& state, const CocycleParams& params, const Potential& pot,
                           const InductionConfig& cfg) {
  const CocycleParams p = at_t(params, state.t);
  GapCertificate cert;
  cert.t = state.t;
  cert.level = state.level;
  cert.k = state.resonance_k.value_or(state.m.best_k);
  cert.min_angle_gap = state.m.min_angle;
  cert.threshold = state.m.threshold;

  UhCertificate uh;
  if (state.outside_window) {
    // one orbit chain per phase, block length doubled until every chain certifies
    for (std::int64_t len = 1; len <= 256 && !uh.valid; len *= 2) {
      uh = UhCertificate{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                         std::numeric_limits<double>::infinity(), true};
      for (int j = 0; j < 8; ++j) {
        std::vector<Block> chain;
        double x = j / 8.0;
        for (int b = 0; b < 16; ++b) {
          chain.push_back(block_product(x, p, pot, len, Frame::scaled));
          x = orbit_point(x, p.freq, len);
        }
        const auto c = uh_block_certificate(chain);
        uh.log_beta = std::min(uh.log_beta, c.log_beta);
        uh.gamma = std::min(uh.gamma, c.gamma);
        uh.rate = std::min(uh.rate, c.rate);
        uh.valid = uh.valid && c.valid;
      }
    }
  } else {
    double log_beta = std::numeric_limits<double>::infinity(), total = 0;
    std::size_t count = 0;
    const auto stride = static_cast<std::size_t>(std::max(1, cfg.sample_stride / 8));
    for (const auto& iv : state.profile.intervals) {
      for (std::size_t i = 0; i < iv.x.size(); i += stride) {
        const double x = wrap_unit(iv.x[i]);
        const Block fwd = block_product(x, p, pot, iv.r_plus[i], Frame::scaled);
        const Block bwd = block_product(orbit_point(x, p.freq, -iv.r_minus[i]), p, pot, iv.r_minus[i], Frame::scaled);
        log_beta = std::min({log_beta, fwd.log_norm(), bwd.log_norm()});
        total += static_cast<double>(iv.r_plus[i] + iv.r_minus[i]);
        count += 2;
      }
    }
    const double gamma = std::tan(std::min(state.m.min_angle, pi / 2 - 1e-12));
    uh = uh_certificate_from_bounds(log_beta, gamma, total / static_cast<double>(count));
  }
  cert.log_beta = uh.log_beta;
  cert.gamma = uh.gamma;
  cert.uh_rate = uh.rate;
  cert.valid = uh.valid;
  return cert;
}

void certify_gap_records(std::vector<GapRecord>& gaps, const CocycleParams& params, const Potential& pot,
                         int max_level, const InductionConfig& cfg) {
  if (params.lambda < cfg.lambda_min) return;
  const Window w = spectral_window(params, pot);
  for (auto& g : gaps) {
    const double t = g.outer ? (std::isinf(g.t_minus) ? w.lo - 0.1 : w.hi + 0.1) : 0.5 * (g.t_minus + g.t_plus);
    try {
      const auto states = trace(t, params, pot, max_level, cfg);
      g.certified = states.back().case_tag == StepCase::case3 && certify_gap(states.back(), params, pot, cfg).valid;
    } catch (const std::runtime_error&) {
      // a structural failure of the induction leaves the gap uncertified
      g.certified = false;
    }
  }
}

double refine_gap_edge(double t_gap, double t_spec, const CocycleParams& params, const Potential& pot, int max_level,
                       double tol, const InductionConfig& cfg) {
  auto in_gap = [&](double t) { return trace(t, params, pot, max_level, cfg).back().case_tag == StepCase::case3; };
  if (!in_gap(t_gap)) throw InductionError("gap-side point does not reach Case3 within max_level");
  if (in_gap(t_spec)) throw InductionError("spectrum-side point reaches Case3");
  for (int it = 0; it < 200 && std::abs(t_spec - t_gap) > tol; ++it) {
    const double mid = 0.5 * (t_gap + t_spec);
    (in_gap(mid) ? t_gap : t_spec) = mid;
  }
  return t_gap;
}

CriticalDistance critical_distance_limit(double t, const CocycleParams& params, const Potential& pot, int max_level,
                                         const InductionConfig& cfg) {
  const CocycleParams p = at_t(params, t);
  if (!spectral_window(p, pot).contains(t)) throw std::invalid_argument("t outside the spectral window");
  const auto states = trace(t, p, pot, max_level, cfg);
  const auto& last = states.back();
  CriticalDistance cd;
  cd.value = wrap_unit(last.critical[0] - last.critical[1]);
  cd.level = last.level;
  cd.last_case = last.case_tag;
  if (states.size() >= 2) {
    const auto& prev = states[states.size() - 2];
    cd.drift = circle_dist(last.critical[0], prev.critical[0]) + circle_dist(last.critical[1], prev.critical[1]);
    cd.error = 2 * last.m.drift_bound;
  } else {
    cd.error = 2 * last.m.radius;
  }
  return cd;
}

}  // namespace qpspec
