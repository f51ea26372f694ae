#include "qpspec/acceptance.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

#include "qpspec/induction.hpp"
#include "qpspec/spectrum.hpp"

namespace qpspec {

namespace {

using nlohmann::json;
constexpr double pi = std::numbers::pi;

struct Criterion {
  int id;
  const char* name;
  double time_limit;
};

constexpr Criterion kCriteria[] = {
    {1, "angle", 30},          {2, "norm", 0},           {3, "direction", 0},  {4, "hw", 120},
    {5, "ids_asymptotic", 600}, {6, "ids_symmetry", 0},  {7, "labels", 600},   {8, "lambda_constancy", 0},
    {9, "induction", 300},     {10, "representation", 0}, {11, "homogeneity", 300}, {12, "lyapunov", 120}};

const char* const kQuick[] = {"angle", "norm", "direction", "ids_symmetry"};

constexpr double kScanStep = 1e-4;
constexpr int kScanL = 2000;
constexpr int kPhases = 16;

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

CocycleParams golden(double lambda) { return {golden_mean(40), lambda, 0}; }

// Independent directions and norm of a 2x2 matrix from Eigen's Jacobi SVD.
struct Oracle {
  double norm, fro, s, u;
};

Oracle oracle(const Mat2& a) {
  Eigen::JacobiSVD<Mat2> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& v = svd.matrixV();
  const auto& uu = svd.matrixU();
  return {svd.singularValues()(0), a.norm(), wrap_pi(std::atan2(v(1, 1), v(0, 1))),
          wrap_pi(std::atan2(uu(1, 0), uu(0, 0)))};
}

// Scans shared between criteria.
struct Cache {
  std::map<double, ScanResult> scans;
  std::map<double, std::vector<GapRecord>> gaps;

  const ScanResult& scan(double lambda) {
    auto it = scans.find(lambda);
    if (it != scans.end()) return it->second;
    const auto p = golden(lambda);
    const auto pot = Potential::cosine();
    const Window w = spectral_window(p, pot);
    const auto grid = uniform_grid(w.lo, w.hi, kScanStep);
    ScanOptions opt;
    opt.L = kScanL;
    opt.phase_count = kPhases;
    return scans.emplace(lambda, scan_and_ids(p, pot, grid, opt)).first->second;
  }

  const std::vector<GapRecord>& gap_table(double lambda) {
    auto it = gaps.find(lambda);
    if (it != gaps.end()) return it->second;
    const auto& r = scan(lambda);
    return gaps.emplace(lambda, detect_gaps(r.scan, r.ids, golden(lambda).freq)).first->second;
  }
};

// Shared sample for the angle and norm criteria.
struct CompositionSample {
  double worst_s = 0, worst_u = 0, worst_norm = 0;
  int count = 0;
};

CompositionSample composition_sample() {
  std::mt19937_64 rng(20240917);
  std::uniform_real_distribution<double> len(2, 100), ang(0, pi);
  CompositionSample r;
  while (r.count < 100000) {
    const double l1 = len(rng), l2 = len(rng), s1 = ang(rng), u1 = ang(rng), u2 = ang(rng), th = ang(rng);
    if (th < 1e-3 || std::abs(th - pi / 2) < 1e-3 || pi - th < 1e-3) continue;
    ++r.count;
    const double s2 = wrap_pi(u1 + pi / 2 - th);
    const Mat2 a1 = from_polar(l1, s1, u1), a2 = from_polar(l2, s2, u2);
    const Oracle o = oracle(a2 * a1);
    r.worst_s = std::max(r.worst_s, direction_dist(wrap_pi(s1 - angle_shift_s(l1, l2, th)), o.s));
    r.worst_u = std::max(r.worst_u, direction_dist(wrap_pi(u2 - angle_shift_u(l1, l2, th)), o.u));
    const double n = product_norm(l1, l2, th);
    r.worst_norm = std::max(r.worst_norm, std::abs(std::sqrt(n * n + 1 / (n * n)) - o.fro) / o.fro);
  }
  return r;
}

void angle(CriterionResult& r) {
  const auto s = composition_sample();
  r.pass = std::max(s.worst_s, s.worst_u) < 1e-8;
  r.detail = fmt("max |s err| = %.2e, max |u err| = %.2e over %d triples (< 1e-8)", s.worst_s, s.worst_u, s.count);
  r.metrics = {{"max_s_error", s.worst_s}, {"max_u_error", s.worst_u}, {"samples", s.count}};
}

void norm(CriterionResult& r) {
  const auto s = composition_sample();
  r.pass = s.worst_norm < 1e-12;
  r.detail = fmt("max relative Frobenius error = %.2e over %d products (< 1e-12)", s.worst_norm, s.count);
  r.metrics = {{"max_relative_error", s.worst_norm}, {"samples", s.count}};
}

void direction(CriterionResult& r) {
  std::mt19937_64 rng(20240918);
  std::uniform_real_distribution<double> l1d(2, 10), ang(0, pi);
  std::vector<double> ratios;
  while (ratios.size() < 10000) {
    const double l1 = l1d(rng);
    std::uniform_real_distribution<double> l2d(l1 * l1, 10 * l1 * l1);
    const Mat2 e1 = from_polar(l1, ang(rng), ang(rng)), e2 = from_polar(l2d(rng), ang(rng), ang(rng));
    const Mat2 e = e2 * e1;
    const Oracle o = oracle(e);
    const auto est = contracted_dir_of_product(e2, e1);
    ratios.push_back(direction_dist(o.s, est.direction) * o.norm * o.norm);
  }
  std::sort(ratios.begin(), ratios.end());
  const double p99 = ratios[static_cast<std::size_t>(0.99 * static_cast<double>(ratios.size()))];
  r.pass = p99 <= kProductDirConstant;
  r.detail = fmt("99th percentile of |s(E) - E1^-1 s(E2)| ||E||^2 = %.3e, max %.3e (<= 10)", p99, ratios.back());
  r.metrics = {{"p99", p99}, {"max", ratios.back()}, {"samples", ratios.size()}};
}

void hw(CriterionResult& r) {
  const auto pot = Potential::cosine();
  bool ok = true;
  double worst_ratio = 0, worst_eq = 0;
  for (double lam : {0.0, 5.0, 20.0})
    for (int L : {100, 500, 1000})
      for (double x : {0.0, 0.3141592653589793, 0.7071067811865476}) {
        const auto h = hoffman_wielandt_check(x, golden(lam), pot, L);
        worst_ratio = std::max(worst_ratio, h.lhs / h.bound);
        // rounding slack far below the lambda = 0 equality tolerance
        ok = ok && h.lhs <= h.bound * (1 + 1e-12);
        if (lam == 0) {
          const double e = std::abs(h.lhs - h.bound) / h.bound;
          worst_eq = std::max(worst_eq, e);
          ok = ok && e <= 1e-9;
        }
      }
  r.pass = ok;
  r.detail = fmt("max sum/4L = %.6f; lambda=0 max |sum-4L|/4L = %.2e (<= 1e-9)", worst_ratio, worst_eq);
  r.metrics = {{"max_ratio", worst_ratio}, {"lambda0_relative_gap", worst_eq}};
}

double ids_error(double lambda) {
  const auto pot = Potential::cosine();
  const auto p = golden(lambda);
  const Window w = spectral_window(p, pot);
  std::vector<double> es;
  for (int i = 0; i < 50; ++i) es.push_back(lambda * (w.lo + (w.hi - w.lo) * (i + 0.5) / 50));
  const auto curve = ids_curve(es, p, pot, kScanL, kPhases);
  double err = 0;
  for (std::size_t i = 0; i < es.size(); ++i)
    err = std::max(err, std::abs(curve.values[i] - potential_level_measure(es[i], p, pot)));
  return err;
}

void ids_asymptotic(CriterionResult& r) {
  json errs = json::object();
  std::map<double, double> e;
  for (double lam : {10.0, 50.0, 200.0}) {
    e[lam] = ids_error(lam);
    errs[fmt("%g", lam)] = e[lam];
  }
  r.pass = e[200] < e[10] && e[200] <= 0.02;
  r.detail = fmt("err(10) = %.4f, err(50) = %.4f, err(200) = %.4f (err(200) < err(10), <= 0.02)", e[10], e[50], e[200]);
  r.metrics = {{"errors", errs}};
}

void ids_symmetry(CriterionResult& r) {
  const auto pot = Potential::cosine();
  bool ok = true;
  std::string d;
  json m = json::object();
  for (double lam : {5.0, 50.0}) {
    const auto v = ids(0, golden(lam), pot, kScanL, kPhases);
    ok = ok && std::abs(v.value - 0.5) <= 0.01;
    d += fmt("N(0; lambda=%g) = %.6f  ", lam, v.value);
    m[fmt("%g", lam)] = v.value;
  }
  r.pass = ok;
  r.detail = d + "(0.5 +- 0.01)";
  r.metrics = {{"N0", m}};
}

void labels(CriterionResult& r, Cache& cache) {
  const auto& gaps = cache.gap_table(5);
  std::vector<GapRecord> interior;
  for (const auto& g : gaps)
    if (!g.outer) interior.push_back(g);
  bool ok = interior.size() >= 5, has1 = false, has2 = false;
  double worst = 0;
  json rows = json::array();
  for (std::size_t i = 0; i < std::min<std::size_t>(5, interior.size()); ++i) {
    const auto& g = interior[i];
    worst = std::max(worst, g.label_residual);
    ok = ok && g.label_residual < 5e-3;
    has1 = has1 || std::abs(g.label_k) == 1;
    has2 = has2 || std::abs(g.label_k) == 2;
    rows.push_back({{"t_minus", g.t_minus}, {"t_plus", g.t_plus}, {"label_k", g.label_k}, {"residual", g.label_residual}});
  }
  r.pass = ok && has1 && has2;
  std::string ks;
  for (const auto& row : rows) ks += std::to_string(row["label_k"].get<int>()) + " ";
  r.detail = fmt("five widest labels: %smax residual %.2e (< 5e-3), |m|=1 %s, |m|=2 %s", ks.c_str(), worst,
                 has1 ? "yes" : "no", has2 ? "yes" : "no");
  r.metrics = {{"widest", rows}, {"interior_gaps", interior.size()}};
}

void lambda_constancy(CriterionResult& r) {
  const auto pot = Potential::cosine();
  const std::vector<double> lambdas{4, 6, 8, 12};
  ScanOptions opt;
  opt.L = kScanL;
  opt.phase_count = kPhases;
  bool ok = true;
  std::string d;
  json m = json::object();
  for (int k : {1, -1}) {
    const auto rep = gap_lambda_sweep(k, lambdas, golden(1), pot, kScanStep, opt);
    const bool all = std::all_of(rep.rows.begin(), rep.rows.end(), [](const SweepRow& row) { return row.found; });
    ok = ok && all && rep.max_ids_drift <= 5e-3;
    json ids = json::array();
    for (const auto& row : rep.rows) ids.push_back(row.found ? json(row.gap.ids_value) : json(nullptr));
    m[fmt("%d", k)] = {{"ids", ids}, {"max_ids_drift", rep.max_ids_drift}, {"max_edge_jump", rep.max_edge_jump}};
    d += fmt("k=%+d drift %.2e%s  ", k, rep.max_ids_drift, all ? "" : " (gap missing)");
  }
  r.pass = ok;
  r.detail = d + "over lambda in {4,6,8,12} (<= 5e-3)";
  r.metrics = m;
}

// Interior gaps labeled +-1 at lambda = 50, ordered by label.
std::vector<GapRecord> unit_gaps(Cache& cache) {
  std::vector<GapRecord> out;
  for (const auto& g : cache.gap_table(50))
    if (!g.outer && std::abs(g.label_k) == 1) out.push_back(g);
  std::sort(out.begin(), out.end(), [](const GapRecord& a, const GapRecord& b) { return a.label_k < b.label_k; });
  return out;
}

void induction(CriterionResult& r, Cache& cache) {
  const auto pot = Potential::cosine();
  const auto p = golden(50);
  const double a = p.freq.value();
  std::vector<std::string> fails;

  // level one against the zeros of t - v(x - alpha) at t = 0
  const auto s1 = init_state(p, pot);
  const double d1 = circle_dist(s1.critical[0], 0.75 + a), d2 = circle_dist(s1.critical[1], 0.25 + a);
  if (!(std::max(d1, d2) < 2e-3)) fails.push_back("level-1 points");

  // Case 1 advance: one zero per interval, opposite slopes
  const bool case1 = s1.case_tag == StepCase::case1 && s1.m.zero_count[0] == 1 && s1.m.zero_count[1] == 1 &&
                     s1.m.d1_at_zero[0] * s1.m.d1_at_zero[1] < 0;
  if (!case1) fails.push_back("case-1 advance");

  // gap midpoints
  const auto gaps = unit_gaps(cache);
  if (gaps.empty()) fails.push_back("no |k|=1 gap detected");
  json mids = json::array();
  for (const auto& g : gaps) {
    const double t = 0.5 * (g.t_minus + g.t_plus);
    const auto st = trace(t, p, pot, 3);
    const auto cert = certify_gap(st.back(), p, pot);
    const bool ok = st.back().case_tag == StepCase::case3 && cert.valid;
    if (!ok) fails.push_back(fmt("gap midpoint %.5f", t));
    mids.push_back({{"t", t}, {"level", st.back().level}, {"case", to_string(st.back().case_tag)},
                    {"k", cert.k}, {"uh_rate", cert.uh_rate}, {"valid", cert.valid}});
  }

  // negative control: t = 0 never certifies
  const auto st0 = trace(0, p, pot, 5);
  int certified = 0;
  for (const auto& s : st0) certified += certify_gap(s, p, pot).valid ? 1 : 0;
  const bool control = st0.size() == 5 && st0.back().case_tag != StepCase::case3 && certified == 0;
  if (!control) fails.push_back("t=0 control");

  r.pass = fails.empty();
  std::string mid_desc;
  for (const auto& m : mids)
    mid_desc += fmt("t=%.5f->L%d %s ", m["t"].get<double>(), m["level"].get<int>(), m["valid"].get<bool>() ? "certified" : "uncertified");
  r.detail = fmt("level-1 offsets %.1e/%.1e, case1 %s, %st=0 levels %zu certified %d", d1, d2, case1 ? "ok" : "bad",
                 mid_desc.c_str(), st0.size(), certified);
  if (!fails.empty()) {
    r.detail += "; failed:";
    for (const auto& f : fails) r.detail += " " + f + ";";
  }
  r.metrics = {{"level1_offsets", {d1, d2}}, {"gap_midpoints", mids}, {"t0_levels", st0.size()},
               {"t0_certified_levels", certified}};
}

void representation(CriterionResult& r, Cache& cache) {
  const auto pot = Potential::cosine();
  const auto p = golden(50);
  const auto gaps = unit_gaps(cache);
  bool ok = !gaps.empty();
  std::string d;
  json rows = json::array();
  for (const auto& g : gaps) {
    const double mid = 0.5 * (g.t_minus + g.t_plus);
    const double target = wrap_unit(g.label_k * p.freq.value());
    for (double t_spec : {g.t_minus - kScanStep, g.t_plus + kScanStep}) {
      const double edge = refine_gap_edge(mid, t_spec, p, pot, 3, 1e-9);
      const auto cd = critical_distance_limit(edge, p, pot, 5);
      const double diff = circle_dist(cd.value, target);
      const bool e_ok = diff <= cd.error;
      ok = ok && e_ok;
      rows.push_back({{"label_k", g.label_k}, {"edge", edge}, {"C", cd.value}, {"target", target}, {"difference", diff},
                      {"error_bar", cd.error}, {"measured_drift", cd.drift}, {"level", cd.level}});
      d += fmt("k=%+d edge %.8f |C-m alpha|=%.1e (bar %.1e)  ", g.label_k, edge, diff, cd.error);
    }
  }
  r.pass = ok;
  r.detail = gaps.empty() ? "no |k|=1 gap detected" : d;
  r.metrics = {{"edges", rows}};
}

void homogeneity(CriterionResult& r, Cache& cache) {
  const auto& s = cache.scan(5).scan;
  const std::vector<double> eps{1e-2, 1e-3};
  const auto h = homogeneity_profile(s, eps, 100);
  double worst2 = 2, worst3 = 2;
  for (const auto& row : h.table) (row.epsilon > 5e-3 ? worst2 : worst3) = std::min(row.epsilon > 5e-3 ? worst2 : worst3, row.ratio);
  r.pass = h.mu >= 0.01;
  r.detail = fmt("mu = %.4f (>= 0.01); min ratio at eps=1e-2: %.4f, at 1e-3: %.4f", h.mu, worst2, worst3);
  r.metrics = {{"mu", h.mu}, {"min_ratio_1e-2", worst2}, {"min_ratio_1e-3", worst3}, {"samples", 100}};
}

void lyapunov_check(CriterionResult& r) {
  const auto pot = Potential::cosine();
  const double lam = 10;
  const auto ev = eigenvalues(truncated_operator(0, golden(lam), pot, 200));
  const double floor = std::log(lam / 2) - 0.05;
  double worst_diff = 0, min_val = 1e300;
  json rows = json::array();
  for (int j = 0; j < 10; ++j) {
    const double E = ev[static_cast<std::size_t>((j + 0.5) / 10 * static_cast<double>(ev.size()))];
    auto p = golden(lam);
    p.t = E / lam;
    const double avg = lyapunov(p, pot, 4000, LyapunovMethod::phase_average, 32);
    const double orb = lyapunov(p, pot, 4000, LyapunovMethod::single_orbit, 32);
    worst_diff = std::max(worst_diff, std::abs(avg - orb));
    min_val = std::min({min_val, avg, orb});
    rows.push_back({{"E", E}, {"phase_average", avg}, {"single_orbit", orb}});
  }
  r.pass = worst_diff <= 1e-2 && min_val >= floor;
  r.detail = fmt("max |avg - orbit| = %.2e (<= 1e-2), min estimate %.4f (>= log 5 - 0.05 = %.4f)", worst_diff, min_val, floor);
  r.metrics = {{"energies", rows}, {"max_difference", worst_diff}, {"min_estimate", min_val}};
}

}  // namespace

const std::vector<std::string>& criterion_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& c : kCriteria) v.emplace_back(c.name);
    return v;
  }();
  return names;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options) {
  for (const auto& n : options.only)
    if (std::find(criterion_names().begin(), criterion_names().end(), n) == criterion_names().end())
      throw std::invalid_argument("unknown criterion '" + n + "'");
  auto selected = [&](const std::string& n) {
    if (!options.only.empty()) return std::find(options.only.begin(), options.only.end(), n) != options.only.end();
    if (options.quick) return std::find(std::begin(kQuick), std::end(kQuick), n) != std::end(kQuick);
    return true;
  };

  Cache cache;
  std::vector<CriterionResult> out;
  for (const auto& c : kCriteria) {
    if (!selected(c.name)) continue;
    CriterionResult r;
    r.id = c.id;
    r.name = c.name;
    r.time_limit = c.time_limit;
    const auto start = std::chrono::steady_clock::now();
    try {
      const std::string n = c.name;
      if (n == "angle") angle(r);
      else if (n == "norm") norm(r);
      else if (n == "direction") direction(r);
      else if (n == "hw") hw(r);
      else if (n == "ids_asymptotic") ids_asymptotic(r);
      else if (n == "ids_symmetry") ids_symmetry(r);
      else if (n == "labels") labels(r, cache);
      else if (n == "lambda_constancy") lambda_constancy(r);
      else if (n == "induction") induction(r, cache);
      else if (n == "representation") representation(r, cache);
      else if (n == "homogeneity") homogeneity(r, cache);
      else if (n == "lyapunov") lyapunov_check(r);
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (r.time_limit > 0 && r.seconds >= r.time_limit) {
      r.pass = false;
      r.detail += fmt(" [runtime %.1fs exceeds %.0fs]", r.seconds, r.time_limit);
    }
    if (options.on_result) options.on_result(r);
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_result(const CriterionResult& r) {
  return fmt("[%s] %2d %-17s %7.1fs  ", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds) + r.detail;
}

json verify_json(const std::vector<CriterionResult>& results, const std::string& config_hash) {
  json arr = json::array();
  bool all = true;
  for (const auto& r : results) {
    all = all && r.pass;
    arr.push_back({{"id", r.id},
                   {"name", r.name},
                   {"pass", r.pass},
                   {"detail", r.detail},
                   {"seconds", r.seconds},
                   {"time_limit", r.time_limit > 0 ? json(r.time_limit) : json(nullptr)},
                   {"metrics", r.metrics}});
  }
  return {{"config_hash", config_hash}, {"pass", all}, {"criteria", arr}};
}

}  // namespace qpspec
