#include "qpspec/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace qpspec {

namespace {

constexpr int kBatch = 8;

// Sturm count below E for one energy; sets zero_pivot on an exact zero.
std::int64_t sturm_single(std::span<const double> d, double E, bool& zero_pivot) {
  double q = std::numeric_limits<double>::infinity();
  std::int64_t c = 0;
  zero_pivot = false;
  for (double dj : d) {
    q = (dj - E) - 1.0 / q;
    c += q < 0;
    zero_pivot |= q == 0;
  }
  return c;
}

std::int64_t sturm_robust(std::span<const double> d, double E) {
  bool zero = false;
  std::int64_t c = sturm_single(d, E, zero);
  while (zero) {
    E += 1e-13;
    c = sturm_single(d, E, zero);
  }
  return c;
}

}  // namespace

TruncatedOperator truncated_operator(double x, const CocycleParams& params, const Potential& pot, int L, int trim) {
  if (L < 0 || trim < 0 || trim > L) throw std::invalid_argument("invalid truncation");
  TruncatedOperator op;
  op.diag.reserve(static_cast<std::size_t>(2 * (L - trim) + 1));
  for (int j = -L + trim; j <= L - trim; ++j) op.diag.push_back(params.lambda * pot.value(orbit_point(x, params.freq, j)));
  return op;
}

void eigen_count_batch(std::span<const double> d, std::span<const double> energies, std::span<std::int64_t> out) {
  if (out.size() != energies.size()) throw std::invalid_argument("output size mismatch");
  const std::size_t ne = energies.size();
  std::size_t b = 0;
  for (; b + kBatch <= ne; b += kBatch) {
    double e[kBatch], q[kBatch];
    std::int64_t c[kBatch] = {};
    bool zero = false;
    for (int k = 0; k < kBatch; ++k) {
      e[k] = energies[b + k];
      q[k] = std::numeric_limits<double>::infinity();
    }
    for (double dj : d) {
      for (int k = 0; k < kBatch; ++k) {
        q[k] = (dj - e[k]) - 1.0 / q[k];
        c[k] += q[k] < 0;
        zero |= q[k] == 0;
      }
    }
    for (int k = 0; k < kBatch; ++k) out[b + k] = zero ? sturm_robust(d, e[k]) : c[k];
  }
  for (; b < ne; ++b) out[b] = sturm_robust(d, energies[b]);
}

std::int64_t eigen_count(const TruncatedOperator& op, double E) { return sturm_robust(op.diag, E); }

std::int64_t eigen_count(double x, const CocycleParams& params, const Potential& pot, int L, double E) {
  if (L > 50000) throw std::invalid_argument("L must be <= 50000");
  return eigen_count(truncated_operator(x, params, pot, L), E);
}

std::vector<double> eigenvalues(const TruncatedOperator& op) {
  const std::size_t n = op.size();
  std::vector<double> ev;
  ev.reserve(n);
  if (n == 0) return ev;
  const auto [mn, mx] = std::minmax_element(op.diag.begin(), op.diag.end());
  struct Iv {
    double lo, hi;
    std::int64_t clo, chi;
  };
  std::vector<Iv> active{{*mn - 2.5, *mx + 2.5, 0, static_cast<std::int64_t>(n)}};
  std::vector<double> mids;
  std::vector<std::int64_t> counts;
  while (!active.empty()) {
    mids.clear();
    std::vector<Iv> next;
    std::vector<Iv> pending;
    for (const Iv& iv : active) {
      const double mid = iv.lo + 0.5 * (iv.hi - iv.lo);
      if (mid <= iv.lo || mid >= iv.hi) {
        for (std::int64_t k = iv.clo; k < iv.chi; ++k) ev.push_back(mid);
        continue;
      }
      pending.push_back(iv);
      mids.push_back(mid);
    }
    counts.assign(mids.size(), 0);
    eigen_count_batch(op.diag, mids, counts);
    for (std::size_t i = 0; i < pending.size(); ++i) {
      const Iv& iv = pending[i];
      const std::int64_t cm = counts[i];
      if (cm > iv.clo) next.push_back({iv.lo, mids[i], iv.clo, cm});
      if (iv.chi > cm) next.push_back({mids[i], iv.hi, cm, iv.chi});
    }
    active.swap(next);
  }
  std::sort(ev.begin(), ev.end());
  return ev;
}

IdsValue ids(double E, const CocycleParams& params, const Potential& pot, int L, int phase_count) {
  const double e[1] = {E};
  auto curve = ids_curve(e, params, pot, L, phase_count);
  return {curve.values[0], curve.errors[0]};
}

double IDSCurve::at(double E) const {
  if (energies.empty()) throw std::logic_error("empty IDS curve");
  auto it = std::lower_bound(energies.begin(), energies.end(), E);
  std::size_t i = static_cast<std::size_t>(it - energies.begin());
  if (i == energies.size()) return values.back();
  if (i > 0 && E - energies[i - 1] < energies[i] - E) --i;
  return values[i];
}

IDSCurve ids_curve(std::span<const double> energies, const CocycleParams& params, const Potential& pot, int L,
                   int phase_count) {
  if (phase_count < 1) throw std::invalid_argument("phase_count must be >= 1");
  if (L < 1 || L > 50000) throw std::invalid_argument("L must lie in [1, 50000]");
  const std::size_t ne = energies.size();
  std::vector<std::vector<std::int64_t>> per_phase(static_cast<std::size_t>(phase_count),
                                                   std::vector<std::int64_t>(ne));
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < phase_count; ++j) {
    auto op = truncated_operator(static_cast<double>(j) / phase_count, params, pot, L);
    eigen_count_batch(op.diag, energies, per_phase[static_cast<std::size_t>(j)]);
  }
  IDSCurve c;
  c.energies.assign(energies.begin(), energies.end());
  c.L = L;
  c.phase_count = phase_count;
  const double dim = 2.0 * L + 1;
  for (std::size_t i = 0; i < ne; ++i) {
    std::int64_t lo = per_phase[0][i], hi = lo, sum = 0;
    for (const auto& pp : per_phase) {
      sum += pp[i];
      lo = std::min(lo, pp[i]);
      hi = std::max(hi, pp[i]);
    }
    c.values.push_back(static_cast<double>(sum) / (dim * phase_count));
    c.errors.push_back(0.5 * static_cast<double>(hi - lo) / dim + 1.0 / L);
  }
  return c;
}

double potential_level_measure(double E, const CocycleParams& params, const Potential& pot) {
  if (!(params.lambda > 0)) throw std::invalid_argument("lambda must be positive");
  return pot.sublevel_measure(E / params.lambda);
}

HoffmanWielandt hoffman_wielandt_check(double x, const CocycleParams& params, const Potential& pot, int L) {
  if (L < 1 || L > 5000) throw std::invalid_argument("L must lie in [1, 5000]");
  auto op = truncated_operator(x, params, pot, L);
  auto ev = eigenvalues(op);
  auto d = op.diag;
  std::sort(d.begin(), d.end());
  double lhs = 0;
  for (std::size_t j = 0; j < d.size(); ++j) lhs += (ev[j] - d[j]) * (ev[j] - d[j]);
  return {lhs, 4.0 * L};
}

double SpectrumApprox::measure() const {
  double m = 0;
  for (const auto& iv : intervals) m += iv.length();
  return m;
}

RealInterval SpectrumApprox::hull() const {
  if (intervals.empty()) return {0, 0};
  return {intervals.front().lo, intervals.back().hi};
}

bool SpectrumApprox::contains(double tt) const {
  for (const auto& iv : intervals)
    if (tt >= iv.lo && tt <= iv.hi) return true;
  return false;
}

double SpectrumApprox::covered_length(double a, double b) const {
  double m = 0;
  for (const auto& iv : intervals) m += std::max(0.0, std::min(b, iv.hi) - std::max(a, iv.lo));
  return m;
}

std::vector<double> uniform_grid(double lo, double hi, double step) {
  if (!(hi > lo) || !(step > 0)) throw std::invalid_argument("empty or invalid grid range");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + static_cast<double>(i) * step;
  return g;
}

namespace {

// Dirichlet boundary states a truncation may place in one gap: one per end.
constexpr double kGapEdgeStates = 2;

void check_grid(std::span<const double> t) {
  if (t.size() < 2) throw std::invalid_argument("scan grid needs at least two points");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) throw std::invalid_argument("scan grid must be strictly increasing");
}

// Runs of equal flags: (first cell, one past last cell, flag).
struct Run {
  std::size_t a, b;
  bool on;
};
std::vector<Run> runs_of(const std::vector<std::uint8_t>& f) {
  std::vector<Run> r;
  std::size_t i = 0;
  while (i < f.size()) {
    std::size_t j = i;
    while (j < f.size() && f[j] == f[i]) ++j;
    r.push_back({i, j, f[i] != 0});
    i = j;
  }
  return r;
}

// Interior off-runs shorter than min_cells become on.
void fill_short_holes(std::vector<std::uint8_t>& f, int min_cells) {
  auto r = runs_of(f);
  for (std::size_t k = 1; k + 1 < r.size(); ++k)
    if (!r[k].on && r[k].b - r[k].a < static_cast<std::size_t>(min_cells))
      std::fill(f.begin() + static_cast<std::ptrdiff_t>(r[k].a), f.begin() + static_cast<std::ptrdiff_t>(r[k].b), 1);
}

void finalize_intervals(SpectrumApprox& s) {
  s.intervals.clear();
  for (const auto& r : runs_of(s.covered))
    if (r.on) s.intervals.push_back({s.t[r.a], s.t[r.b]});
}

// Heuristic uniform-hyperbolicity test: log||A_n(x)|| nondecreasing at
// 64-step granularity for every sampled phase.
bool uh_growth(const CocycleParams& params, const Potential& pot, std::int64_t steps, int phases) {
  constexpr std::int64_t chunk = 64;
  for (int j = 0; j < phases; ++j) {
    double x = static_cast<double>(j) / phases;
    Mat2 m = Mat2::Identity();
    double log_scale = 0, prev = 0;
    for (std::int64_t n = 0; n < steps; n += chunk) {
      Block b = block_product(orbit_point(x, params.freq, n), params, pot, chunk);
      m = b.m * m;
      log_scale += b.log_scale;
      double nrm = op_norm(m);
      m /= nrm;
      log_scale += std::log(nrm);
      if (log_scale < prev) return false;
      prev = log_scale;
    }
  }
  return true;
}

}  // namespace

ScanResult scan_and_ids(const CocycleParams& params, const Potential& pot, std::span<const double> t_grid,
                        const ScanOptions& opt) {
  check_grid(t_grid);
  const Window w = spectral_window(params, pot);
  const double pad = 0.1 * (w.hi - w.lo);
  if (t_grid.front() < w.lo - pad || t_grid.back() > w.hi + pad)
    throw std::invalid_argument("scan grid leaves the spectral window widened by 10%");
  if (opt.phase_count < 1 || opt.boxes < 1 || opt.boxes > opt.L) throw std::invalid_argument("invalid scan options");
  const std::size_t G = t_grid.size(), P = static_cast<std::size_t>(opt.phase_count),
                    A = static_cast<std::size_t>(opt.boxes);
  std::vector<double> energies(G);
  for (std::size_t i = 0; i < G; ++i) energies[i] = params.lambda * t_grid[i];

  ScanResult res;
  SpectrumApprox& s = res.scan;
  s.method = opt.method;
  s.t.assign(t_grid.begin(), t_grid.end());
  s.resolution = (t_grid.back() - t_grid.front()) / static_cast<double>(G - 1);
  s.L = opt.L;
  s.phase_count = opt.phase_count;

  // counts[(p * A + a) * G + i]
  std::vector<std::int64_t> counts(P * A * G);
  const bool need_boxes = opt.method == ScanMethod::finite_volume_cloud;
  const std::size_t A_used = need_boxes ? A : 1;
#pragma omp parallel for collapse(2) schedule(dynamic)
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t a = 0; a < A; ++a) {
      if (a >= A_used) continue;
      auto op = truncated_operator(static_cast<double>(p) / static_cast<double>(P), params, pot, opt.L,
                                   static_cast<int>(a));
      eigen_count_batch(op.diag, energies, std::span<std::int64_t>(counts.data() + (p * A + a) * G, G));
    }
  }
  auto N = [&](std::size_t p, std::size_t a, std::size_t i) { return counts[(p * A + a) * G + i]; };

  // IDS from the full box
  IDSCurve& c = res.ids;
  c.energies = energies;
  c.L = opt.L;
  c.phase_count = opt.phase_count;
  const double dim = 2.0 * opt.L + 1;
  for (std::size_t i = 0; i < G; ++i) {
    std::int64_t lo = N(0, 0, i), hi = lo, sum = 0;
    for (std::size_t p = 0; p < P; ++p) {
      sum += N(p, 0, i);
      lo = std::min(lo, N(p, 0, i));
      hi = std::max(hi, N(p, 0, i));
    }
    c.values.push_back(static_cast<double>(sum) / (dim * static_cast<double>(P)));
    c.errors.push_back(0.5 * static_cast<double>(hi - lo) / dim + 1.0 / opt.L);
  }

  s.covered.assign(G - 1, 0);
  if (opt.method == ScanMethod::uh_scan) {
    std::vector<std::uint8_t> uh(G);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < G; ++i) {
      CocycleParams q = params;
      q.t = t_grid[i];
      uh[i] = uh_growth(q, pot, opt.uh_steps, opt.uh_phases);
    }
    for (std::size_t i = 0; i + 1 < G; ++i) s.covered[i] = !(uh[i] && uh[i + 1]);
    finalize_intervals(s);
    return res;
  }

  // bulk count of phase p over cells [i0, i1): boundary states differ between
  // boxes, so the minimum over boxes discards them
  auto bulk = [&](std::size_t p, std::size_t i0, std::size_t i1) {
    std::int64_t m = std::numeric_limits<std::int64_t>::max();
    for (std::size_t a = 0; a < A; ++a) m = std::min(m, N(p, a, i1) - N(p, a, i0));
    return m;
  };
  for (std::size_t i = 0; i + 1 < G; ++i)
    for (std::size_t p = 0; p < P && !s.covered[i]; ++p)
      if (bulk(p, i, i + 1) > 0) s.covered[i] = 1;
  fill_short_holes(s.covered, opt.min_gap_cells);
  const auto quorum = static_cast<std::size_t>(std::ceil(opt.phase_quorum * static_cast<double>(P)));
  for (const auto& r : runs_of(s.covered)) {
    if (!r.on) continue;
    std::size_t with_states = 0;
    for (std::size_t p = 0; p < P; ++p) with_states += bulk(p, r.a, r.b) > 0;
    if (with_states < quorum)
      std::fill(s.covered.begin() + static_cast<std::ptrdiff_t>(r.a), s.covered.begin() + static_cast<std::ptrdiff_t>(r.b), 0);
  }
  fill_short_holes(s.covered, opt.min_gap_cells);
  // a gap holds only boundary states: more than two per phase on average
  // means bulk states moved between boxes (extended regime), not a gap
  const auto runs = runs_of(s.covered);
  for (std::size_t k = 1; k + 1 < runs.size(); ++k) {
    const Run& r = runs[k];
    if (r.on) continue;
    std::int64_t states = 0;
    for (std::size_t p = 0; p < P; ++p) states += N(p, 0, r.b) - N(p, 0, r.a);
    if (static_cast<double>(states) > kGapEdgeStates * static_cast<double>(P))
      std::fill(s.covered.begin() + static_cast<std::ptrdiff_t>(r.a), s.covered.begin() + static_cast<std::ptrdiff_t>(r.b), 1);
  }
  finalize_intervals(s);
  return res;
}

SpectrumApprox spectrum_scan(const CocycleParams& params, const Potential& pot, std::span<const double> t_grid,
                             const ScanOptions& opt) {
  return scan_and_ids(params, pot, t_grid, opt).scan;
}

Label gap_label(double ids_value, const Frequency& freq, int max_label) {
  Label best{0, std::numeric_limits<double>::infinity(), false};
  double second = std::numeric_limits<double>::infinity();
  for (int m = -max_label; m <= max_label; ++m) {
    double r = circle_dist(ids_value, orbit_point(0.0, freq, m));
    if (r < best.residual) {
      second = best.residual;
      best.m = m;
      best.residual = r;
    } else if (r < second) {
      second = r;
    }
  }
  best.ambiguous = second < 2 * best.residual;
  return best;
}

std::vector<GapRecord> detect_gaps(const SpectrumApprox& scan, const IDSCurve& curve, const Frequency& freq,
                                   int max_label) {
  std::vector<GapRecord> gaps;
  if (scan.intervals.empty()) return gaps;
  if (curve.energies.size() != scan.t.size()) throw std::invalid_argument("scan and IDS grids differ");
  const auto runs = runs_of(scan.covered);
  for (std::size_t k = 1; k + 1 < runs.size(); ++k) {
    const Run& r = runs[k];
    if (r.on) continue;
    GapRecord g;
    g.t_minus = scan.t[r.a];
    g.t_plus = scan.t[r.b];
    g.width = g.t_plus - g.t_minus;
    // bulk value: mean over grid points strictly inside the gap
    double sum = 0;
    std::size_t cnt = 0;
    for (std::size_t i = r.a + 1; i <= r.b - 1; ++i) {
      sum += curve.values[i];
      ++cnt;
    }
    g.ids_value = cnt ? sum / static_cast<double>(cnt) : 0.5 * (curve.values[r.a] + curve.values[r.b]);
    g.rotation = (1 - g.ids_value) / 2;
    Label lab = gap_label(g.ids_value, freq, max_label);
    g.label_k = lab.m;
    g.label_residual = lab.residual;
    g.ambiguous = lab.ambiguous;
    gaps.push_back(g);
  }
  std::stable_sort(gaps.begin(), gaps.end(), [](const GapRecord& a, const GapRecord& b) { return a.width > b.width; });
  const auto hull = scan.hull();
  const double inf = std::numeric_limits<double>::infinity();
  GapRecord below{-inf, hull.lo, inf, 0.0, 0.5, 0, 0.0, false, true, false};
  GapRecord above{hull.hi, inf, inf, 1.0, 0.0, 0, 0.0, false, true, false};
  gaps.push_back(below);
  gaps.push_back(above);
  return gaps;
}

double rotation_number(double E, const CocycleParams& params, const Potential& pot, int L, int phase_count) {
  return (1 - ids(E, params, pot, L, phase_count).value) / 2;
}

Homogeneity homogeneity_profile(const SpectrumApprox& scan, std::span<const double> epsilons, int sample_count) {
  if (sample_count < 1) throw std::invalid_argument("sample_count must be positive");
  const double total = scan.measure();
  if (!(total > 0)) throw std::invalid_argument("empty covered set");
  const auto hull = scan.hull();
  for (double e : epsilons) {
    if (e < 10 * scan.resolution * (1 - 1e-9))
      throw std::invalid_argument("epsilon below the trusted resolution (10 grid steps)");
    if (e > hull.length()) throw std::invalid_argument("epsilon exceeds the diameter of the covered set");
  }
  Homogeneity h;
  h.mu = std::numeric_limits<double>::infinity();
  std::size_t k = 0;
  double before = 0;
  for (int j = 0; j < sample_count; ++j) {
    const double target = (j + 0.5) / sample_count * total;
    while (k + 1 < scan.intervals.size() && before + scan.intervals[k].length() < target) {
      before += scan.intervals[k].length();
      ++k;
    }
    const double tt = scan.intervals[k].lo + (target - before);
    for (double e : epsilons) {
      const double ratio = scan.covered_length(tt - e, tt + e) / e;
      h.table.push_back({tt, e, ratio});
      h.mu = std::min(h.mu, ratio);
    }
  }
  return h;
}

SweepReport gap_lambda_sweep(int k, std::span<const double> lambdas, const CocycleParams& base, const Potential& pot,
                             double t_step, const ScanOptions& opt) {
  SweepReport rep;
  rep.k = k;
  const GapRecord* first = nullptr;
  for (double lam : lambdas) {
    CocycleParams p = base;
    p.lambda = lam;
    const Window w = spectral_window(p, pot);
    auto grid = uniform_grid(w.lo, w.hi, t_step);
    auto res = scan_and_ids(p, pot, grid, opt);
    auto gaps = detect_gaps(res.scan, res.ids, p.freq);
    SweepRow row;
    row.lambda = lam;
    row.gaps = gaps;
    for (const auto& g : gaps)
      if (!g.outer && g.label_k == k) {
        row.found = true;
        row.gap = g;
        break;  // widest first
      }
    rep.rows.push_back(row);
  }
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    if (!rep.rows[i].found) continue;
    if (!first) first = &rep.rows[i].gap;
    rep.max_ids_drift = std::max(rep.max_ids_drift, std::abs(rep.rows[i].gap.ids_value - first->ids_value));
    if (i > 0 && rep.rows[i - 1].found) {
      rep.max_edge_jump = std::max({rep.max_edge_jump, std::abs(rep.rows[i].gap.t_minus - rep.rows[i - 1].gap.t_minus),
                                    std::abs(rep.rows[i].gap.t_plus - rep.rows[i - 1].gap.t_plus)});
    }
  }
  return rep;
}

}  // namespace qpspec
