#pragma once

// Operator-side ground truth: Dirichlet truncations H^L of
// (H u)_n = u_{n+1} + u_{n-1} + lambda v(x + n alpha) u_n, Sturm counting,
// integrated density of states, spectrum scans, gap detection and labels.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qpspec/cocycle.hpp"

namespace qpspec {

/// Symmetric tridiagonal matrix with unit off-diagonal; diag[j] = lambda v(x + (j - L) alpha).
struct TruncatedOperator {
  std::vector<double> diag;

  std::size_t size() const { return diag.size(); }
};

/// Sites -L+trim .. L-trim.
TruncatedOperator truncated_operator(double x, const CocycleParams& params, const Potential& pot, int L,
                                     int trim = 0);

/// Number of eigenvalues below E (Sturm sequence). A zero pivot triggers a
/// recount at E + 1e-13, so an eigenvalue exactly at E is counted.
std::int64_t eigen_count(const TruncatedOperator& op, double E);
std::int64_t eigen_count(double x, const CocycleParams& params, const Potential& pot, int L, double E);

/// Counts for many energies; energies are processed in groups of eight.
void eigen_count_batch(std::span<const double> diag, std::span<const double> energies,
                       std::span<std::int64_t> out);

/// All eigenvalues by bisection on Sturm counts, ascending, to full precision.
std::vector<double> eigenvalues(const TruncatedOperator& op);

struct IdsValue {
  double value;
  double error;  // half the spread across phases plus 1/L
};

/// Phase average of eigen_count/(2L+1) over phases j/phase_count.
IdsValue ids(double E, const CocycleParams& params, const Potential& pot, int L, int phase_count);

struct IDSCurve {
  std::vector<double> energies;  // E, ascending
  std::vector<double> values;
  std::vector<double> errors;
  int L = 0;
  int phase_count = 0;

  /// Value at the grid energy nearest to E.
  double at(double E) const;
};

IDSCurve ids_curve(std::span<const double> energies, const CocycleParams& params, const Potential& pot, int L,
                   int phase_count);

/// Leb{x : lambda v(x) < E}.
double potential_level_measure(double E, const CocycleParams& params, const Potential& pot);

struct HoffmanWielandt {
  double lhs;    // sum |E_(j) - d_(j)|^2 over sorted sequences
  double bound;  // 4L
};

HoffmanWielandt hoffman_wielandt_check(double x, const CocycleParams& params, const Potential& pot, int L);

struct RealInterval {
  double lo, hi;
  double length() const { return hi - lo; }
};

enum class ScanMethod { finite_volume_cloud, uh_scan };

struct ScanOptions {
  ScanMethod method = ScanMethod::finite_volume_cloud;
  int L = 2000;
  int phase_count = 16;
  /// Truncations [-L+a, L-a] for a < boxes. Eigenvalues of boundary states
  /// move with the box, bulk eigenvalues do not.
  int boxes = 3;
  /// A covered run is kept only if this fraction of phases has bulk states in it.
  double phase_quorum = 0.75;
  /// Uncovered runs shorter than this many cells are below resolution.
  int min_gap_cells = 3;
  /// uh-scan: orbit length and phase count.
  std::int64_t uh_steps = 20000;
  int uh_phases = 32;
};

/// Covered part of a scaled-energy grid.
struct SpectrumApprox {
  ScanMethod method = ScanMethod::finite_volume_cloud;
  std::vector<double> t;              // grid, ascending, uniform
  std::vector<std::uint8_t> covered;  // per cell [t_i, t_{i+1}]
  std::vector<RealInterval> intervals;
  double resolution = 0;  // grid step
  int L = 0;
  int phase_count = 0;

  double measure() const;
  /// Convex hull of the covered set; {0,0} when empty.
  RealInterval hull() const;
  bool contains(double tt) const;
  /// |covered n (a, b)|
  double covered_length(double a, double b) const;
};

struct ScanResult {
  SpectrumApprox scan;
  IDSCurve ids;  // on energies lambda * t
};

std::vector<double> uniform_grid(double lo, double hi, double step);

/// Finite-volume scan of the scaled-energy grid, which must lie in the window
/// widened by 10% of its length. Also returns the IDS on the same grid (box 0,
/// all phases).
ScanResult scan_and_ids(const CocycleParams& params, const Potential& pot, std::span<const double> t_grid,
                        const ScanOptions& opt = {});

SpectrumApprox spectrum_scan(const CocycleParams& params, const Potential& pot, std::span<const double> t_grid,
                             const ScanOptions& opt = {});

struct GapRecord {
  double t_minus = 0, t_plus = 0;
  double width = 0;
  double ids_value = 0;
  double rotation = 0;
  int label_k = 0;
  double label_residual = 0;
  bool ambiguous = false;
  bool outer = false;  // one of the two unbounded rays
  bool certified = false;
};

inline constexpr int kDefaultMaxLabel = 50;

struct Label {
  int m;
  double residual;
  bool ambiguous;
};

/// m in [-max_label, max_label] minimizing dist(ids, m alpha mod 1).
Label gap_label(double ids_value, const Frequency& freq, int max_label = kDefaultMaxLabel);

/// Interior gaps sorted by decreasing width, followed by the two outer rays.
std::vector<GapRecord> detect_gaps(const SpectrumApprox& scan, const IDSCurve& curve, const Frequency& freq,
                                   int max_label = kDefaultMaxLabel);

/// (1 - N(E)) / 2.
double rotation_number(double E, const CocycleParams& params, const Potential& pot, int L, int phase_count);

struct HomogeneityRow {
  double t;
  double epsilon;
  double ratio;  // |S n (t-eps, t+eps)| / eps
};

struct Homogeneity {
  double mu = 0;
  std::vector<HomogeneityRow> table;
};

/// Samples sample_count points of the covered set at evenly spaced quantiles
/// of its measure.
Homogeneity homogeneity_profile(const SpectrumApprox& scan, std::span<const double> epsilons, int sample_count);

struct SweepRow {
  double lambda = 0;
  bool found = false;
  GapRecord gap;                // widest gap labeled k
  std::vector<GapRecord> gaps;  // full table at this coupling
};

struct SweepReport {
  int k = 0;
  std::vector<SweepRow> rows;
  double max_ids_drift = 0;     // max |ids(lambda) - ids(lambda_0)|
  double max_edge_jump = 0;     // largest endpoint change between consecutive lambdas
};

/// Tracks the gap labeled k across couplings; the scan grid covers each
/// lambda's window with the given step.
SweepReport gap_lambda_sweep(int k, std::span<const double> lambdas, const CocycleParams& base, const Potential& pot,
                             double t_step, const ScanOptions& opt = {});

}  // namespace qpspec
