#pragma once

// Multiscale induction on the angle functions g_n: critical points c_{n,j},
// critical intervals I_{n,j}, the Case 1/2/3 step classification, resonance
// labels and gap certificates.
//
// Conventions. c_{1,1} is the zero of g_1 on the increasing branch of
// v(. - alpha), c_{1,2} the one on the decreasing branch, so that
// c_{n,1} - c_{n,2} mod 1 tracks the IDS. A resonance k means
// c_{n,1} + k alpha ~ c_{n,2}; the IDS label of the matching gap is -k.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qpspec/cocycle.hpp"
#include "qpspec/spectrum.hpp"

namespace qpspec {

enum class StepCase { case1, case2, case3 };

const char* to_string(StepCase c);

/// Scale law: radius of I_{n,j} is q_{N+n-1}^(-sigma*tau), the
/// Case 3 threshold is 2 lambda^(-r^kappa) with r the smallest return time.
struct InductionConfig {
  double sigma = 2;
  double tau = 2;
  double kappa = 0.25;
  int N = 3;
  int points = 2048;
  double lambda_min = 5;
  double zero_tol = 1e-12;
  int max_refine = 30;
  /// Profile points per interval used for d/dt and block-norm sampling.
  int sample_stride = 64;
};

/// Measured quantities of one level, logged rather than asserted.
struct LevelMeasurements {
  double radius = 0;
  double min_angle = 0;  // inf over I_n of |g_{n+1} mod pi|, 0 when the lift crosses pi Z
  double threshold = 0;
  std::int64_t r_min = 0, r_max = 0;
  std::array<int, 2> zero_count{};
  std::array<double, 2> range{};       // max - min of the lift per interval
  std::array<double, 2> d1_at_zero{};  // dg/dx at the next critical points (0 without a zero)
  double dt_min = 0;                   // smallest sampled dg/dt
  double cubic_c = 0;                  // min |g mod pi| / dist(x, zeros)^3 away from zeros
  double drift = 0;                    // max_j |c_{n,j} - c_{n-1,j}|
  double drift_bound = 0;              // lambda^(-r_{n-1}^kappa / 2)
  double resonance_distance = 0;       // signed, for the best k
  int best_k = 0;
};

struct CriticalState {
  int level = 1;
  double t = 0;
  std::array<Arc, 2> intervals{};
  std::array<double, 2> critical{};
  std::array<std::optional<double>, 2> secondary;
  StepCase case_tag = StepCase::case1;
  std::optional<int> resonance_k;
  /// Smallest forward / backward return times over the profile.
  std::int64_t r_plus = 0, r_minus = 0;
  bool degenerate = false;      // J = 1: a single critical point, duplicated
  bool outside_window = false;  // t outside I: no intervals, Case 3 with k = 0
  AngleProfile profile;         // g_{n+1} on I_{n,1}, I_{n,2}
  LevelMeasurements m;
};

struct InductionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StepClass {
  StepCase tag;
  std::optional<int> k;
};

/// Radius of the level-n critical intervals.
double critical_radius(int level, const Frequency& freq, const InductionConfig& cfg = {});

/// Smallest admissible return time at level n: q_{N+n-1}.
std::int64_t min_return_steps(int level, const Frequency& freq, const InductionConfig& cfg = {});

/// Level-1 state with its next profile and classification.
CriticalState init_state(const CocycleParams& params, const Potential& pot, const InductionConfig& cfg = {});

/// Classification recomputed from the state's critical points.
StepClass classify_step(const CriticalState& state, const CocycleParams& params, const Potential& pot,
                        const InductionConfig& cfg = {});

/// Next level from the zeros of the state's profile.
CriticalState advance(const CriticalState& state, const CocycleParams& params, const Potential& pot,
                      const InductionConfig& cfg = {});

/// States from level 1 until Case 3 or max_level (at most 12).
std::vector<CriticalState> trace(double t, const CocycleParams& params, const Potential& pot, int max_level,
                                 const InductionConfig& cfg = {});

/// c_{n,1} + k alpha - c_{n,2} mapped to (-1/2, 1/2]; k defaults to the
/// state's resonance, else 0.
double resonance_distance(const CriticalState& state, const Frequency& freq, std::optional<int> k = std::nullopt);

struct GapCertificate {
  double t = 0;
  int level = 0;
  int k = 0;
  double min_angle_gap = 0;
  double threshold = 0;
  double uh_rate = 1;
  double log_beta = 0;
  double gamma = 0;
  bool valid = false;
};

/// Block certificate from the return-time decomposition on I_n: beta is the
/// smallest sampled return-block norm, gamma = tan(min_angle). Other states
/// are evaluated the same way; a zero of g gives gamma = 0 and no certificate.
GapCertificate certify_gap(const CriticalState& state, const CocycleParams& params, const Potential& pot,
                           const InductionConfig& cfg = {});

/// Sets GapRecord::certified from certify_gap on the last state of a trace at
/// each interior gap midpoint; outer rays are certified at a point just
/// outside the spectral window. No-op below the configured lambda_min; an
/// induction failure at a gap leaves it uncertified.
void certify_gap_records(std::vector<GapRecord>& gaps, const CocycleParams& params, const Potential& pot,
                         int max_level, const InductionConfig& cfg = {});

struct CriticalDistance {
  double value = 0;  // c_{n,1} - c_{n,2} mod 1 at the deepest level
  double error = 0;  // twice the drift bound of the deepest level (2 r_1 at level 1)
  double drift = 0;  // measured |dc_1| + |dc_2| of the last advance
  int level = 0;
  StepCase last_case = StepCase::case1;
};

/// Bisection between a gap point (trace reaches Case 3 within max_level) and a
/// spectral point (it does not). Returns the last gap-side point, within tol.
double refine_gap_edge(double t_gap, double t_spec, const CocycleParams& params, const Potential& pot, int max_level,
                       double tol = 1e-9, const InductionConfig& cfg = {});

CriticalDistance critical_distance_limit(double t, const CocycleParams& params, const Potential& pot, int max_level,
                                         const InductionConfig& cfg = {});

}  // namespace qpspec
