#pragma once

// Run configuration: flat "key = value" files with '#' comments, command-line
// overrides, validation and a provenance hash.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpspec/induction.hpp"
#include "qpspec/spectrum.hpp"

namespace qpspec {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string alpha = "golden";  // golden | silver | surd:p,d,q | decimal in (0,1)
  std::string potential = "cosine";  // cosine | path to a sample file
  double lambda = 5;
  std::optional<double> t_min, t_max;  // default: the spectral window
  double t_step = 1e-4;
  int L = 2000;
  int phase_count = 16;
  int boxes = 3;
  double phase_quorum = 0.75;
  int min_gap_cells = 3;
  int max_label = kDefaultMaxLabel;
  std::string scan_method = "cloud";  // cloud | uh
  double sigma = 2;
  double kappa = 0.25;
  double tau = 2;
  int N = 3;
  int points = 2048;
  double lambda_min = 5;
  int max_level = 5;
  int certify_level = 3;
  std::string out = "out";
  int threads = 0;  // 0: all available cores
  std::uint64_t seed = 20240917;
};

/// Keys accepted in files and --set overrides, in canonical order.
const std::vector<std::string>& config_keys();

/// Sets one key; throws ConfigError for unknown keys or malformed values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Parses "key=value" (whitespace around '=' allowed).
void apply_override(RunConfig& cfg, const std::string& assignment);

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Range and consistency checks; throws ConfigError.
void validate(const RunConfig& cfg);

/// One "key = value" line per key in canonical order.
std::string canonical(const RunConfig& cfg);

/// FNV-1a 64 of the canonical form, as 16 hex digits. out and threads are
/// excluded since they do not affect results.
std::string config_hash(const RunConfig& cfg);

Frequency make_frequency(const RunConfig& cfg);
Potential make_potential(const RunConfig& cfg);
CocycleParams make_params(const RunConfig& cfg);
ScanOptions scan_options(const RunConfig& cfg);
InductionConfig induction_config(const RunConfig& cfg);

/// Uniform t-grid over [t_min, t_max], defaulting to the spectral window.
std::vector<double> t_grid(const RunConfig& cfg, const CocycleParams& params, const Potential& pot);

}  // namespace qpspec
