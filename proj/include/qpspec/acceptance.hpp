#pragma once

// Acceptance suite: twelve property checks with fixed tolerances, runtime
// limits and machine-readable results.

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace qpspec {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
  double time_limit = 0;  // seconds, 0 when none is stated
  nlohmann::json metrics = nlohmann::json::object();
};

struct AcceptanceOptions {
  /// angle, norm, direction and ids_symmetry only.
  bool quick = false;
  /// When non-empty, run only these names.
  std::vector<std::string> only;
  /// Called after each criterion, in order.
  std::function<void(const CriterionResult&)> on_result;
};

/// Names in criterion order: angle, norm, direction, hw, ids_asymptotic,
/// ids_symmetry, labels, lambda_constancy, induction, representation,
/// homogeneity, lyapunov.
const std::vector<std::string>& criterion_names();

/// Throws std::invalid_argument for unknown names in options.only.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options = {});

/// "[PASS]  7 labels      12.3s  detail".
std::string format_result(const CriterionResult& r);

nlohmann::json verify_json(const std::vector<CriterionResult>& results, const std::string& config_hash);

}  // namespace qpspec
