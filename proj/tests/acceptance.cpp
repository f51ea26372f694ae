// Runs every acceptance criterion and prints one pass/fail line each.
// Optional arguments restrict the run to the named criteria.

#include <cstdio>
#include <exception>
#include <string>

#include "qpspec/acceptance.hpp"

int main(int argc, char** argv) {
  qpspec::AcceptanceOptions opt;
  for (int i = 1; i < argc; ++i) opt.only.emplace_back(argv[i]);
  opt.on_result = [](const qpspec::CriterionResult& r) {
    std::printf("%s\n", qpspec::format_result(r).c_str());
    std::fflush(stdout);
  };
  try {
    const auto results = qpspec::run_acceptance(opt);
    int failed = 0;
    for (const auto& r : results) failed += r.pass ? 0 : 1;
    std::printf("%zu criteria, %d failed\n", results.size(), failed);
    return failed == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance: %s\n", e.what());
    return 2;
  }
}
