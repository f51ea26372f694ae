// Command-line front end: scan, gaps, trace and verify.

#include <omp.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "qpspec/acceptance.hpp"
#include "qpspec/config.hpp"
#include "qpspec/report.hpp"

using namespace qpspec;

namespace {

enum Exit { ok = 0, usage = 1, computation = 2, acceptance_failure = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const char* kFooter = R"(Outputs (written to the output directory):
  spectrum.csv  t, E, covered        one row per grid point; covered is 1 inside the detected spectrum
  ids.csv       E, t, ids, error     phase-averaged eigenvalue fraction below E and its error bar
  gaps.json     GapRecord objects    t_minus, t_plus, width, ids_value, rotation, label_k,
                                     label_residual, ambiguous, outer, certified (infinite values are null)
  sweep.csv     lambda, found, t_minus, t_plus, width, ids_value, label_k, label_residual
  sweep.json    per-lambda gap tables, max_ids_drift, max_edge_jump
  trace.jsonl   one induction level per line
  verify.json   pass/fail and metrics per acceptance criterion
Every CSV starts with '# config_hash=<hex> seed=<n>'. See docs/output_schema.md.
Exit codes: 0 ok, 1 usage, 2 computation error, 3 acceptance failure.)";

std::string out_path(const RunConfig& cfg, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out, ec);
  if (ec || !std::filesystem::is_directory(cfg.out)) throw std::runtime_error("cannot create output directory " + cfg.out);
  return (std::filesystem::path(cfg.out) / name).string();
}

Provenance provenance(const RunConfig& cfg) { return {config_hash(cfg), cfg.seed}; }

ScanResult run_scan(const RunConfig& cfg) {
  const auto params = make_params(cfg);
  const auto pot = make_potential(cfg);
  const auto grid = t_grid(cfg, params, pot);
  return scan_and_ids(params, pot, grid, scan_options(cfg));
}

int cmd_scan(const RunConfig& cfg) {
  const auto res = run_scan(cfg);
  const auto prov = provenance(cfg);
  std::ostringstream s, i;
  write_spectrum_csv(s, res, cfg.lambda, prov);
  write_ids_csv(i, res, cfg.lambda, prov);
  write_file(out_path(cfg, "spectrum.csv"), s.str());
  write_file(out_path(cfg, "ids.csv"), i.str());
  std::printf("%zu grid points, %zu spectral intervals, measure %.6f\n", res.scan.t.size(), res.scan.intervals.size(),
              res.scan.measure());
  return ok;
}

std::vector<double> parse_sweep(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw UsageError("--lambda-sweep expects A:B:STEP, got '" + text + "'");
    parts.push_back(v);
  }
  if (parts.size() != 3 || !(parts[0] > 0) || !(parts[1] >= parts[0]) || !(parts[2] > 0))
    throw UsageError("--lambda-sweep expects 0 < A <= B and STEP > 0, got '" + text + "'");
  std::vector<double> out;
  for (int j = 0;; ++j) {
    const double l = parts[0] + j * parts[2];
    if (l > parts[1] * (1 + 1e-12)) break;
    out.push_back(l);
  }
  return out;
}

int cmd_gaps(const RunConfig& cfg, const std::string& sweep, int k) {
  const auto prov = provenance(cfg);
  const auto pot = make_potential(cfg);
  if (!sweep.empty()) {
    const auto lambdas = parse_sweep(sweep);
    const auto rep = gap_lambda_sweep(k, lambdas, make_params(cfg), pot, cfg.t_step, scan_options(cfg));
    for (const auto& row : rep.rows) {
      std::printf("lambda = %g\n", row.lambda);
      print_gap_table(std::cout, row.gaps);
    }
    std::printf("gap k=%d: max ids drift %.3e, max edge jump %.3e\n", k, rep.max_ids_drift, rep.max_edge_jump);
    std::ostringstream csv;
    write_sweep_csv(csv, rep, prov);
    write_file(out_path(cfg, "sweep.csv"), csv.str());
    write_file(out_path(cfg, "sweep.json"), sweep_json(rep, prov).dump(2) + "\n");
    return ok;
  }
  const auto params = make_params(cfg);
  const auto res = run_scan(cfg);
  auto gaps = detect_gaps(res.scan, res.ids, params.freq, cfg.max_label);
  certify_gap_records(gaps, params, pot, cfg.certify_level, induction_config(cfg));
  print_gap_table(std::cout, gaps);
  write_file(out_path(cfg, "gaps.json"), gaps_json(gaps, prov, cfg.lambda).dump(2) + "\n");
  return ok;
}

int cmd_trace(const RunConfig& cfg, double t) {
  if (cfg.lambda < cfg.lambda_min) throw UsageError("trace needs lambda >= lambda_min");
  auto params = make_params(cfg);
  params.t = t;
  const auto pot = make_potential(cfg);
  const auto ic = induction_config(cfg);
  const auto states = trace(t, params, pot, cfg.max_level, ic);
  const auto cert = certify_gap(states.back(), params, pot, ic);
  std::ostringstream os;
  write_trace_jsonl(os, states, cert, provenance(cfg));
  write_file(out_path(cfg, "trace.jsonl"), os.str());
  for (const auto& s : states)
    std::printf("level %d  %s  k=%s  min_angle=%.3e  threshold=%.3e\n", s.level, to_string(s.case_tag),
                s.resonance_k ? std::to_string(*s.resonance_k).c_str() : "-", s.m.min_angle, s.m.threshold);
  std::printf("certificate: %s (rate %.3g)\n", cert.valid ? "valid" : "none", cert.uh_rate);
  return ok;
}

int cmd_verify(const RunConfig& cfg, bool quick, const std::vector<std::string>& criteria) {
  AcceptanceOptions opt;
  opt.quick = quick;
  opt.only = criteria;
  opt.on_result = [](const CriterionResult& r) {
    std::printf("%s\n", format_result(r).c_str());
    std::fflush(stdout);
  };
  std::vector<CriterionResult> results;
  try {
    results = run_acceptance(opt);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  write_file(out_path(cfg, "verify.json"), verify_json(results, config_hash(cfg)).dump(2) + "\n");
  for (const auto& r : results)
    if (!r.pass) return acceptance_failure;
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectra, gap labels and multiscale induction for quasiperiodic Schrodinger operators"};
  app.footer(kFooter);
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir;
  int threads = -1;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "Flat key = value config file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory (overrides config key out)");
  app.add_option("--threads", threads, "Worker threads, 0 = all cores (overrides config key threads)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--set", sets, "Config override key=value, repeatable");

  auto* scan = app.add_subcommand("scan", "Scan the spectrum and IDS; writes spectrum.csv and ids.csv");
  auto* gaps = app.add_subcommand("gaps", "Detect, label and certify gaps; writes gaps.json");
  std::string sweep;
  int sweep_k = 1;
  gaps->add_option("--lambda-sweep", sweep, "A:B:STEP; track gap k across couplings (writes sweep.csv, sweep.json)");
  gaps->add_option("--k", sweep_k, "Gap label tracked by --lambda-sweep");
  auto* tr = app.add_subcommand("trace", "Induction trace at one scaled energy; writes trace.jsonl");
  double t = 0;
  tr->add_option("--t", t, "Scaled energy t = E / lambda")->required();
  auto* verify = app.add_subcommand("verify", "Run the acceptance suite; writes verify.json");
  bool quick = false;
  std::vector<std::string> criteria;
  verify->add_flag("--quick", quick, "SL2 oracles and IDS symmetry only");
  verify->add_option("--criterion", criteria, "Run only the named criterion, repeatable")
      ->check(CLI::IsMember(criterion_names()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return usage;
  }

  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
    for (const auto& s : sets) apply_override(cfg, s);
    if (!out_dir.empty()) cfg.out = out_dir;
    if (threads >= 0) cfg.threads = threads;
    validate(cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "qpspec: %s\n", e.what());
    return usage;
  }
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);

  try {
    if (*scan) return cmd_scan(cfg);
    if (*gaps) return cmd_gaps(cfg, sweep, sweep_k);
    if (*tr) {
      if (!std::isfinite(t)) throw UsageError("--t must be finite");
      return cmd_trace(cfg, t);
    }
    if (*verify) return cmd_verify(cfg, quick, criteria);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "qpspec: %s\n", e.what());
    return usage;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "qpspec: %s\n", e.what());
    return usage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "qpspec: %s\n", e.what());
    return computation;
  }
  return usage;
}
