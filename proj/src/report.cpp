#include "qpspec/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qpspec {

namespace {

using nlohmann::json;

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json opt_num(const std::optional<double>& x) { return x ? num(*x) : json(nullptr); }

// Ratio a / b, null when b vanishes.
json ratio(double a, double b) { return b != 0 ? num(a / b) : json(nullptr); }

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return ec == std::errc() ? std::string(buf, p) : std::string("nan");
}

void write_csv_preamble(std::ostream& out, const Provenance& prov, const std::string& columns) {
  out << "# config_hash=" << prov.config_hash << " seed=" << prov.seed << "\n";
  out << "# columns: " << columns << "\n";
}

void write_spectrum_csv(std::ostream& out, const ScanResult& res, double lambda, const Provenance& prov) {
  write_csv_preamble(out, prov, "t scaled energy E/lambda; E energy; covered 1 if t lies in the detected spectrum");
  out << "t,E,covered\n";
  for (double t : res.scan.t) out << format_double(t) << ',' << format_double(lambda * t) << ',' << (res.scan.contains(t) ? 1 : 0) << '\n';
}

void write_ids_csv(std::ostream& out, const ScanResult& res, double lambda, const Provenance& prov) {
  write_csv_preamble(out, prov, "E energy; t = E/lambda; ids phase-averaged eigenvalue fraction below E; error half phase spread plus 1/L");
  out << "E,t,ids,error\n";
  const auto& c = res.ids;
  for (std::size_t i = 0; i < c.energies.size(); ++i)
    out << format_double(c.energies[i]) << ',' << format_double(c.energies[i] / lambda) << ',' << format_double(c.values[i])
        << ',' << format_double(c.errors[i]) << '\n';
}

json to_json(const GapRecord& g) {
  return json{{"t_minus", num(g.t_minus)},     {"t_plus", num(g.t_plus)},
              {"width", num(g.width)},         {"ids_value", num(g.ids_value)},
              {"rotation", num(g.rotation)},   {"label_k", g.label_k},
              {"label_residual", num(g.label_residual)}, {"ambiguous", g.ambiguous},
              {"outer", g.outer},              {"certified", g.certified}};
}

json gaps_json(const std::vector<GapRecord>& gaps, const Provenance& prov, double lambda) {
  json arr = json::array();
  for (const auto& g : gaps) arr.push_back(to_json(g));
  return json{{"config_hash", prov.config_hash}, {"seed", prov.seed}, {"lambda", lambda}, {"gaps", arr}};
}

void print_gap_table(std::ostream& out, const std::vector<GapRecord>& gaps) {
  char line[160];
  std::snprintf(line, sizeof line, "%14s %14s %12s %10s %6s %10s %5s %9s\n", "t_minus", "t_plus", "width", "ids", "k",
                "residual", "outer", "certified");
  out << line;
  for (const auto& g : gaps) {
    std::snprintf(line, sizeof line, "%14.9f %14.9f %12.3e %10.6f %6d %10.2e %5s %9s\n", g.t_minus, g.t_plus, g.width,
                  g.ids_value, g.label_k, g.label_residual, g.outer ? "yes" : "no", g.certified ? "yes" : "no");
    out << line;
  }
  if (gaps.empty()) out << "(no gaps resolved)\n";
}

json to_json(const CriticalState& s) {
  const auto& m = s.m;
  json intervals = json::array();
  for (const auto& a : s.intervals) intervals.push_back(json{{"center", num(a.center)}, {"radius", num(a.radius)}});
  return json{
      {"level", s.level},
      {"t", s.t},
      {"case", to_string(s.case_tag)},
      {"k", s.resonance_k ? json(*s.resonance_k) : json(nullptr)},
      {"outside_window", s.outside_window},
      {"degenerate", s.degenerate},
      {"critical", {num(s.critical[0]), num(s.critical[1])}},
      {"secondary", {opt_num(s.secondary[0]), opt_num(s.secondary[1])}},
      {"intervals", intervals},
      {"r_plus", s.r_plus},
      {"r_minus", s.r_minus},
      {"measurements",
       {{"radius", num(m.radius)},
        {"min_angle", num(m.min_angle)},
        {"threshold", num(m.threshold)},
        {"r_min", m.r_min},
        {"r_max", m.r_max},
        {"zero_count", {m.zero_count[0], m.zero_count[1]}},
        {"range", {num(m.range[0]), num(m.range[1])}},
        {"d1_at_zero", {num(m.d1_at_zero[0]), num(m.d1_at_zero[1])}},
        {"dt_min", num(m.dt_min)},
        {"cubic_c", num(m.cubic_c)},
        {"drift", num(m.drift)},
        {"drift_bound", num(m.drift_bound)},
        {"resonance_distance", num(m.resonance_distance)},
        {"best_k", m.best_k}}},
      {"ratios",
       {{"min_angle_over_threshold", ratio(m.min_angle, m.threshold)},
        {"drift_over_bound", ratio(m.drift, m.drift_bound)},
        {"resonance_distance_over_radius", ratio(std::abs(m.resonance_distance), m.radius)}}}};
}

json to_json(const GapCertificate& c) {
  return json{{"t", c.t},         {"level", c.level},        {"k", c.k},
              {"min_angle_gap", num(c.min_angle_gap)}, {"threshold", num(c.threshold)},
              {"uh_rate", num(c.uh_rate)},              {"log_beta", num(c.log_beta)},
              {"gamma", num(c.gamma)},  {"valid", c.valid}};
}

void write_trace_jsonl(std::ostream& out, const std::vector<CriticalState>& states, const GapCertificate& last_cert,
                       const Provenance& prov) {
  for (std::size_t i = 0; i < states.size(); ++i) {
    json j = to_json(states[i]);
    j["config_hash"] = prov.config_hash;
    if (i + 1 == states.size()) j["certificate"] = to_json(last_cert);
    out << j.dump() << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const SweepReport& rep, const Provenance& prov) {
  write_csv_preamble(out, prov,
                     "lambda; found 1 if a gap labeled k was detected; endpoints and width in t; ids_value; label_k; "
                     "label_residual; k = " + std::to_string(rep.k));
  out << "lambda,found,t_minus,t_plus,width,ids_value,label_k,label_residual\n";
  for (const auto& r : rep.rows) {
    out << format_double(r.lambda) << ',' << (r.found ? 1 : 0);
    if (r.found)
      out << ',' << format_double(r.gap.t_minus) << ',' << format_double(r.gap.t_plus) << ',' << format_double(r.gap.width)
          << ',' << format_double(r.gap.ids_value) << ',' << r.gap.label_k << ',' << format_double(r.gap.label_residual);
    else
      out << ",,,,,,";
    out << '\n';
  }
}

json sweep_json(const SweepReport& rep, const Provenance& prov) {
  json rows = json::array();
  for (const auto& r : rep.rows) {
    json gaps = json::array();
    for (const auto& g : r.gaps) gaps.push_back(to_json(g));
    rows.push_back(json{{"lambda", r.lambda},
                        {"found", r.found},
                        {"gap", r.found ? to_json(r.gap) : json(nullptr)},
                        {"gaps", gaps}});
  }
  return json{{"config_hash", prov.config_hash}, {"seed", prov.seed},
              {"k", rep.k},                     {"max_ids_drift", num(rep.max_ids_drift)},
              {"max_edge_jump", num(rep.max_edge_jump)}, {"rows", rows}};
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path);
}

}  // namespace qpspec
