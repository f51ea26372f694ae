#pragma once

// Artifact writers: CSV tables with a provenance header, JSON gap tables,
// line-oriented JSON induction traces and acceptance reports.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "qpspec/induction.hpp"
#include "qpspec/spectrum.hpp"

namespace qpspec {

struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
};

/// "# config_hash=<hex> seed=<n>" followed by a column-description comment.
void write_csv_preamble(std::ostream& out, const Provenance& prov, const std::string& columns);

/// spectrum.csv: t, E = lambda t, covered (0/1) per grid point.
void write_spectrum_csv(std::ostream& out, const ScanResult& res, double lambda, const Provenance& prov);

/// ids.csv: E, t, ids, error per grid point.
void write_ids_csv(std::ostream& out, const ScanResult& res, double lambda, const Provenance& prov);

/// GapRecord with its field names; infinite endpoints and widths become null.
nlohmann::json to_json(const GapRecord& g);
nlohmann::json gaps_json(const std::vector<GapRecord>& gaps, const Provenance& prov, double lambda);

/// Fixed-width table, widest interior gap first, outer rays last.
void print_gap_table(std::ostream& out, const std::vector<GapRecord>& gaps);

/// One induction level with its measured inequality ratios; NaN becomes null.
nlohmann::json to_json(const CriticalState& s);
nlohmann::json to_json(const GapCertificate& c);

/// One JSON object per line; the certificate of the last state is attached to it.
void write_trace_jsonl(std::ostream& out, const std::vector<CriticalState>& states, const GapCertificate& last_cert,
                       const Provenance& prov);

/// sweep.csv: lambda, found, t_minus, t_plus, width, ids_value, label_k, label_residual.
void write_sweep_csv(std::ostream& out, const SweepReport& rep, const Provenance& prov);
nlohmann::json sweep_json(const SweepReport& rep, const Provenance& prov);

/// Writes text to path, throwing std::runtime_error when the file cannot be written.
void write_file(const std::string& path, const std::string& text);

/// Full-precision decimal form used in every CSV.
std::string format_double(double x);

}  // namespace qpspec
