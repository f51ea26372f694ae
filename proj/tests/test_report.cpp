#include <doctest.h>

#include <sstream>
#include <string>

#include "qpspec/report.hpp"

using namespace qpspec;

namespace {

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string l;
  while (std::getline(in, l)) out.push_back(l);
  return out;
}

ScanResult small_scan() {
  CocycleParams p{golden_mean(40), 5, 0};
  auto pot = Potential::cosine();
  auto w = spectral_window(p, pot);
  auto grid = uniform_grid(w.lo, w.hi, 1e-2);
  ScanOptions opt;
  opt.L = 200;
  opt.phase_count = 4;
  return scan_and_ids(p, pot, grid, opt);
}

}  // namespace

TEST_CASE("csv files carry provenance, header and one row per grid point") {
  auto res = small_scan();
  Provenance prov{"00112233aabbccdd", 42};
  std::ostringstream s, i;
  write_spectrum_csv(s, res, 5, prov);
  write_ids_csv(i, res, 5, prov);
  auto ls = lines(s.str()), li = lines(i.str());
  CHECK(ls[0] == "# config_hash=00112233aabbccdd seed=42");
  CHECK(ls[2] == "t,E,covered");
  CHECK(li[2] == "E,t,ids,error");
  CHECK(ls.size() == res.scan.t.size() + 3);
  CHECK(li.size() == res.scan.t.size() + 3);
  CHECK(ls[3].rfind("-1.4,-7,", 0) == 0);
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("gap json uses record field names and null for infinities") {
  auto res = small_scan();
  auto gaps = detect_gaps(res.scan, res.ids, golden_mean(40));
  auto j = gaps_json(gaps, {"h", 1}, 5);
  REQUIRE(j["gaps"].size() == gaps.size());
  const auto& below = j["gaps"][gaps.size() - 2];
  CHECK(below["t_minus"].is_null());
  CHECK(below["width"].is_null());
  CHECK(below["outer"] == true);
  for (const char* key : {"t_minus", "t_plus", "width", "ids_value", "rotation", "label_k", "label_residual",
                          "ambiguous", "outer", "certified"})
    CHECK(j["gaps"][0].contains(key));
  auto round = nlohmann::json::parse(j.dump());
  CHECK(round == j);
  std::ostringstream table;
  print_gap_table(table, gaps);
  CHECK(lines(table.str()).size() == gaps.size() + 1);
  std::ostringstream none;
  print_gap_table(none, {});
  CHECK(none.str().find("no gaps") != std::string::npos);
}

TEST_CASE("trace stream: one json object per level, certificate on the last") {
  CocycleParams p{golden_mean(40), 50, 0.36265};
  auto pot = Potential::cosine();
  auto states = trace(p.t, p, pot, 3);
  auto cert = certify_gap(states.back(), p, pot);
  std::ostringstream os;
  write_trace_jsonl(os, states, cert, {"h", 1});
  auto ls = lines(os.str());
  REQUIRE(ls.size() == states.size());
  for (std::size_t i = 0; i < ls.size(); ++i) {
    auto j = nlohmann::json::parse(ls[i]);
    CHECK(j["level"] == states[i].level);
    CHECK(j.contains("ratios"));
    CHECK(j.contains("certificate") == (i + 1 == ls.size()));
  }
  auto last = nlohmann::json::parse(ls.back());
  CHECK(last["case"] == "Case3");
  CHECK(last["certificate"]["valid"] == true);
}

TEST_CASE("sweep tables") {
  SweepReport rep;
  rep.k = 1;
  rep.rows.push_back({4, true, GapRecord{0.1, 0.2, 0.1, 0.618, 0.19, 1, 1e-5, false, false, false}, {}});
  rep.rows.push_back({6, false, {}, {}});
  std::ostringstream os;
  write_sweep_csv(os, rep, {"h", 1});
  auto ls = lines(os.str());
  REQUIRE(ls.size() == 5);
  CHECK(ls[2] == "lambda,found,t_minus,t_plus,width,ids_value,label_k,label_residual");
  CHECK(ls[4] == "6,0,,,,,,");
  auto j = sweep_json(rep, {"h", 1});
  CHECK(j["rows"][1]["gap"].is_null());
  CHECK(j["k"] == 1);
}
