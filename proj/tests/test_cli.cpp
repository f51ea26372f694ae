#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "qpspec_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(QPSPEC_CLI) + " " + args + " > " + (kRoot / "stdout.txt").string() + " 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const std::string kSmall = "--set L=200 --set phase_count=4 --set t_step=1e-2";

}  // namespace

TEST_CASE("scan writes csv files and is deterministic") {
  fs::remove_all(kRoot);
  fs::create_directories(kRoot);
  REQUIRE(run("scan " + kSmall + " --out " + (kRoot / "a").string()) == 0);
  REQUIRE(run("scan " + kSmall + " --threads 1 --out " + (kRoot / "b").string()) == 0);
  for (const char* f : {"spectrum.csv", "ids.csv"}) {
    const auto a = slurp(kRoot / "a" / f);
    CHECK(a.rfind("# config_hash=", 0) == 0);
    CHECK(a == slurp(kRoot / "b" / f));
  }
  // 281 grid points plus three header lines
  std::istringstream in(slurp(kRoot / "a" / "spectrum.csv"));
  int n = 0;
  for (std::string l; std::getline(in, l);) ++n;
  CHECK(n == 284);
}

TEST_CASE("config file and overrides") {
  fs::create_directories(kRoot);
  std::ofstream(kRoot / "run.cfg") << "# small run\nlambda = 5\nL = 200\nphase_count = 4\nt_step = 0.01\n";
  CHECK(run("scan --config " + (kRoot / "run.cfg").string() + " --out " + (kRoot / "c").string()) == 0);
  CHECK(slurp(kRoot / "c" / "spectrum.csv") == slurp(kRoot / "a" / "spectrum.csv"));
  CHECK(run("scan --set nosuchkey=1") == 1);
  CHECK(run("scan --set t_min=0.5 --set t_max=0.2") == 1);
  CHECK(run("--config /nonexistent.cfg scan") == 1);
  CHECK(run("") == 1);
  CHECK(run("frobnicate") == 1);
}

TEST_CASE("gaps and weak coupling") {
  REQUIRE(run("gaps " + kSmall + " --out " + (kRoot / "g").string()) == 0);
  auto j = nlohmann::json::parse(slurp(kRoot / "g" / "gaps.json"));
  REQUIRE(j["gaps"].size() >= 3);
  CHECK(std::abs(j["gaps"][0]["label_k"].get<int>()) == 1);
  CHECK(run("gaps --set lambda=0.1 --set L=200 --set phase_count=4 --set t_step=0.05 --out " + (kRoot / "w").string()) == 0);
  CHECK(nlohmann::json::parse(slurp(kRoot / "w" / "gaps.json"))["gaps"].is_array());
  CHECK(run("gaps --lambda-sweep 4:12:4 --set L=200 --set phase_count=4 --set t_step=1e-2 --out " + (kRoot / "s").string()) == 0);
  auto s = nlohmann::json::parse(slurp(kRoot / "s" / "sweep.json"));
  CHECK(s["rows"].size() == 3);
  CHECK(s.contains("max_ids_drift"));
  CHECK(run("gaps --lambda-sweep 4:x:4") == 1);
}

TEST_CASE("trace") {
  CHECK(run("trace --set lambda=50 --t -2 --out " + (kRoot / "t").string()) == 0);
  const auto text = slurp(kRoot / "t" / "trace.jsonl");
  CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  auto j = nlohmann::json::parse(text);
  CHECK(j["case"] == "Case3");
  CHECK(j["k"] == 0);
  CHECK(j["certificate"]["valid"] == true);
  CHECK(run("trace --t abc") == 1);
  CHECK(run("trace") == 1);
  // below the induction coupling threshold
  CHECK(run("trace --set lambda=2 --t 0 --out " + (kRoot / "t2").string()) == 1);
}

TEST_CASE("verify subsets and output errors") {
  CHECK(run("verify --criterion hw --out " + (kRoot / "v").string()) == 0);
  auto j = nlohmann::json::parse(slurp(kRoot / "v" / "verify.json"));
  REQUIRE(j["criteria"].size() == 1);
  CHECK(j["criteria"][0]["name"] == "hw");
  CHECK(j["pass"] == true);
  CHECK(run("verify --criterion nope") == 1);
  std::ofstream(kRoot / "blocker") << "x";
  CHECK(run("scan " + kSmall + " --out " + (kRoot / "blocker" / "sub").string()) == 2);
}
