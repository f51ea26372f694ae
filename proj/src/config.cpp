#include "qpspec/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace qpspec {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0;
  std::size_t used = 0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError("key '" + key + "': not a number: '" + v + "'");
  return x;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& v) {
  Int x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("key '" + key + "': not an integer: '" + v + "'");
  return x;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> f = [] {
    std::vector<std::pair<std::string, Field>> v;
    auto str = [&](const char* k, std::string RunConfig::*m) {
      v.push_back({k, {[m](RunConfig& c, const std::string& s) { c.*m = s; }, [m](const RunConfig& c) { return c.*m; }}});
    };
    auto dbl = [&](const char* k, double RunConfig::*m) {
      v.push_back({k, {[m, k](RunConfig& c, const std::string& s) { c.*m = to_double(k, s); },
                       [m](const RunConfig& c) { return fmt(c.*m); }}});
    };
    auto opt = [&](const char* k, std::optional<double> RunConfig::*m) {
      v.push_back({k, {[m, k](RunConfig& c, const std::string& s) {
                         c.*m = s == "auto" ? std::nullopt : std::optional<double>(to_double(k, s));
                       },
                       [m](const RunConfig& c) { return c.*m ? fmt(*(c.*m)) : std::string("auto"); }}});
    };
    auto integer = [&](const char* k, int RunConfig::*m) {
      v.push_back({k, {[m, k](RunConfig& c, const std::string& s) { c.*m = to_int<int>(k, s); },
                       [m](const RunConfig& c) { return std::to_string(c.*m); }}});
    };
    str("alpha", &RunConfig::alpha);
    str("potential", &RunConfig::potential);
    dbl("lambda", &RunConfig::lambda);
    opt("t_min", &RunConfig::t_min);
    opt("t_max", &RunConfig::t_max);
    dbl("t_step", &RunConfig::t_step);
    integer("L", &RunConfig::L);
    integer("phase_count", &RunConfig::phase_count);
    integer("boxes", &RunConfig::boxes);
    dbl("phase_quorum", &RunConfig::phase_quorum);
    integer("min_gap_cells", &RunConfig::min_gap_cells);
    integer("max_label", &RunConfig::max_label);
    str("scan_method", &RunConfig::scan_method);
    dbl("sigma", &RunConfig::sigma);
    dbl("kappa", &RunConfig::kappa);
    dbl("tau", &RunConfig::tau);
    integer("N", &RunConfig::N);
    integer("points", &RunConfig::points);
    dbl("lambda_min", &RunConfig::lambda_min);
    integer("max_level", &RunConfig::max_level);
    integer("certify_level", &RunConfig::certify_level);
    str("out", &RunConfig::out);
    integer("threads", &RunConfig::threads);
    v.push_back({"seed", {[](RunConfig& c, const std::string& s) { c.seed = to_int<std::uint64_t>("seed", s); },
                          [](const RunConfig& c) { return std::to_string(c.seed); }}});
    return v;
  }();
  return f;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, f] : fields()) k.push_back(name);
    return k;
  }();
  return keys;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& [name, f] : fields())
    if (name == key) return f.set(cfg, value);
  throw ConfigError("unknown config key '" + key + "'");
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  apply_setting(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      apply_override(cfg, line);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(c.lambda > 0, "lambda must be positive");
  require(c.t_step > 0, "t_step must be positive");
  require(!(c.t_min && c.t_max) || *c.t_min < *c.t_max, "t range is empty (t_min >= t_max)");
  require(c.L >= 1 && c.L <= 50000, "L must lie in [1, 50000]");
  require(c.phase_count >= 1, "phase_count must be positive");
  require(c.boxes >= 1 && c.boxes <= c.L, "boxes must lie in [1, L]");
  require(c.phase_quorum > 0 && c.phase_quorum <= 1, "phase_quorum must lie in (0, 1]");
  require(c.min_gap_cells >= 1, "min_gap_cells must be positive");
  require(c.max_label >= 1, "max_label must be positive");
  require(c.scan_method == "cloud" || c.scan_method == "uh", "scan_method must be cloud or uh");
  require(c.sigma > 0 && c.kappa > 0 && c.tau >= 2, "sigma, kappa must be positive and tau >= 2");
  require(c.N >= 1, "N must be positive");
  require(c.points >= 3, "points must be at least 3");
  require(c.lambda_min > 0, "lambda_min must be positive");
  require(c.max_level >= 1 && c.max_level <= 12, "max_level must lie in [1, 12]");
  require(c.certify_level >= 1 && c.certify_level <= 12, "certify_level must lie in [1, 12]");
  require(!c.out.empty(), "out must be a directory path");
  require(c.threads >= 0, "threads must be >= 0");
  make_frequency(c);
}

std::string canonical(const RunConfig& cfg) {
  std::string s;
  for (const auto& [name, f] : fields()) s += name + " = " + f.get(cfg) + "\n";
  return s;
}

std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 14695981039346656037ULL;
  // output location and thread count do not change results
  RunConfig c = cfg;
  c.out = RunConfig{}.out;
  c.threads = 0;
  for (unsigned char ch : canonical(c)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Frequency make_frequency(const RunConfig& cfg) {
  const std::string& a = cfg.alpha;
  if (a == "golden") return golden_mean(40);
  if (a == "silver") return silver_mean(40);
  if (a.rfind("surd:", 0) == 0) {
    std::istringstream in(a.substr(5));
    std::string p, d, q;
    if (!std::getline(in, p, ',') || !std::getline(in, d, ',') || !std::getline(in, q))
      throw ConfigError("alpha surd must read surd:p,d,q");
    QuadraticSurd s{to_int<std::int64_t>("alpha", trim(p)), to_int<std::int64_t>("alpha", trim(d)),
                    to_int<std::int64_t>("alpha", trim(q))};
    try {
      return continued_fraction(s, 40);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("alpha: ") + e.what());
    }
  }
  const double x = to_double("alpha", a);
  if (!(x > 0 && x < 1)) throw ConfigError("alpha must lie in (0, 1)");
  auto f = continued_fraction(x, 40);
  if (f.depth() < 8) throw ConfigError("alpha is too close to a rational (continued fraction depth < 8)");
  return f;
}

Potential make_potential(const RunConfig& cfg) {
  if (cfg.potential == "cosine") return Potential::cosine();
  try {
    return Potential::from_file(cfg.potential);
  } catch (const std::exception& e) {
    throw ConfigError("potential: " + std::string(e.what()));
  }
}

CocycleParams make_params(const RunConfig& cfg) { return {make_frequency(cfg), cfg.lambda, 0}; }

ScanOptions scan_options(const RunConfig& cfg) {
  ScanOptions o;
  o.method = cfg.scan_method == "uh" ? ScanMethod::uh_scan : ScanMethod::finite_volume_cloud;
  o.L = cfg.L;
  o.phase_count = cfg.phase_count;
  o.boxes = cfg.boxes;
  o.phase_quorum = cfg.phase_quorum;
  o.min_gap_cells = cfg.min_gap_cells;
  return o;
}

InductionConfig induction_config(const RunConfig& cfg) {
  InductionConfig ic;
  ic.sigma = cfg.sigma;
  ic.kappa = cfg.kappa;
  ic.tau = cfg.tau;
  ic.N = cfg.N;
  ic.points = cfg.points;
  ic.lambda_min = cfg.lambda_min;
  return ic;
}

std::vector<double> t_grid(const RunConfig& cfg, const CocycleParams& params, const Potential& pot) {
  const Window w = spectral_window(params, pot);
  const double lo = cfg.t_min.value_or(w.lo), hi = cfg.t_max.value_or(w.hi);
  if (!(hi > lo)) throw ConfigError("t range is empty");
  return uniform_grid(lo, hi, cfg.t_step);
}

}  // namespace qpspec
