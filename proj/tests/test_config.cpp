#include <doctest.h>

#include <cmath>

#include "qpspec/config.hpp"

using namespace qpspec;

TEST_CASE("parse flat key = value with comments") {
  auto c = parse_config("# coupling\nlambda = 12.5   # trailing\n\n  L=300\nt_min = -0.5\nscan_method = uh\n");
  CHECK(c.lambda == 12.5);
  CHECK(c.L == 300);
  CHECK(c.t_min == -0.5);
  CHECK_FALSE(c.t_max);
  CHECK(c.scan_method == "uh");
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("unknown keys and malformed values are rejected") {
  CHECK_THROWS_AS(parse_config("lamda = 5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("lambda = five\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("L = 3.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("just a line\n"), ConfigError);
  RunConfig c;
  CHECK_THROWS_AS(apply_override(c, "L"), ConfigError);
  apply_override(c, " L = 77 ");
  CHECK(c.L == 77);
}

TEST_CASE("validation") {
  RunConfig c;
  CHECK_NOTHROW(validate(c));
  auto bad = [](const char* kv) {
    RunConfig x;
    apply_override(x, kv);
    return x;
  };
  CHECK_THROWS_AS(validate(bad("lambda=-1")), ConfigError);
  CHECK_THROWS_AS(validate(bad("t_step=0")), ConfigError);
  CHECK_THROWS_AS(validate(bad("phase_quorum=1.5")), ConfigError);
  CHECK_THROWS_AS(validate(bad("scan_method=magic")), ConfigError);
  CHECK_THROWS_AS(validate(bad("max_level=13")), ConfigError);
  CHECK_THROWS_AS(validate(bad("alpha=0.5")), ConfigError);
  CHECK_THROWS_AS(validate(bad("alpha=1.5")), ConfigError);
  RunConfig empty;
  empty.t_min = 0.5;
  empty.t_max = 0.2;
  CHECK_THROWS_AS(validate(empty), ConfigError);
}

TEST_CASE("canonical form round-trips and hashes") {
  RunConfig c;
  c.lambda = 7.25;
  c.t_max = 0.3;
  c.alpha = "surd:1,2,1";
  auto back = parse_config(canonical(c));
  CHECK(canonical(back) == canonical(c));
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(c).size() == 16);
  RunConfig d = c;
  d.lambda = 7.26;
  CHECK(config_hash(d) != config_hash(c));
  d = c;
  d.out = "elsewhere";
  d.threads = 3;
  CHECK(config_hash(d) == config_hash(c));
  CHECK(config_keys().size() == 24);
}

TEST_CASE("frequency and potential specs") {
  RunConfig c;
  CHECK(make_frequency(c).value() == doctest::Approx((std::sqrt(5.0) - 1) / 2));
  c.alpha = "silver";
  CHECK(make_frequency(c).value() == doctest::Approx(std::sqrt(2.0) - 1));
  c.alpha = "surd:-1,5,2";
  CHECK(make_frequency(c).value() == doctest::Approx((std::sqrt(5.0) - 1) / 2));
  c.alpha = "0.4142135623730951";
  CHECK(make_frequency(c).value() == doctest::Approx(std::sqrt(2.0) - 1));
  c.alpha = "surd:1,2";
  CHECK_THROWS_AS(make_frequency(c), ConfigError);
  c.potential = "/nonexistent/samples.txt";
  CHECK_THROWS_AS(make_potential(c), ConfigError);
}

TEST_CASE("grid defaults to the spectral window") {
  RunConfig c;
  c.t_step = 0.01;
  auto p = make_params(c);
  auto pot = make_potential(c);
  auto g = t_grid(c, p, pot);
  CHECK(g.front() == doctest::Approx(-1.4));
  CHECK(g.back() == doctest::Approx(1.4));
  c.t_min = 0.1;
  c.t_max = 0.2;
  g = t_grid(c, p, pot);
  CHECK(g.size() == 11);
  auto opt = scan_options(c);
  CHECK(opt.L == c.L);
  CHECK(induction_config(c).kappa == c.kappa);
}
