#include <catch2/catch.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "dsmap/runconfig.hpp"

using namespace dsmap;

TEST_CASE("config echo is canonical and hashes deterministically", "[config]") {
  RunConfig a, b;
  REQUIRE(a.echo() == b.echo());
  REQUIRE(a.hash() == b.hash());
  b.digits = 200;
  REQUIRE(a.hash() != b.hash());
}

TEST_CASE("config file parsing with comments and overrides", "[config]") {
  std::string path = "test_config_tmp.txt";
  {
    std::ofstream os(path);
    os << "# comment line\n";
    os << "digits = 120\n";
    os << "order=55   # trailing comment\n";
    os << "probe = theta:0.25\n";
    os << "pade_degrees = 40,50\n";
  }
  RunConfig cfg;
  cfg.load_file(path);
  std::remove(path.c_str());
  REQUIRE(cfg.digits == 120);
  REQUIRE(cfg.order == 55);
  REQUIRE(cfg.probe == "theta:0.25");
  REQUIRE(cfg.pade_degrees == std::vector<int>{40, 50});
}

TEST_CASE("config rejects unknown keys and bad values", "[config]") {
  RunConfig cfg;
  REQUIRE_THROWS_AS(cfg.set_key("no_such_key", "1"), Error);
  REQUIRE_THROWS_AS(cfg.set_key("digits", "many"), Error);
}

TEST_CASE("config validation catches out-of-range fields", "[config]") {
  RunConfig cfg;
  cfg.digits = 10;  // below the supported floor
  REQUIRE_THROWS_AS(cfg.validate(), Error);
  cfg.digits = 100;
  cfg.newton_grid = 300;  // not a power of two
  REQUIRE_THROWS_AS(cfg.validate(), Error);
  cfg.newton_grid = 512;
  cfg.loop_steps = 4;
  REQUIRE_THROWS_AS(cfg.validate(), Error);
  cfg.loop_steps = 64;
  REQUIRE_NOTHROW(cfg.validate());
}

TEST_CASE("double-list parsing", "[config]") {
  auto v = parse_double_list("0.5,0.1,0.01");
  REQUIRE(v.size() == 3);
  REQUIRE(v[2] == 0.01);
  REQUIRE(parse_double_list("").empty());
}

TEST_CASE("decimal strings round trip at full precision", "[config]") {
  real_traits<mpreal>::set_working_digits(150);
  mpreal x = sqrt(mpreal(7)) / 3;
  std::string s = real_traits<mpreal>::to_string(x);
  mpreal y = real_traits<mpreal>::from_string(s);
  REQUIRE(x == y);

  double d = 0.1234567890123456789;
  REQUIRE(real_traits<double>::from_string(real_traits<double>::to_string(d)) == d);
}
