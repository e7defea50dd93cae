#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <string>

#include "chafee/config.hpp"

using namespace chafee;

namespace {

std::vector<std::string> violations_of(const std::string& text) {
  try {
    (void)parse_config(text);
  } catch (const ConfigError& e) {
    CHECK(e.kind() == ErrorKind::Config);
    return e.violations();
  }
  return {};
}

bool any_contains(const std::vector<std::string>& v, const std::string& needle) {
  return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

}  // namespace

TEST_CASE("minimal spectrum config") {
  const auto c = parse_config("command = spectrum\n[grid]\nL = 2pi\nN = 200\n");
  CHECK(c.command == Command::Spectrum);
  CHECK(c.N == 200);
  CHECK(c.L == doctest::Approx(6.283185307179586));
  CHECK(c.potential == "cos3plus1");
}

TEST_CASE("nt, T and dt must agree") {
  const std::string head = "command = simulate\n[grid]\nL = 2pi\nN = 50\n[sweep]\nalpha = 1.2\n[sim]\n";
  const auto v = violations_of(head + "dt = 0.1\nnt = 1000\nT = 200\n");
  REQUIRE(v.size() == 1);
  CHECK(v[0].find("1000") != std::string::npos);
  CHECK(v[0].find("200") != std::string::npos);

  CHECK(parse_config(head + "dt = 0.1\nT = 200\n").sim.nt == 2000);
  CHECK(parse_config(head + "nt = 4000\nT = 200\n").sim.dt == doctest::Approx(0.05));
  CHECK(parse_config(head + "dt = 0.1\nnt = 2000\nT = 200\n").sim.nt == 2000);
}

TEST_CASE("unknown keys are named and all errors are reported together") {
  const auto v = violations_of("command = simulate\n[grid]\nL = -1\nN = 50\nfoo = 3\n[sim]\ndt = 0.1\nnt = 10\nsigma = -1\n[sweep]\nalpha = 1.2\n");
  CHECK(any_contains(v, "grid.foo"));
  CHECK(any_contains(v, "grid.L"));
  CHECK(any_contains(v, "sim.sigma"));
  CHECK(v.size() >= 3);

  CHECK(any_contains(violations_of("[grid]\nL = 1\nN = 5\n"), "command"));
  CHECK(any_contains(violations_of("command = dance\n[grid]\nL = 1\nN = 5\n"), "dance"));
  CHECK(any_contains(violations_of("command = spectrum\n[grid]\nL = 1\nN = 5\n[bogus]\nx = 1\n"), "bogus"));
  CHECK(any_contains(violations_of("command = spectrum\n[grid]\nL = 1\nN = 5\n[potential]\ng = nope\n"), "potential"));
}

TEST_CASE("a full simulate config parses") {
  const std::string text =
      "command = simulate\nseed = 42\n[grid]\nL = 2pi\nN = 200\n[potential]\ng = cos3plus1\n"
      "[noise]\nspec = random:1\nM = 10\nD = 10\n[sim]\nT = 10000\nnt = 100000\nsigma = 0.05\n"
      "[sweep]\nalpha = 1.25\n";
  const auto c = parse_config(text);
  CHECK(c.sim.dt == doctest::Approx(0.1));
  CHECK(c.sim.nt == 100000);
  CHECK(c.sim.sigma == 0.05);
  CHECK(c.noise.M == 10);
  CHECK(c.noise.D == 10);
  REQUIRE(c.sweep.alpha.size() == 1);
  CHECK(c.sweep.alpha[0].resolve(0.0) == 1.25);
  CHECK(c.seed == 42);
  CHECK(parse_config(serialize(c)) == c);
}

TEST_CASE("serialize round-trips every profile") {
  for (const auto& name : profile_names()) {
    CAPTURE(name);
    const auto p = profile(name);
    REQUIRE(p.has_value());
    const std::string once = serialize(*p);
    const auto back = parse_config(once);
    CHECK(back == *p);
    CHECK(serialize(back) == once);
  }
  CHECK_FALSE(profile("fig9").has_value());
}

TEST_CASE("profiles carry the published parameters") {
  const auto f1 = *profile("fig1");
  CHECK(f1.N == 200);
  CHECK(f1.sim.horizon() == doctest::Approx(10000.0));
  CHECK(f1.sim.sigma == 0.05);
  const auto f3 = *profile("fig3");
  CHECK(f3.command == Command::EwsSweep);
  CHECK(f3.sim.horizon() == doctest::Approx(5000.0));
  CHECK(f3.sim.sigma == 0.01);
  CHECK(f3.sweep.ensemble == 10);
  CHECK(f3.sweep.alpha.size() == 5);
  CHECK(profile("fig5")->potential == "linear");
}

TEST_CASE("overrides on top of a base") {
  const auto base = *profile("fig1");
  const auto c = parse_config("[sim]\nsigma = 0.01\n", base);
  CHECK(c.command == Command::Simulate);
  CHECK(c.sim.sigma == 0.01);
  CHECK(c.N == 200);
}

TEST_CASE("alpha tokens") {
  const auto a = AlphaToken::parse("lambda1-0.1");
  REQUIRE(a);
  CHECK(a->relative);
  CHECK(a->resolve(1.0) == doctest::Approx(0.9));
  const auto b = AlphaToken::parse("lambda1+0.05");
  REQUIRE(b);
  CHECK(b->resolve(1.0) == doctest::Approx(1.05));
  CHECK(AlphaToken::parse("lambda1")->resolve(2.5) == 2.5);
  CHECK(AlphaToken::parse("0.75")->resolve(9.0) == 0.75);
  CHECK_FALSE(AlphaToken::parse("lambda2"));
  CHECK_FALSE(AlphaToken::parse("abc"));
  CHECK(parse_command("exit-sweep") == Command::ExitSweep);
  CHECK(to_string(Command::SyncCheck) == "sync-check");
}

TEST_CASE("inline comments after whitespace are ignored") {
  const auto c = parse_config("command = spectrum  ; first\n[grid]\nL = 2pi\t# width\nN = 64 ; points\n");
  CHECK(c.command == Command::Spectrum);
  CHECK(c.N == 64);
  CHECK(c.L == doctest::Approx(6.283185307179586));
}
