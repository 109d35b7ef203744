#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "nonlocal/error.hpp"
#include "nonlocal/expr.hpp"

using namespace nonlocal;
using nonlocal::cli::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "nonlocal_test_cli" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

json manifest(const fs::path& dir) { return json::parse(slurp(dir / "manifest.json")); }

struct Outcome {
  int code;
  std::string log;
};

Outcome run(const std::string& sub, const fs::path& config, const fs::path& out, cli::Overrides over = {}) {
  std::ostringstream log;
  const int code = cli::run(sub, config.string(), out.string(), over, log);
  return {code, log.str()};
}

const char* kStable = R"({"spec": {"variant": "stable", "alpha": 0.5}})";

double eval(const std::string& s, double x = 0, double y = 0, double d = 0) {
  return Expression::parse(s, 2).evaluate(point(x, y), d);
}

std::string schema_pointer(const std::string& text) {
  try {
    cli::parse_config(json::parse(text));
  } catch (const SchemaError& e) {
    return e.pointer();
  }
  return "<none>";
}

}  // namespace

TEST_CASE("expression grammar") {
  CHECK(eval("1 + 2 * 3") == 7);
  CHECK(eval("(1 + 2) * 3") == 9);
  CHECK(eval("2 ^ 3 ^ 2") == 512);
  CHECK(eval("-2 ^ 2") == -4);
  CHECK(eval("2 ^ -1") == 0.5);
  CHECK(eval("8 / 4 / 2") == 1);
  CHECK(eval("1 - 2 - 3") == -4);
  CHECK(eval("--1") == 1);
  CHECK(eval("1e-3 * 1000") == doctest::Approx(1));
  CHECK(eval("sin(pi / 2) + cos(0) + exp(0)") == doctest::Approx(3));
  CHECK(eval("x * y - d", 2, 3, 0.5) == doctest::Approx(5.5));
  CHECK(eval("  x^2+y^2 ", 3, 4) == doctest::Approx(25));

  // d binds to the clamped distance to the boundary.
  const Domain I(Interval{-1, 1});
  const Function f = Expression::parse("d", 1).bind(I);
  CHECK(f(point(0.25)) == doctest::Approx(0.75));
  CHECK(f(point(3.0)) == 0);
  CHECK(Expression::parse("d + 1", 1).uses_distance());
  CHECK_FALSE(Expression::parse("x + 1", 1).uses_distance());

  for (const char* bad : {"", "1 +", "(1", "1)", "foo(1)", "sin 1", "2 ** 3", "1 2", "x $ 2"})
    CHECK_THROWS_AS(Expression::parse(bad, 2, "/f"), SchemaError);
  CHECK_THROWS_AS(Expression::parse("y", 1), SchemaError);
  try {
    Expression::parse("x + qq", 1, "/g");
  } catch (const SchemaError& e) {
    CHECK(e.pointer() == "/g");
    CHECK(std::string(e.what()).find("column 5") != std::string::npos);
  }
}

TEST_CASE("spec and domain parsing") {
  CHECK(cli::parse_spec(json::parse(R"({"variant": "stable", "alpha": 0.5})")).is_stable());
  CHECK(cli::parse_spec(json::parse(R"({"variant": "mixture", "terms": [[0.3, 1], [0.6, 1]]})")).has_levy_density());
  const auto sl = cli::parse_spec(json::parse(R"({"variant": "stable_log", "alpha": 0.5, "beta": 0.5})"));
  CHECK(std::holds_alternative<StableLog>(sl.variant()));
  json tab = {{"variant", "tabulated"}, {"points", json::array()}};
  for (int k = -4; k <= 8; ++k) {
    const double l = std::pow(10.0, k);
    tab["points"].push_back({l, std::sqrt(l)});
  }
  CHECK(std::holds_alternative<Tabulated>(cli::parse_spec(tab).variant()));

  CHECK(cli::parse_domain(json::parse(R"({"type": "ball", "center": [0.5], "radius": 2})")).dim() == 1);
  CHECK(cli::parse_domain(json::parse(R"({"type": "ball"})")).dim() == 2);
  CHECK(cli::parse_domain(json::parse(R"({"type": "star", "lobes": 3})")).dim() == 2);
  CHECK(cli::parse_domain(json::parse(R"({"type": "annulus", "inner": 0.25})")).dim() == 2);
}

TEST_CASE("schema errors carry JSON pointers") {
  CHECK(schema_pointer(R"({})") == "/spec");
  CHECK(schema_pointer(R"([1])") == "/");
  CHECK(schema_pointer(R"({"spec": {"variant": "stable"}})") == "/spec/alpha");
  CHECK(schema_pointer(R"({"spec": {"variant": "stable", "alpha": "half"}})") == "/spec/alpha");
  CHECK(schema_pointer(R"({"spec": {"variant": "stable", "alpha": 1.5}})") == "/spec");
  CHECK(schema_pointer(R"({"spec": {"variant": "cauchy"}})") == "/spec/variant");
  CHECK(schema_pointer(R"({"spec": {"variant": "mixture", "terms": [[0.3, 1], [0.6]]}})") == "/spec/terms/1");
  CHECK(schema_pointer(R"({"spec": {"variant": "stable", "alpha": 0.5, "beta": 1}})") == "/spec/beta");
  const std::string s = R"("spec": {"variant": "stable", "alpha": 0.5})";
  CHECK(schema_pointer("{" + s + R"(, "grid": {"hh": 0.1}})") == "/grid/hh");
  CHECK(schema_pointer("{" + s + R"(, "grid": {"h": -1}})") == "/grid/h");
  CHECK(schema_pointer("{" + s + R"(, "seed": 1.5})") == "/seed");
  CHECK(schema_pointer("{" + s + R"(, "f": "y"})") == "/f");
  CHECK(schema_pointer("{" + s + R"(, "domain": {"type": "cube"}})") == "/domain/type");
  CHECK(schema_pointer("{" + s + R"(, "mc": {"x0": [0, 2]}})") == "/mc/x0/1");
  CHECK(schema_pointer("{" + s + R"(, "verify": {"checks": ["barrier", "magic"]}})") == "/verify/checks/1");
  CHECK(schema_pointer("{" + s + R"(, "renewal": "exact"})") == "/renewal");
  CHECK(schema_pointer("{" + s + R"(, "a/b": 1})") == "/a~1b");
}

TEST_CASE("normalised config and hash") {
  const cli::Config c = cli::parse_config(json::parse(kStable));
  CHECK(c.h == 1.0 / 256);
  CHECK(c.verify.checks == cli::all_checks());
  const json n = cli::to_json(c);
  // The normalised form parses back to itself.
  CHECK(cli::to_json(cli::parse_config(n)) == n);
  CHECK(cli::config_hash(n).size() == 16);
  CHECK(cli::config_hash(n) == cli::config_hash(cli::to_json(cli::parse_config(json::parse(kStable)))));
  const cli::Config o = cli::parse_config(json::parse(kStable), {.seed = 9, .grid = 0.125, .tolerance = 1e-6});
  CHECK(o.seed == 9);
  CHECK(o.h == 0.125);
  CHECK(o.tolerance == 1e-6);
  CHECK(cli::config_hash(cli::to_json(o)) != cli::config_hash(n));
  // FNV-1a 64 of the two bytes "{}".
  CHECK(cli::config_hash(json::object()) == "08f44b07b5901a25");
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("exit");
  std::ofstream(dir / "broken.json") << R"({"spec": {"variant": "stable", "alpha": 0.5})";
  const Outcome a = run("solve", dir / "broken.json", dir / "a");
  CHECK(a.code == cli::kSchemaError);
  CHECK(a.log.find("invalid JSON") != std::string::npos);

  const Outcome b = run("solve", write_config(dir, R"({"spec": {"variant": "stable", "alpha": 0.5}, "extra": 1})"),
                        dir / "b");
  CHECK(b.code == cli::kSchemaError);
  CHECK(b.log.find("schema error at /extra") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "b" / "manifest.json"));

  CHECK(run("solve", dir / "missing.json", dir / "c").code == cli::kSchemaError);
  CHECK(run("frobnicate", write_config(dir, kStable), dir / "c").code == cli::kSchemaError);

  // A gated check that fails: the barrier scale band set below 1.
  const Outcome d = run("barrier", write_config(dir, R"({"spec": {"variant": "stable", "alpha": 0.5},
                                                        "barrier": {"max_spread": 0.5}})"),
                        dir / "d");
  CHECK(d.code == cli::kCheckFailed);
  CHECK(manifest(dir / "d")["checks"][0]["verdict"] == "FAIL");
  CHECK(manifest(dir / "d")["verdict"] == "FAIL");

  // Too coarse a grid for the oscillation fits is a numerical failure.
  const Outcome e = run("verify", write_config(dir, R"({"spec": {"variant": "stable", "alpha": 0.5},
                                                       "verify": {"checks": ["regularity"]}})"),
                        dir / "e", {.grid = 0.25});
  CHECK(e.code == cli::kNumericalError);
  CHECK(e.log.find("numerical error") != std::string::npos);

  // exact-stable renewal for a non-stable spec is a configuration error.
  const Outcome f = run("renewal", write_config(dir, R"({"spec": {"variant": "mixture", "terms": [[0.3, 1], [0.6, 1]]},
                                                        "renewal": "exact-stable"})"),
                        dir / "f");
  CHECK(f.code == cli::kSchemaError);
}

TEST_CASE("every subcommand writes its artifacts") {
  const fs::path dir = scratch("subcommands");
  const fs::path cfg = write_config(dir, R"({"spec": {"variant": "stable", "alpha": 0.5},
                                           "grid": {"h": 0.015625}, "mc": {"x0": [0, 0.5], "n_paths": 500}})");
  const std::vector<std::pair<std::string, std::string>> subs{{"kernel", "kernel.csv"},   {"renewal", "renewal.csv"},
                                                              {"barrier", "barrier.csv"}, {"solve", "u.csv"},
                                                              {"mc", "mc.csv"}};
  for (const auto& [sub, csv] : subs) {
    CAPTURE(sub);
    CHECK(run(sub, cfg, dir / sub).code == cli::kOk);
    CHECK(fs::exists(dir / sub / csv));
    const json m = manifest(dir / sub);
    CHECK(m["tool"] == "nonlocal");
    CHECK(m["subcommand"] == sub);
    CHECK(m["config_hash"] == cli::config_hash(m["config"]));
    CHECK(m["brownian_convention"].is_string());
    CHECK(m.contains("runtimes"));
    for (const auto& c : m["checks"]) CHECK(c["verdict"] == "PASS");
  }
  CHECK(slurp(dir / "kernel" / "kernel.csv").rfind("r,j,varphi_profile,P,P1,tail_mass\n", 0) == 0);
  CHECK(slurp(dir / "renewal" / "renewal.csv").rfind("r,V,Vp,Vpp\n", 0) == 0);
  CHECK(slurp(dir / "barrier" / "barrier.csv").rfind("x,d,L\n", 0) == 0);
  CHECK(slurp(dir / "solve" / "u.csv").rfind("x,d_D,u\n", 0) == 0);
  CHECK(slurp(dir / "mc" / "mc.csv").rfind("x,mean,stderr,censor_fraction,n_effective\n", 0) == 0);
  // Two x0 rows in the MC output.
  const std::string mc = slurp(dir / "mc" / "mc.csv");
  CHECK(std::count(mc.begin(), mc.end(), '\n') == 3);
}

TEST_CASE("solve then report") {
  const fs::path dir = scratch("report");
  const fs::path cfg = write_config(dir, R"({"spec": {"variant": "stable", "alpha": 0.5},
                                           "domain": {"type": "ball", "center": [0, 0], "radius": 1},
                                           "grid": {"h": 0.0625}, "f": "-1"})");
  REQUIRE(run("solve", cfg, dir / "solve").code == cli::kOk);
  const json sm = manifest(dir / "solve");
  const double u0 = sm["results"]["u_center"];
  CHECK(u0 == doctest::Approx(2 / 3.14159265358979).epsilon(0.02));
  REQUIRE(run("report", dir / "solve" / "manifest.json", dir / "report").code == cli::kOk);
  const json rm = manifest(dir / "report");
  CHECK(rm["results"]["source_config_hash"] == sm["config_hash"]);
  std::istringstream in(slurp(dir / "report" / "report.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,y,u,u_over_V");
  int rows = 0;
  bool centre = false;
  while (std::getline(in, line)) {
    double x, y, u, q;
    char c;
    std::istringstream ls(line);
    ls >> x >> c >> y >> c >> u >> c >> q;
    const double d = 1 - std::hypot(x, y);
    CHECK(d >= 0.0625 * (1 - 1e-9));
    CHECK(q == doctest::Approx(u / std::sqrt(d)).epsilon(1e-12));
    if (x == 0 && y == 0) centre = (u == u0);
    ++rows;
  }
  CHECK(rows == rm["results"]["rows"].get<int>());
  CHECK(centre);
  // A non-solve manifest is refused.
  run("kernel", cfg, dir / "kernel");
  CHECK(run("report", dir / "kernel" / "manifest.json", dir / "r2").code == cli::kSchemaError);
}

TEST_CASE("verify lists every configured check and is idempotent") {
  const fs::path dir = scratch("verify");
  const fs::path cfg = write_config(dir, R"({"spec": {"variant": "stable", "alpha": 0.5},
      "verify": {"checks": ["char_exponent", "pruitt", "max_principle", "comparison", "mc_crosscheck", "harnack"],
                 "order_trials": 10, "mc_paths": 2000, "harnack_data": 5}})");
  const Outcome a = run("verify", cfg, dir / "a", {.threads = 1});
  const Outcome b = run("verify", cfg, dir / "b", {.threads = 2});
  CHECK(a.code == cli::kOk);
  CHECK(b.code == cli::kOk);
  const json ma = manifest(dir / "a"), mb = manifest(dir / "b");
  std::vector<std::string> names;
  for (const auto& c : ma["checks"]) names.push_back(c["name"]);
  CHECK(names == std::vector<std::string>{"char_exponent", "pruitt", "max_principle", "comparison",
                                          "mc_crosscheck", "harnack"});
  CHECK(cli::stable_part(ma) == cli::stable_part(mb));
  for (const char* csv : {"char_exponent.csv", "max_principle.csv", "comparison.csv", "mc_crosscheck.csv", "harnack.csv"})
    CHECK(slurp(dir / "a" / csv) == slurp(dir / "b" / csv));

  // A different seed moves the Monte Carlo estimate, not the deterministic checks.
  run("verify", cfg, dir / "c", {.seed = 77});
  const json mc = manifest(dir / "c");
  CHECK(mc["config_hash"] != ma["config_hash"]);
  CHECK(mc["checks"][4]["metrics"]["mc"] != ma["checks"][4]["metrics"]["mc"]);
  CHECK(mc["checks"][0]["metrics"] == ma["checks"][0]["metrics"]);
}
