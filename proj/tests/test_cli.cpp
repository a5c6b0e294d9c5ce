#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "lcs/cli.hpp"
#include "lcs/error.hpp"
#include "lcs/field_io.hpp"

using namespace lcs;
using namespace lcs::cli;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lcs_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config_in.json";
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string out, err;
};

Run lcs_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

const char* kTrivial = R"j({"surface": {"kind": "torus", "resolution": 32},
  "problem": {"rho": ["3*pi", "2*pi"]}, "solver": {"init_amplitude": 0.1}, "rng_seed": 7})j";

const char* kOneVortex = R"j({"surface": {"kind": "torus", "resolution": 64},
  "problem": {"rho": ["9*pi", "9*pi"], "h1": "1 + 0.5*cos(2*pi*x)", "h2": "1 + 0.5*cos(2*pi*x)",
              "vortices": [{"p": [0.25, 0.5], "alpha": 1}]}})j";

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("round trip") {
    const RunConfig c = parse_config(R"j({
      "surface": {"kind": "sphere", "resolution": 24},
      "problem": {"rho": ["9*pi", 30], "h1": "1 + 0.2*sin(x)", "vortices": [{"p": [1, 2], "alpha": "1/2"}]},
      "solver": {"method": "continuation", "rho_path": [["6*pi", "6*pi"], ["9*pi", 30]]},
      "bubbles": {"atoms": [{"t": 0.5, "x": [1, 1]}, {"x": [2, 2]}], "lambdas": [4, 8]},
      "output_dir": "out", "rng_seed": 42})j");
    CHECK(c.surface.n1 == 24);
    CHECK(c.surface.n2 == 48);
    CHECK(c.problem.rho[0] == doctest::Approx(9 * pi).epsilon(1e-15));
    CHECK(c.problem.vortices[0].alpha == 0.5);
    CHECK(c.bubbles.atoms[1].t == 1.0);
    CHECK(parse_config(emit_config(c)) == c);
  }
  SUBCASE("defaults") {
    const RunConfig c = parse_config(R"j({"problem": {"rho": [1, 2]}})j");
    CHECK(c.surface.kind == "torus");
    CHECK(c.solver.method == "auto");
    CHECK(c.solver.accept_residual == 1e-7);
  }
  SUBCASE("rejections") {
    CHECK_THROWS_AS(parse_config("{"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"j({"surface": {"kind": "torus"}})j"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"j({"problem": {"rho": [1, 2]}, "colour": 1})j"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"j({"problem": {"rho": [1, -2]}})j"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"j({"problem": {"rho": [1, 2]}, "solver": {"newton_tolerance": 0}})j"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(R"j({"problem": {"rho": [1, 2]}, "solver": {"method": "magic"}})j"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"j({"problem": {"rho": [1, 2], "h1": "1 +"}})j"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"j({"problem": {"rho": [1, 2]}, "surface": {"kind": "cube"}})j"), ConfigError);
  }
}

TEST_CASE("solve writes a verifiable trivial solution") {
  const fs::path dir = scratch("trivial");
  const fs::path cfg = write_config(dir, kTrivial);
  const Run r = lcs_run({"solve", "--config", cfg.string(), "--out", (dir / "a").string()});
  CHECK(r.code == 0);
  for (const char* f : {"config.json", "report.json", "F.bin", "G.bin", "u1.bin", "u2.bin", "u1.csv"})
    CHECK(fs::exists(dir / "a" / f));
  const auto report = nlohmann::json::parse(slurp(dir / "a" / "report.json"));
  CHECK(report["success"] == true);
  CHECK(report["residual_1"].get<double>() < 1e-12);
  CHECK(read_field_dump(dir / "a" / "u1.bin").values.size() == 32u * 32u);

  SUBCASE("identical configs and seeds give identical bytes") {
    REQUIRE(lcs_run({"solve", "--config", cfg.string(), "--out", (dir / "b").string()}).code == 0);
    for (const char* f : {"report.json", "F.bin", "u2.bin", "G.csv"})
      CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  SUBCASE("seed override") {
    REQUIRE(lcs_run({"solve", "--config", cfg.string(), "--out", (dir / "c").string(), "--seed", "9"}).code == 0);
    CHECK(load_config(dir / "c" / "config.json").rng_seed == 9);
  }
  SUBCASE("a zero start gives a zero residual") {
    const fs::path zero = write_config(dir, R"j({"surface": {"resolution": 32}, "problem": {"rho": ["4*pi", "4*pi"]}})j");
    REQUIRE(lcs_run({"solve", "--config", zero.string(), "--out", (dir / "z").string()}).code == 0);
    const auto z = nlohmann::json::parse(slurp(dir / "z" / "report.json"));
    CHECK(z["residual_1"] == 0.0);
    CHECK(z["residual_2"] == 0.0);
  }
  SUBCASE("verify") {
    const Run v = lcs_run({"verify", "--fields", (dir / "a").string()});
    CHECK(v.code == 0);
    CHECK(v.out.find("PASS") != std::string::npos);
  }
}

TEST_CASE("solve in the k = 1 regime with a vortex") {
  const fs::path dir = scratch("k1");
  const fs::path cfg = write_config(dir, kOneVortex);
  const Run r = lcs_run({"solve", "--config", cfg.string(), "--out", (dir / "a").string()});
  CHECK(r.code == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "a" / "report.json"));
  CHECK(report["method"] == "continuation");
  CHECK(std::max(report["residual_1"].get<double>(), report["residual_2"].get<double>()) < 1e-7);
  const Run v = lcs_run({"verify", "--fields", (dir / "a").string()});
  CHECK(v.code == 0);
}

TEST_CASE("masses on the critical set are configuration errors") {
  const fs::path dir = scratch("critical");
  const fs::path cfg = write_config(dir, R"j({"surface": {"resolution": 16}, "problem": {"rho": ["8*pi", "8*pi"]}})j");
  const Run r = lcs_run({"solve", "--config", cfg.string(), "--out", (dir / "a").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("in critical set") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "a" / "report.json"));
}

TEST_CASE("bad invocations exit with 2") {
  CHECK(lcs_run({}).code == 2);
  CHECK(lcs_run({"frobnicate"}).code == 2);
  CHECK(lcs_run({"solve"}).code == 2);
  CHECK(lcs_run({"solve", "--config", "/nonexistent/config.json"}).code == 2);
  CHECK(lcs_run({"--help"}).code == 0);
}

TEST_CASE("default output root comes from the environment") {
  const fs::path dir = scratch("env");
  const fs::path cfg = write_config(dir, kTrivial);
  ::setenv(kOutputRootEnv, (dir / "root").string().c_str(), 1);
  const Run r = lcs_run({"solve", "--config", cfg.string()});
  ::unsetenv(kOutputRootEnv);
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "root" / "solve" / "report.json"));
}

TEST_CASE("sweep, lambda-map, asymptotics and mtcheck") {
  const fs::path dir = scratch("tables");
  SUBCASE("sweep") {
    const fs::path cfg = write_config(dir, kTrivial);
    const Run r = lcs_run({"sweep", "--config", cfg.string(), "--rho-grid", "2*pi:16*pi:3,2*pi:16*pi:3", "--out",
                           (dir / "sweep").string()});
    CHECK(r.code == 0);
    const std::string csv = slurp(dir / "sweep" / "sweep.csv");
    CHECK(csv.rfind("rho1,rho2,membership,k,status,", 0) == 0);
    CHECK(csv.find(",critical_set,") != std::string::npos);  // (16pi, 16pi)
  }
  SUBCASE("lambda-map") {
    const fs::path out = dir / "map.csv";
    const Run r = lcs_run({"lambda-map", "--window", "8*pi:9*pi:2,8*pi:9*pi:2", "--out", out.string()});
    CHECK(r.code == 0);
    const std::string csv = slurp(out);
    CHECK(csv.find("rho1,rho2,status,k,n,margin\n") == 0);
    CHECK(csv.find(",lambda,") != std::string::npos);
    CHECK(csv.find(",region,1,") != std::string::npos);
    CHECK(lcs_run({"lambda-map", "--window", "0:50*pi:3,0:1:2"}).code == 2);
    // A vortex of strength 1/2 adds the curve n = 3/2 through (12pi, 12pi).
    const fs::path half = dir / "half.csv";
    REQUIRE(lcs_run({"lambda-map", "--window", "12*pi:12*pi:1,12*pi:12*pi:1", "--alphas", "0.5", "--out",
                     half.string()}).code == 0);
    CHECK(slurp(half).find(",lambda,-1,1.5,") != std::string::npos);
  }
  SUBCASE("asymptotics on a coarse torus reports the slopes") {
    const fs::path cfg = write_config(dir, R"j({"surface": {"resolution": 128}, "problem": {"rho": ["6*pi", "6*pi"]},
      "bubbles": {"lambdas": [8, 12, 16, 20]}})j");
    const fs::path out = dir / "asym.csv";
    const Run r = lcs_run({"asymptotics", "--config", cfg.string(), "--out", out.string()});
    CHECK((r.code == 0 || r.code == 1));
    CHECK(r.out.find("slope of D/2") != std::string::npos);
    const std::string csv = slurp(out);
    CHECK(csv.find("lambda,half_dirichlet,log_integral,J_tilde\n") == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  }
  SUBCASE("mtcheck on random fields has no contract") {
    const fs::path cfg = write_config(dir, kTrivial);
    const fs::path out = dir / "mt.csv";
    const Run r = lcs_run({"mtcheck", "--config", cfg.string(), "--family", "random:5:1.5", "--out", out.string()});
    CHECK(r.code == 0);
    const std::string csv = slurp(out);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
    CHECK(lcs_run({"mtcheck", "--config", cfg.string(), "--family", "gaussian:3"}).code == 2);
  }
}
