#pragma once

// Run configuration and the `lcs` command-line driver.
//
// Configs are JSON:
//
//   {
//     "surface": {"kind": "torus", "resolution": [64, 64]},
//     "problem": {"rho": ["9*pi", "9*pi"], "h1": "1 + 0.5*cos(2*pi*x)", "h2": "1",
//                 "vortices": [{"p": [0.25, 0.5], "alpha": 1}]},
//     "solver":  {"method": "auto", "init_amplitude": 0.1, "rho_path": [[...], ...], ...},
//     "bubbles": {"atoms": [{"t": 1, "x": [0.5, 0.5]}], "lambdas": [20, 40, 80, 160]},
//     "output_dir": "out",
//     "rng_seed": 1
//   }
//
// Numbers may be given as constant expressions ("9*pi"). A scalar resolution
// n means n x n on the torus and n x 2n on the sphere.
//
// Exit codes: 0 when every contract of the command holds, 1 on numerical
// failure or a missed contract, 2 on configuration errors (including masses
// on the critical set).

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lcs/problem.hpp"

namespace lcs::cli {

struct SurfaceSpec {
  std::string kind = "torus";
  int n1 = 64;
  int n2 = 64;
  friend bool operator==(const SurfaceSpec&, const SurfaceSpec&) = default;
};

struct VortexSpec {
  std::array<double, 2> p{0.0, 0.0};
  double alpha = 0.0;
  friend bool operator==(const VortexSpec&, const VortexSpec&) = default;
};

struct ProblemSpec {
  std::array<double, 2> rho{0.0, 0.0};
  std::string h1 = "1";
  std::string h2 = "1";
  std::vector<VortexSpec> vortices;
  friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;
};

struct SolverSpec {
  /// auto, minimize, newton, continuation or k1.
  std::string method = "auto";
  /// Sup norm of the seeded random initial field(s); 0 starts from zero.
  double init_amplitude = 0.0;
  double inner_tolerance = 1e-10;
  double gradient_tolerance = 1e-8;
  double newton_tolerance = 1e-10;
  double accept_residual = 1e-7;
  std::vector<std::array<double, 2>> rho_path;
  friend bool operator==(const SolverSpec&, const SolverSpec&) = default;
};

struct AtomSpec {
  double t = 1.0;
  std::array<double, 2> x{0.0, 0.0};
  friend bool operator==(const AtomSpec&, const AtomSpec&) = default;
};

struct BubbleSpec {
  std::vector<AtomSpec> atoms;
  std::vector<double> lambdas;
  friend bool operator==(const BubbleSpec&, const BubbleSpec&) = default;
};

struct RunConfig {
  SurfaceSpec surface;
  ProblemSpec problem;
  SolverSpec solver;
  BubbleSpec bubbles;
  std::string output_dir;
  std::uint64_t rng_seed = 0;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Throws ConfigError on malformed input or non-positive tolerances.
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string emit_config(const RunConfig& config);

GridPtr build_grid(const RunConfig& config);
ProblemData build_problem(const RunConfig& config, const GridPtr& grid);

/// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "LCS_OUTPUT_ROOT";

/// Runs the driver on argv-style arguments (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lcs::cli
