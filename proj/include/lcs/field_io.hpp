#pragma once

// Field dump formats shared with the plotting side.
//
// Binary (little-endian):
//   bytes 0-3   magic "LCSF"
//   byte  4     surface kind (0 torus, 1 sphere)
//   bytes 5-8   uint32 n1
//   bytes 9-12  uint32 n2
//   then n1*n2 float64 values, row-major (index i * n2 + j)
//
// CSV: header "x,y,value" (torus) or "theta,phi,value" (sphere), one node per
// row in the same order, values printed with 17 significant digits.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lcs/surface.hpp"

namespace lcs {

struct FieldDump {
  SurfaceKind kind = SurfaceKind::Torus;
  std::uint32_t n1 = 0;
  std::uint32_t n2 = 0;
  std::vector<double> values;
};

void write_field_binary(const std::filesystem::path& path, const Field& field);
void write_field_csv(const std::filesystem::path& path, const Field& field);

FieldDump read_field_dump(const std::filesystem::path& path);
/// Reads a dump and checks that it matches the grid's kind and resolution.
Field read_field(const std::filesystem::path& path, const GridPtr& grid);

}  // namespace lcs
