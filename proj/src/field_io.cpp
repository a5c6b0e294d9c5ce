#include "lcs/field_io.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "lcs/error.hpp"

namespace lcs {
namespace {

constexpr std::array<char, 4> kMagic = {'L', 'C', 'S', 'F'};

template <class T>
void put_le(std::ostream& os, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = std::bit_cast<U>(value);
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t k = 0; k < sizeof(T); ++k) bytes[k] = static_cast<char>((bits >> (8 * k)) & 0xFFu);
  os.write(bytes.data(), bytes.size());
}

template <class T>
T get_le(std::istream& is) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  std::array<unsigned char, sizeof(T)> bytes{};
  is.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!is) throw Error("truncated field dump");
  U bits = 0;
  for (std::size_t k = 0; k < sizeof(T); ++k) bits |= static_cast<U>(bytes[k]) << (8 * k);
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_field_binary(const std::filesystem::path& path, const Field& field) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  const auto& g = field.grid();
  os.write(kMagic.data(), kMagic.size());
  os.put(static_cast<char>(g.kind()));
  put_le(os, static_cast<std::uint32_t>(g.n1()));
  put_le(os, static_cast<std::uint32_t>(g.n2()));
  for (double v : field.values()) put_le(os, v);
  if (!os) throw Error("failed writing " + path.string());
}

void write_field_csv(const std::filesystem::path& path, const Field& field) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  const auto& g = field.grid();
  std::fputs(g.kind() == SurfaceKind::Torus ? "x,y,value\n" : "theta,phi,value\n", f);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto p = g.node(k);
    std::fprintf(f, "%.17g,%.17g,%.17g\n", p.a, p.b, field[k]);
  }
  std::fclose(f);
}

FieldDump read_field_dump(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open field dump " + path.string());
  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw Error(path.string() + " is not an LCSF field dump");
  FieldDump d;
  const int kind = is.get();
  if (kind != 0 && kind != 1) throw Error("field dump has unknown surface kind byte");
  d.kind = static_cast<SurfaceKind>(kind);
  d.n1 = get_le<std::uint32_t>(is);
  d.n2 = get_le<std::uint32_t>(is);
  const std::size_t n = static_cast<std::size_t>(d.n1) * d.n2;
  d.values.resize(n);
  for (auto& v : d.values) v = get_le<double>(is);
  return d;
}

Field read_field(const std::filesystem::path& path, const GridPtr& grid) {
  auto d = read_field_dump(path);
  if (d.kind != grid->kind() || d.n1 != static_cast<std::uint32_t>(grid->n1()) ||
      d.n2 != static_cast<std::uint32_t>(grid->n2()))
    throw ConfigError("field dump " + path.string() + " does not match the configured grid");
  return {grid, std::move(d.values)};
}

}  // namespace lcs
