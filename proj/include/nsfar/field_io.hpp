#pragma once

// Flat binary snapshots:
//   char[8] "NSFARFLD" | int64 n | float64 L | float64 time | int64 kind
//   payload: row-major float64, one n*n block per component
// kind 0 = scalar, 1 = vector.  Native (little-endian) byte order.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <string>
#include <variant>

#include "nsfar/errors.hpp"
#include "nsfar/grid.hpp"

namespace nsfar::io {

enum class FieldKind : std::int64_t { scalar = 0, vector = 1 };

inline constexpr char kMagic[8] = {'N', 'S', 'F', 'A', 'R', 'F', 'L', 'D'};

namespace detail {
inline void write_header(std::ofstream& os, const GridSpec& g, double time, FieldKind kind) {
  const std::int64_t n = g.n, k = static_cast<std::int64_t>(kind);
  os.write(kMagic, 8);
  os.write(reinterpret_cast<const char*>(&n), sizeof n);
  os.write(reinterpret_cast<const char*>(&g.L), sizeof g.L);
  os.write(reinterpret_cast<const char*>(&time), sizeof time);
  os.write(reinterpret_cast<const char*>(&k), sizeof k);
}

inline void write_block(std::ofstream& os, const std::vector<double>& v) {
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + p.string());
  return os;
}
} // namespace detail

inline void write_field(const std::filesystem::path& p, const ScalarField& f) {
  auto os = detail::open_out(p);
  detail::write_header(os, f.grid, f.time, FieldKind::scalar);
  detail::write_block(os, f.data);
  if (!os) throw IoError("write failed: " + p.string());
}

inline void write_field(const std::filesystem::path& p, const VectorField& u) {
  auto os = detail::open_out(p);
  detail::write_header(os, u.grid, u.time, FieldKind::vector);
  detail::write_block(os, u.c1);
  detail::write_block(os, u.c2);
  if (!os) throw IoError("write failed: " + p.string());
}

using AnyField = std::variant<ScalarField, VectorField>;

inline AnyField read_field(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw IoError("cannot open field file: " + p.string());
  char magic[8];
  std::int64_t n = 0, kind = 0;
  double L = 0.0, time = 0.0;
  is.read(magic, 8);
  is.read(reinterpret_cast<char*>(&n), sizeof n);
  is.read(reinterpret_cast<char*>(&L), sizeof L);
  is.read(reinterpret_cast<char*>(&time), sizeof time);
  is.read(reinterpret_cast<char*>(&kind), sizeof kind);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) throw IoError("not a field file: " + p.string());
  GridSpec g;
  g.n = static_cast<int>(n);
  g.L = L;
  g.validate();
  auto read_block = [&](std::vector<double>& v) {
    v.resize(g.size());
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!is) throw IoError("truncated field payload: " + p.string());
  };
  if (kind == static_cast<std::int64_t>(FieldKind::scalar)) {
    ScalarField f(g, time);
    read_block(f.data);
    return f;
  }
  if (kind == static_cast<std::int64_t>(FieldKind::vector)) {
    VectorField u(g, time);
    read_block(u.c1);
    read_block(u.c2);
    return u;
  }
  throw IoError("unknown field kind in " + p.string());
}

inline ScalarField read_scalar(const std::filesystem::path& p) {
  auto f = read_field(p);
  if (!std::holds_alternative<ScalarField>(f)) throw IoError("expected scalar field: " + p.string());
  return std::get<ScalarField>(std::move(f));
}

inline VectorField read_vector(const std::filesystem::path& p) {
  auto f = read_field(p);
  if (!std::holds_alternative<VectorField>(f)) throw IoError("expected vector field: " + p.string());
  return std::get<VectorField>(std::move(f));
}

/// CSV for plotting: x1,x2,value (or x1,x2,u1,u2), every `stride`-th node.
inline void write_csv(const std::filesystem::path& p, const ScalarField& f, int stride = 1) {
  auto os = detail::open_out(p);
  os << "x1,x2,value\n" << std::setprecision(17);
  for (int j = 0; j < f.grid.n; j += stride)
    for (int i = 0; i < f.grid.n; i += stride)
      os << f.grid.x(i) << ',' << f.grid.x(j) << ',' << f.at(i, j) << '\n';
}

inline void write_csv(const std::filesystem::path& p, const VectorField& u, int stride = 1) {
  auto os = detail::open_out(p);
  os << "x1,x2,u1,u2\n" << std::setprecision(17);
  const int n = u.grid.n;
  for (int j = 0; j < n; j += stride)
    for (int i = 0; i < n; i += stride) {
      const std::size_t k = static_cast<std::size_t>(j) * n + i;
      os << u.grid.x(i) << ',' << u.grid.x(j) << ',' << u.c1[k] << ',' << u.c2[k] << '\n';
    }
}

} // namespace nsfar::io
