#pragma once

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "tcloak/errors.hpp"
#include "tcloak/field.hpp"
#include "tcloak/wavesolver.hpp"

namespace tcloak {

namespace fs = std::filesystem;

/// Writes `bytes` to `path` through a sibling temp file and a rename, so a
/// reader never sees a partial file.
inline void write_atomic(const fs::path& path, const std::string& bytes) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + path.parent_path().string() + ": " + ec.message());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot rename " + tmp.string() + ": " + ec.message());
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

namespace detail {

/// Shortest text that parses back to the same double.
inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

inline void append(std::string& out, double x) {
  if (std::isnan(x)) {
    out += "nan";
    return;
  }
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  out.append(buf, r.ptr);
}

}  // namespace detail

// ---------------------------------------------------------------- CSV

/// Columns: time, then b{i}_value, b{i}_dudn, b{i}_force per trace node.
template <std::size_t Dim>
std::string trace_csv(const BoundaryTrace<Dim>& trace) {
  std::string s;
  const std::size_t n = trace.node_count();
  s.reserve(trace.times.size() * (n * 3 + 1) * 24);
  s += "time";
  for (std::size_t i = 0; i < n; ++i) {
    const auto b = ",b" + std::to_string(i);
    s += b + "_value" + b + "_dudn" + b + "_force";
  }
  s += '\n';
  for (std::size_t r = 0; r < trace.times.size(); ++r) {
    detail::append(s, trace.times[r]);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = r * n + i;
      s += ',';
      detail::append(s, trace.value[k]);
      s += ',';
      detail::append(s, trace.normal_derivative[k]);
      s += ',';
      detail::append(s, trace.force[k]);
    }
    s += '\n';
  }
  return s;
}

/// Node index, face and coordinates of the trace nodes.
template <std::size_t Dim>
std::string boundary_points_csv(const Grid<Dim>& grid, const BoundaryTrace<Dim>& trace) {
  std::ostringstream s;
  s << "node,face";
  for (std::size_t d = 0; d < Dim; ++d) s << ',' << static_cast<char>('x' + d);
  s << '\n';
  for (std::size_t i = 0; i < trace.nodes.size(); ++i) {
    const auto& node = trace.nodes[i];
    s << i << ',' << node.face.name();
    const auto x = grid.coord(node.flat);
    for (std::size_t d = 0; d < Dim; ++d) s << ',' << detail::fmt(x[d]);
    s << '\n';
  }
  return s.str();
}

/// Every `stride`-th level of the field along the line through the lattice
/// middle in x (for 2D, at the middle row in y). Void cells print as nan.
template <std::size_t Dim>
std::string snapshot_csv(const SpacetimeField<Dim>& field, int stride) {
  const auto& grid = field.grid();
  if (stride <= 0) stride = static_cast<int>(std::max<std::int64_t>(1, grid.levels / 40));
  std::ostringstream s;
  s << "time";
  const double h = grid.h();
  for (int i = 0; i < grid.points; ++i) s << ",x=" << detail::fmt(-grid.L + i * h);
  s << '\n';
  std::array<int, Dim> idx{};
  if constexpr (Dim == 2) idx[1] = grid.points / 2;
  for (std::int64_t k = 0; k < grid.levels; k += stride) {
    s << detail::fmt(grid.time(k));
    for (int i = 0; i < grid.points; ++i) {
      idx[0] = i;
      const auto p = grid.flatten(idx);
      s << ',' << (field.state(k, p) == CellState::Void ? std::string("nan") : detail::fmt(field.at(k, p)));
    }
    s << '\n';
  }
  return s.str();
}

// ---------------------------------------------------------------- binary

/// Layout: "TCLK", u32 version, u32 dim, u32 points, u64 levels, u32 flags
/// (bit 0: mask present), f64 L, f64 t0, f64 dt, then levels*points^dim f64
/// values, then the same count of u8 mask bytes when flagged. Little endian.
inline constexpr std::uint32_t kDumpVersion = 1;

namespace detail {

template <typename T>
void put(std::string& out, T value) {
  static_assert(std::endian::native == std::endian::little, "dump format assumes little endian");
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw Error(ErrorKind::IoError, "truncated field dump");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace detail

template <std::size_t Dim>
std::string encode_field(const SpacetimeField<Dim>& field) {
  const auto& grid = field.grid();
  std::string out = "TCLK";
  detail::put<std::uint32_t>(out, kDumpVersion);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(Dim));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.points));
  detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(grid.levels));
  detail::put<std::uint32_t>(out, field.has_mask() ? 1u : 0u);
  detail::put<double>(out, grid.L);
  detail::put<double>(out, grid.t_first());
  detail::put<double>(out, grid.dt);
  const auto& v = field.values();
  out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  if (field.has_mask()) {
    const auto& m = field.mask();
    out.append(reinterpret_cast<const char*>(m.data()), m.size());
  }
  return out;
}

template <std::size_t Dim>
SpacetimeField<Dim> decode_field(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "TCLK") != 0) {
    throw Error(ErrorKind::IoError, "not a field dump (bad magic)");
  }
  std::size_t pos = 4;
  const auto version = detail::take<std::uint32_t>(bytes, pos);
  require(version == kDumpVersion, ErrorKind::IoError, "unsupported dump version " + std::to_string(version));
  const auto dim = detail::take<std::uint32_t>(bytes, pos);
  require(dim == Dim, ErrorKind::IoError, "dump holds a " + std::to_string(dim) + "D field");
  Grid<Dim> grid;
  grid.points = static_cast<int>(detail::take<std::uint32_t>(bytes, pos));
  grid.levels = static_cast<std::int64_t>(detail::take<std::uint64_t>(bytes, pos));
  const auto flags = detail::take<std::uint32_t>(bytes, pos);
  grid.L = detail::take<double>(bytes, pos);
  const double t0 = detail::take<double>(bytes, pos);
  grid.dt = detail::take<double>(bytes, pos);
  grid.first_step = static_cast<std::int64_t>(std::llround(t0 / grid.dt));
  SpacetimeField<Dim> field(grid);
  auto& v = field.values();
  const std::size_t payload = v.size() * sizeof(double);
  require(pos + payload <= bytes.size(), ErrorKind::IoError, "truncated field dump");
  std::memcpy(v.data(), bytes.data() + pos, payload);
  pos += payload;
  if (flags & 1u) {
    require(pos + v.size() <= bytes.size(), ErrorKind::IoError, "truncated field mask");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (bytes[pos + i] != 0) {
        const auto k = static_cast<std::int64_t>(i / grid.point_count());
        field.set_state(k, i % grid.point_count(), CellState::Void);
      }
    }
    pos += v.size();
  }
  require(pos == bytes.size(), ErrorKind::IoError, "trailing bytes after field dump");
  return field;
}

}  // namespace tcloak
