/**
 * @file io.hpp
 * @brief Field snapshots (binary and CSV) and the small text helpers shared
 * by every report writer.
 *
 * Snapshot layout, all integers unsigned 32-bit little-endian:
 *
 *   offset  0  magic "DGFL"
 *   offset  4  version (1)
 *   offset  8  n
 *   offset 12  nx[0..3]   (unused axes are 0; n <= 4)
 *   offset 28  nt
 *   offset 32  nt * prod(nx) doubles, IEEE-754 little-endian, level-major,
 *              axis 0 fastest
 */
#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "degenflow/grid.hpp"

namespace degenflow::io {

inline constexpr std::array<char, 4> kSnapshotMagic{'D', 'G', 'F', 'L'};
inline constexpr std::uint32_t kSnapshotVersion = 1;
inline constexpr int kSnapshotMaxDim = 4;

struct SnapshotHeader {
  std::uint32_t version = kSnapshotVersion;
  std::uint32_t n = 0;
  std::array<std::uint32_t, kSnapshotMaxDim> nx{};
  std::uint32_t nt = 0;
};

namespace detail {

template <class T>
[[nodiscard]] T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::array<unsigned char, sizeof(T)> b{};
    std::memcpy(b.data(), &v, sizeof(T));
    std::reverse(b.begin(), b.end());
    std::memcpy(&v, b.data(), sizeof(T));
    return v;
  }
}

template <class T>
void put(std::string& buf, T v) {
  v = to_little(v);
  const auto* p = reinterpret_cast<const char*>(&v);
  buf.append(p, sizeof(T));
}

template <class T>
[[nodiscard]] T get(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return to_little(v);
}

}  // namespace detail

[[nodiscard]] inline std::string encode_snapshot(const ScalarField& F) {
  const Grid& g = F.grid;
  if (g.n > kSnapshotMaxDim) throw IoError("snapshot: n > 4 is not representable");
  std::string buf;
  buf.reserve(32 + 8 * F.values.size());
  buf.append(kSnapshotMagic.data(), 4);
  detail::put<std::uint32_t>(buf, kSnapshotVersion);
  detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(g.n));
  for (int a = 0; a < kSnapshotMaxDim; ++a)
    detail::put<std::uint32_t>(buf, a < g.n ? static_cast<std::uint32_t>(g.nx[static_cast<std::size_t>(a)]) : 0U);
  detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(g.nt));
  for (double v : F.values) detail::put<double>(buf, v);
  return buf;
}

[[nodiscard]] inline SnapshotHeader decode_header(const std::string& buf) {
  if (buf.size() < 32 || std::memcmp(buf.data(), kSnapshotMagic.data(), 4) != 0)
    throw IoError("snapshot: bad magic");
  SnapshotHeader h;
  h.version = detail::get<std::uint32_t>(buf.data() + 4);
  h.n = detail::get<std::uint32_t>(buf.data() + 8);
  for (int a = 0; a < kSnapshotMaxDim; ++a)
    h.nx[static_cast<std::size_t>(a)] = detail::get<std::uint32_t>(buf.data() + 12 + 4 * a);
  h.nt = detail::get<std::uint32_t>(buf.data() + 28);
  if (h.version != kSnapshotVersion) throw IoError("snapshot: unsupported version");
  if (h.n < 1 || h.n > kSnapshotMaxDim) throw IoError("snapshot: bad dimension");
  return h;
}

/// Decodes a snapshot onto `g`; the header must match g's shape.
[[nodiscard]] inline ScalarField decode_snapshot(const std::string& buf, const Grid& g) {
  const SnapshotHeader h = decode_header(buf);
  if (static_cast<int>(h.n) != g.n || static_cast<int>(h.nt) != g.nt)
    throw IoError("snapshot: shape does not match the configured grid");
  for (int a = 0; a < g.n; ++a)
    if (static_cast<int>(h.nx[static_cast<std::size_t>(a)]) != g.nx[static_cast<std::size_t>(a)])
      throw IoError("snapshot: nx does not match the configured grid");
  const std::size_t count = g.size();
  if (buf.size() != 32 + 8 * count) throw IoError("snapshot: truncated payload");
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i) v[i] = detail::get<double>(buf.data() + 32 + 8 * i);
  return {g, std::move(v)};
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write failed: " + path);
}

[[nodiscard]] inline std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline void write_snapshot(const std::string& path, const ScalarField& F) { write_file(path, encode_snapshot(F)); }

[[nodiscard]] inline ScalarField read_snapshot(const std::string& path, const Grid& g) {
  return decode_snapshot(read_file(path), g);
}

// ---------------------------------------------------------------------------
// Text

/// Shortest round-trippable decimal form; keeps CSV output byte-stable.
/// Shortest text that round-trips to the same double.
[[nodiscard]] inline std::string fmt_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

/// x_1..x_n, t, value per node.
[[nodiscard]] inline std::string field_csv(const ScalarField& F) {
  const Grid& g = F.grid;
  std::ostringstream os;
  for (int a = 0; a < g.n; ++a) os << "x" << (a + 1) << ",";
  os << "t,value\n";
  for (int k = 0; k < g.nt; ++k)
    for (std::size_t i = 0; i < g.space_size(); ++i) {
      const Vec x = g.position(i);
      for (double c : x) os << fmt_double(c) << ",";
      os << fmt_double(g.time(k)) << "," << fmt_double(F.at(k, i)) << "\n";
    }
  return os.str();
}

/// 64-bit FNV-1a, hex encoded.
[[nodiscard]] inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace degenflow::io
