#pragma once

// Little-endian primitives shared by the binary readers and writers.

#include "aespg/types.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string_view>

namespace aespg::detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> buf{};
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  out.write(buf.data(), 8);
}

inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

/// Tracks the byte offset so format errors can point at the failure.
class ByteReader {
 public:
  explicit ByteReader(std::istream& in) : in_(in) {}

  std::size_t offset() const { return offset_; }

  void read_exact(char* dst, std::size_t n, std::string_view what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError("truncated input while reading " + std::string(what),
                        offset_ + static_cast<std::size_t>(in_.gcount()));
    }
    offset_ += n;
  }

  void expect_magic(std::string_view magic) {
    std::array<char, 16> buf{};
    read_exact(buf.data(), magic.size(), "magic");
    if (std::memcmp(buf.data(), magic.data(), magic.size()) != 0) {
      throw FormatError("bad magic, expected " + std::string(magic), 0);
    }
  }

  std::uint64_t u64(std::string_view what) {
    std::array<unsigned char, 8> buf{};
    read_exact(reinterpret_cast<char*>(buf.data()), 8, what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
    return v;
  }

  /// Big-endian 32-bit, as used by the IDX format.
  std::uint32_t u32_be(std::string_view what) {
    std::array<unsigned char, 4> buf{};
    read_exact(reinterpret_cast<char*>(buf.data()), 4, what);
    return (std::uint32_t{buf[0]} << 24) | (std::uint32_t{buf[1]} << 16) |
           (std::uint32_t{buf[2]} << 8) | std::uint32_t{buf[3]};
  }

  double f64(std::string_view what) { return std::bit_cast<double>(u64(what)); }

 private:
  std::istream& in_;
  std::size_t offset_ = 0;
};

}  // namespace aespg::detail
