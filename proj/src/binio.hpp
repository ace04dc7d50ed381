#pragma once

// Little-endian primitive readers/writers shared by the binary container
// formats. Byte order is explicit so the files are portable.

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "zsl/error.hpp"

namespace zsl::binio {

inline void put_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!os) throw IoError("write failed");
}

inline void get_bytes(std::istream& is, void* p, std::size_t n,
                      const std::string& what) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (is.gcount() != static_cast<std::streamsize>(n)) {
    throw ValidationError("truncated file while reading " + what);
  }
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  put_bytes(os, b, 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  put_bytes(os, b, 8);
}

inline std::uint32_t get_u32(std::istream& is, const std::string& what) {
  unsigned char b[4];
  get_bytes(is, b, 4, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t get_u64(std::istream& is, const std::string& what) {
  unsigned char b[8];
  get_bytes(is, b, 8, what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void put_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(os, bits);
}

inline float get_f32(std::istream& is, const std::string& what) {
  std::uint32_t bits = get_u32(is, what);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

inline void put_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(os, bits);
}

inline double get_f64(std::istream& is, const std::string& what) {
  std::uint64_t bits = get_u64(is, what);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

inline void put_magic(std::ostream& os, const char magic[4]) {
  put_bytes(os, magic, 4);
}

inline void check_magic(std::istream& is, const char expected[4],
                        const std::string& what) {
  char got[4];
  get_bytes(is, got, 4, what + " magic");
  if (std::memcmp(got, expected, 4) != 0) {
    throw ValidationError("bad magic in " + what + ": expected \"" +
                          std::string(expected, 4) + "\", got \"" +
                          std::string(got, 4) + "\"");
  }
}

}  // namespace zsl::binio
