#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "sen/errors.hpp"

namespace sen::binio {

// Little-endian primitives for the versioned containers ("SENS" sample
// caches, "SENW" checkpoints).

inline void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = (unsigned char)((v >> (8 * i)) & 0xff);
  os.write((const char*)b, 4);
}

inline void put_u64(std::ostream& os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (unsigned char)((v >> (8 * i)) & 0xff);
  os.write((const char*)b, 8);
}

inline void put_i32(std::ostream& os, int32_t v) { put_u32(os, (uint32_t)v); }

inline void put_f64(std::ostream& os, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(os, bits);
}

inline void put_str(std::ostream& os, const std::string& s) {
  put_u32(os, (uint32_t)s.size());
  os.write(s.data(), (std::streamsize)s.size());
}

inline void put_f64s(std::ostream& os, const std::vector<double>& v) {
  put_u64(os, v.size());
  for (double x : v) put_f64(os, x);
}

inline void fail_truncated(const std::string& what) {
  throw DataError("truncated or corrupt file while reading " + what);
}

inline uint32_t get_u32(std::istream& is, const char* what) {
  unsigned char b[4];
  if (!is.read((char*)b, 4)) fail_truncated(what);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= (uint32_t)b[i] << (8 * i);
  return v;
}

inline uint64_t get_u64(std::istream& is, const char* what) {
  unsigned char b[8];
  if (!is.read((char*)b, 8)) fail_truncated(what);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= (uint64_t)b[i] << (8 * i);
  return v;
}

inline int32_t get_i32(std::istream& is, const char* what) { return (int32_t)get_u32(is, what); }

inline double get_f64(std::istream& is, const char* what) {
  const uint64_t bits = get_u64(is, what);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

inline std::string get_str(std::istream& is, const char* what) {
  const uint32_t n = get_u32(is, what);
  if (n > (1u << 20)) fail_truncated(what);
  std::string s((size_t)n, '\0');
  if (n > 0 && !is.read(s.data(), n)) fail_truncated(what);
  return s;
}

inline std::vector<double> get_f64s(std::istream& is, const char* what) {
  const uint64_t n = get_u64(is, what);
  if (n > (1ull << 32)) fail_truncated(what);
  std::vector<double> v((size_t)n);
  for (uint64_t i = 0; i < n; ++i) v[(size_t)i] = get_f64(is, what);
  return v;
}

}  // namespace sen::binio
