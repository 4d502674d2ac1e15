#pragma once

// Little-endian binary file helpers shared by the pilot and equalizer
// container formats. Private to the library sources.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "semeq/errors.hpp"

namespace semeq::binio {

class Writer {
 public:
  explicit Writer(const std::string& path) : path_(path), f_(path, std::ios::binary) {
    if (!f_) throw IoError(path, "cannot open for writing");
  }
  void raw(const void* p, std::size_t n) {
    f_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!f_) throw IoError(path_, "write failed");
  }
  void magic(const char* m) { raw(m, 8); }
  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    raw(b, 4);
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    raw(b, 8);
  }
  void f64(double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    u64(u);
  }
  void f64_array(const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) f64(p[i]);
  }
  void u8(std::uint8_t v) { raw(&v, 1); }

 private:
  std::string path_;
  std::ofstream f_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path), f_(path, std::ios::binary) {
    if (!f_) throw IoError(path, "cannot open for reading");
  }
  const std::string& path() const { return path_; }
  void raw(void* p, std::size_t n) {
    f_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (f_.gcount() != static_cast<std::streamsize>(n))
      throw IoError(path_, "truncated file");
  }
  void expect_magic(const char* m) {
    char got[9] = {0};
    raw(got, 8);
    if (std::memcmp(got, m, 8) != 0)
      throw IoError(path_, std::string("magic mismatch: expected ") + m);
  }
  std::uint32_t u32() {
    unsigned char b[4];
    raw(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    unsigned char b[8];
    raw(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() {
    const std::uint64_t u = u64();
    double v;
    std::memcpy(&v, &u, 8);
    return v;
  }
  void f64_array(double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) p[i] = f64();
  }
  std::uint8_t u8() {
    std::uint8_t v;
    raw(&v, 1);
    return v;
  }
  void expect_version(std::uint32_t want) {
    const std::uint32_t got = u32();
    if (got != want)
      throw IoError(path_, "unsupported version " + std::to_string(got));
  }

 private:
  std::string path_;
  std::ifstream f_;
};

}  // namespace semeq::binio
