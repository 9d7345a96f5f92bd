// Little-endian binary helpers shared by the table file formats.
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <string_view>

#include "qlag/errors.hpp"

namespace qlag::detail {

template <typename T>
T to_little(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return value;
}

class BinaryWriter {
public:
  explicit BinaryWriter(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw FormatError("cannot open " + path + " for writing");
  }

  void magic(std::string_view m) { out_.write(m.data(), static_cast<std::streamsize>(m.size())); }
  void u8(std::uint8_t v) { raw(v); }
  void u32(std::uint32_t v) { raw(to_little(v)); }
  void f64(double v) { raw(to_little(v)); }

  template <typename It>
  void f64_range(It first, It last) {
    for (; first != last; ++first) f64(*first);
  }

  void finish() {
    out_.flush();
    if (!out_) throw FormatError("write failed");
  }

private:
  template <typename T>
  void raw(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  std::ofstream out_;
};

class BinaryReader {
public:
  explicit BinaryReader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw FormatError("cannot open " + path);
  }

  void expect_magic(std::string_view m) {
    std::string buf(m.size(), '\0');
    in_.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!in_ || buf != m) throw FormatError("bad magic, expected " + std::string(m));
  }
  std::uint8_t u8() { return raw<std::uint8_t>(); }
  std::uint32_t u32() { return to_little(raw<std::uint32_t>()); }
  double f64() { return to_little(raw<double>()); }

  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in table file");
  }

private:
  template <typename T>
  T raw() {
    T v;
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw FormatError("truncated table file");
    return v;
  }
  std::ifstream in_;
};

}  // namespace qlag::detail
