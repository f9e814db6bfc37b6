#include "binary_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <vector>

#include "kgr/error.hpp"

namespace kgr::io {

namespace {

template <typename T>
std::array<char, sizeof(T)> to_le(T v) {
  std::array<char, sizeof(T)> b{};
  std::memcpy(b.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  return b;
}

template <typename T>
T from_le(std::array<char, sizeof(T)> b) {
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  T v;
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

constexpr std::size_t kMaxString = std::size_t{1} << 30;

}  // namespace

void Writer::bytes(std::string_view b) { out_.write(b.data(), static_cast<std::streamsize>(b.size())); }

void Writer::u32(std::uint32_t v) { out_.write(to_le(v).data(), 4); }

void Writer::u64(std::uint64_t v) { out_.write(to_le(v).data(), 8); }

void Writer::f64(double v) { out_.write(to_le(v).data(), 8); }

void Writer::str(std::string_view s) {
  u64(s.size());
  bytes(s);
}

void Writer::f32_array(std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out_.write(reinterpret_cast<const char*>(values.data()),
               static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (float v : values) out_.write(to_le(v).data(), 4);
  }
}

void Reader::read(char* dst, std::size_t n) {
  in_.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) {
    throw FormatError(stage_, "unexpected end of file");
  }
}

std::string Reader::bytes(std::size_t n) {
  std::string s(n, '\0');
  read(s.data(), n);
  return s;
}

std::uint32_t Reader::u32() {
  std::array<char, 4> b{};
  read(b.data(), 4);
  return from_le<std::uint32_t>(b);
}

std::uint64_t Reader::u64() {
  std::array<char, 8> b{};
  read(b.data(), 8);
  return from_le<std::uint64_t>(b);
}

double Reader::f64() {
  std::array<char, 8> b{};
  read(b.data(), 8);
  return from_le<double>(b);
}

std::string Reader::str() {
  auto n = u64();
  if (n > kMaxString) throw FormatError(stage_, "string length " + std::to_string(n) + " is implausible");
  return bytes(static_cast<std::size_t>(n));
}

void Reader::f32_array(std::span<float> out) {
  read(reinterpret_cast<char*>(out.data()), out.size_bytes());
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& v : out) {
      std::array<char, 4> b{};
      std::memcpy(b.data(), &v, 4);
      v = from_le<float>(b);
    }
  }
}

void Reader::expect_end() {
  if (in_.peek() != std::char_traits<char>::eof()) {
    throw FormatError(stage_, "trailing bytes after payload");
  }
}

}  // namespace kgr::io
