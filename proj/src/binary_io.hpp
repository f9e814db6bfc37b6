#pragma once

// Little-endian primitive encoding shared by the index and vector files.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>

namespace kgr::io {

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void bytes(std::string_view b);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void str(std::string_view s);  // u64 length + bytes
  void f32_array(std::span<const float> values);

 private:
  std::ostream& out_;
};

/// Throws FormatError(stage, ...) on short reads.
class Reader {
 public:
  Reader(std::istream& in, std::string stage) : in_(in), stage_(std::move(stage)) {}

  std::string bytes(std::size_t n);
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string str();
  void f32_array(std::span<float> out);
  /// Throws unless the stream is at end-of-file.
  void expect_end();

 private:
  void read(char* dst, std::size_t n);

  std::istream& in_;
  std::string stage_;
};

}  // namespace kgr::io
