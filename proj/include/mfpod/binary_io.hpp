#ifndef MFPOD_BINARY_IO_HPP
#define MFPOD_BINARY_IO_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

#include "mfpod/numerics.hpp"

namespace mfpod::io {

// Little-endian primitive encoding shared by all on-disk formats.

void write_magic(std::ostream& out, std::string_view magic);
void write_u32(std::ostream& out, std::uint32_t v);
void write_f64(std::ostream& out, double v);
void write_f64s(std::ostream& out, std::span<const double> v);
void write_string(std::ostream& out, std::string_view s);  // u32 length + bytes
// rows, cols as u32, then values in column-major order
void write_matrix(std::ostream& out, const Matrix& m);
// values in row-major order, no shape prefix
void write_matrix_row_major(std::ostream& out, const Matrix& m);

/// Checked reader: any short read raises ErrorKind::Format naming `context`.
class Reader {
 public:
  Reader(std::istream& in, std::string context) : in_(in), context_(std::move(context)) {}

  void expect_magic(std::string_view magic);
  std::uint32_t u32();
  double f64();
  void f64s(std::span<double> out);
  std::string string(std::uint32_t max_len = 1u << 20);
  Matrix matrix();
  void matrix_row_major(Matrix& m);  // m pre-sized
  void bytes(char* dst, std::size_t n);
  void expect_end();

  [[noreturn]] void fail(const std::string& what) const;

 private:
  std::istream& in_;
  std::string context_;
};

}  // namespace mfpod::io

#endif
