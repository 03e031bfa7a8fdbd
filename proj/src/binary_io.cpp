#include "mfpod/binary_io.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <vector>

namespace mfpod::io {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian; big-endian hosts need byte swapping");

void write_magic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), std::streamsize(magic.size()));
}

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_f64s(std::ostream& out, std::span<const double> v) {
  out.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size_bytes()));
}

void write_string(std::ostream& out, std::string_view s) {
  write_u32(out, std::uint32_t(s.size()));
  out.write(s.data(), std::streamsize(s.size()));
}

void write_matrix(std::ostream& out, const Matrix& m) {
  write_u32(out, std::uint32_t(m.rows()));
  write_u32(out, std::uint32_t(m.cols()));
  write_f64s(out, std::span<const double>(m.data(), std::size_t(m.size())));
}

void write_matrix_row_major(std::ostream& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_f64(out, m(r, c));
  }
}

void Reader::fail(const std::string& what) const {
  throw Error(ErrorKind::Format, context_ + ": " + what);
}

void Reader::bytes(char* dst, std::size_t n) {
  in_.read(dst, std::streamsize(n));
  if (std::size_t(in_.gcount()) != n) fail("unexpected end of data");
}

void Reader::expect_magic(std::string_view magic) {
  std::string got(magic.size(), '\0');
  bytes(got.data(), got.size());
  if (got != magic) fail("bad magic, expected " + std::string(magic));
}

std::uint32_t Reader::u32() {
  std::uint32_t v;
  bytes(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

double Reader::f64() {
  double v;
  bytes(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void Reader::f64s(std::span<double> out) {
  bytes(reinterpret_cast<char*>(out.data()), out.size_bytes());
}

std::string Reader::string(std::uint32_t max_len) {
  const std::uint32_t len = u32();
  if (len > max_len) fail("string length out of range");
  std::string s(len, '\0');
  bytes(s.data(), len);
  return s;
}

Matrix Reader::matrix() {
  const std::uint32_t rows = u32();
  const std::uint32_t cols = u32();
  // Guard against absurd sizes from corrupt headers before allocating.
  if (std::uint64_t(rows) * cols > (std::uint64_t(1) << 34)) fail("matrix too large");
  Matrix m(rows, cols);
  f64s(std::span<double>(m.data(), std::size_t(m.size())));
  return m;
}

void Reader::matrix_row_major(Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = f64();
  }
}

void Reader::expect_end() {
  if (in_.peek() != std::char_traits<char>::eof()) fail("trailing bytes after payload");
}

}  // namespace mfpod::io
