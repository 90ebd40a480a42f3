#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "infact/factor_model.hpp"

namespace infact::io {

/// Raised on malformed files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads a numeric CSV; a first row that does not parse as numbers is taken
/// as a header and skipped.
Matrix read_csv_matrix(const std::string& path);
void write_csv_matrix(const std::string& path, const Matrix& m);

/// Binary dataset layout (little endian): magic "IFDS", u32 version, u64 T,
/// u64 p, then T*p doubles in row-major order.
void write_dataset_binary(const std::string& path, const Dataset& data);
Dataset read_dataset_binary(const std::string& path);

/// Dispatches on the file's leading bytes: binary magic or CSV text.
Dataset read_dataset(const std::string& path);

/// Formats a double so that it parses back to the identical value.
std::string format_double(double x);

// Minimal tagged binary streams for checkpoints.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}
  void u64(std::uint64_t v);
  void i64(std::int64_t v);
  void f64(double v);
  void str(const std::string& s);
  void vector(const Vector& v);
  void matrix(const Matrix& m);
  void int_vector(const IntVector& v);
  void bytes_matrix(const MatrixX<unsigned char>& m);

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}
  std::uint64_t u64();
  std::int64_t i64();
  double f64();
  std::string str();
  Vector vector();
  Matrix matrix();
  IntVector int_vector();
  MatrixX<unsigned char> bytes_matrix();

 private:
  void read(void* dst, std::size_t n);
  std::istream& in_;
};

}  // namespace infact::io
