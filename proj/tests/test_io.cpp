#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "infact/io.hpp"

using namespace infact;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "infact_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

}  // namespace

TEST_CASE("doubles format to a round-tripping string") {
  std::mt19937_64 g(5);
  for (int j = 0; j < 2000; ++j) {
    double x;
    const std::uint64_t bits = g();
    std::memcpy(&x, &bits, sizeof x);
    if (!std::isfinite(x)) continue;
    const std::string text = io::format_double(x);
    double back = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), back);
    CHECK(res.ec == std::errc());
    CHECK(back == x);
  }
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(3.0) == "3");
}

TEST_CASE("CSV with and without a header") {
  const auto path = scratch("with_header.csv");
  write_text(path, "a,b,c\n1,2,3\n4.5,-6,7e-3\n");
  const Matrix m = io::read_csv_matrix(path.string());
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == 3);
  CHECK(m(1, 0) == 4.5);
  CHECK(m(1, 2) == 7e-3);

  Matrix r(3, 2);
  r << 0.1, -2.0 / 3.0, 1e-300, 5e10, -0.0, 42.0;
  const auto out = scratch("plain.csv");
  io::write_csv_matrix(out.string(), r);
  CHECK(io::read_csv_matrix(out.string()) == r);
}

TEST_CASE("malformed CSV is rejected") {
  const auto ragged = scratch("ragged.csv");
  write_text(ragged, "1,2,3\n4,5\n");
  CHECK_THROWS_AS(io::read_csv_matrix(ragged.string()), io::FormatError);
  const auto bad = scratch("bad.csv");
  write_text(bad, "1,2\n3,x\n");
  CHECK_THROWS_AS(io::read_csv_matrix(bad.string()), io::FormatError);
  CHECK_THROWS_AS(io::read_csv_matrix(scratch("missing.csv").string()), io::FormatError);
}

TEST_CASE("binary dataset round trip") {
  RngStream rng(6);
  Matrix y(7, 3);
  for (Index j = 0; j < y.size(); ++j) y(j) = draw_normal(rng);
  const Dataset data(y);
  const auto path = scratch("data.ifds");
  io::write_dataset_binary(path.string(), data);
  CHECK(io::read_dataset_binary(path.string()).y() == y);
  CHECK(io::read_dataset(path.string()).y() == y);
  const auto csv = scratch("data.csv");
  io::write_csv_matrix(csv.string(), y);
  CHECK(io::read_dataset(csv.string()).y() == y);

  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  const auto cut = scratch("cut.ifds");
  std::ofstream(cut, std::ios::binary) << bytes.substr(0, bytes.size() - 5);
  CHECK_THROWS_AS(io::read_dataset_binary(cut.string()), io::FormatError);
}

TEST_CASE("binary streams round trip") {
  std::stringstream buf;
  io::BinaryWriter w(buf);
  Matrix m(2, 2);
  m << 1, 2, 3, std::numeric_limits<double>::denorm_min();
  IntVector iv(3);
  iv << 0, -4, 9;
  MatrixX<unsigned char> b(2, 3);
  b << 1, 0, 1, 0, 0, 1;
  w.u64(~0ull);
  w.i64(-17);
  w.f64(-0.0);
  w.str("hello");
  w.vector(Vector{{1.5, -2.5}});
  w.matrix(m);
  w.int_vector(iv);
  w.bytes_matrix(b);
  io::BinaryReader r(buf);
  CHECK(r.u64() == ~0ull);
  CHECK(r.i64() == -17);
  CHECK(std::signbit(r.f64()));
  CHECK(r.str() == "hello");
  CHECK(r.vector() == Vector{{1.5, -2.5}});
  CHECK(r.matrix() == m);
  CHECK(r.int_vector() == iv);
  CHECK(r.bytes_matrix() == b);
  CHECK_THROWS_AS(r.u64(), io::FormatError);
}
