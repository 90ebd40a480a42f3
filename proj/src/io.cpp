#include "infact/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace infact::io {
namespace {

constexpr char kDatasetMagic[4] = {'I', 'F', 'D', 'S'};
constexpr std::uint32_t kDatasetVersion = 1;
constexpr std::uint64_t kMaxDimension = 1ull << 32;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\"");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& raw, double& out) {
  const std::string s = trim(raw);
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

Matrix read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    std::vector<double> values(cells.size());
    bool numeric = true;
    for (std::size_t j = 0; j < cells.size(); ++j) numeric = numeric && parse_number(cells[j], values[j]);
    if (!numeric) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw FormatError(path + ":" + std::to_string(line_no) + ": non-numeric value");
    }
    if (!rows.empty() && values.size() != rows.front().size())
      throw FormatError(path + ":" + std::to_string(line_no) + ": ragged row");
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw FormatError(path + ": no data rows");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return m;
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw FormatError("cannot format double");
  return std::string(buf, ptr);
}

void write_csv_matrix(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

void write_dataset_binary(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out.write(kDatasetMagic, 4);
  out.write(reinterpret_cast<const char*>(&kDatasetVersion), sizeof kDatasetVersion);
  BinaryWriter w(out);
  w.u64(static_cast<std::uint64_t>(data.T()));
  w.u64(static_cast<std::uint64_t>(data.p()));
  for (Index t = 0; t < data.T(); ++t)
    for (Index i = 0; i < data.p(); ++i) w.f64(data.y()(t, i));
}

Dataset read_dataset_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  char magic[4];
  std::uint32_t version = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  if (!in || std::memcmp(magic, kDatasetMagic, 4) != 0) throw FormatError(path + ": not a dataset file");
  if (version != kDatasetVersion)
    throw FormatError(path + ": unsupported dataset version " + std::to_string(version));
  BinaryReader r(in);
  const std::uint64_t T = r.u64();
  const std::uint64_t p = r.u64();
  if (T > kMaxDimension || p > kMaxDimension) throw FormatError(path + ": implausible dimensions");
  Matrix y(static_cast<Index>(T), static_cast<Index>(p));
  for (Index t = 0; t < y.rows(); ++t)
    for (Index i = 0; i < y.cols(); ++i) y(t, i) = r.f64();
  return Dataset(std::move(y));
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() == 4 && std::memcmp(magic, kDatasetMagic, 4) == 0) return read_dataset_binary(path);
  return Dataset(read_csv_matrix(path));
}

void BinaryWriter::u64(std::uint64_t v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }
void BinaryWriter::i64(std::int64_t v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }
void BinaryWriter::f64(double v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }

void BinaryWriter::str(const std::string& s) {
  u64(s.size());
  out_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void BinaryWriter::vector(const Vector& v) {
  u64(static_cast<std::uint64_t>(v.size()));
  out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void BinaryWriter::matrix(const Matrix& m) {
  u64(static_cast<std::uint64_t>(m.rows()));
  u64(static_cast<std::uint64_t>(m.cols()));
  out_.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

void BinaryWriter::int_vector(const IntVector& v) {
  u64(static_cast<std::uint64_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) i64(v(i));
}

void BinaryWriter::bytes_matrix(const MatrixX<unsigned char>& m) {
  u64(static_cast<std::uint64_t>(m.rows()));
  u64(static_cast<std::uint64_t>(m.cols()));
  out_.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size()));
}

void BinaryReader::read(void* dst, std::size_t n) {
  in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) throw FormatError("truncated binary stream");
}

std::uint64_t BinaryReader::u64() {
  std::uint64_t v;
  read(&v, sizeof v);
  return v;
}

std::int64_t BinaryReader::i64() {
  std::int64_t v;
  read(&v, sizeof v);
  return v;
}

double BinaryReader::f64() {
  double v;
  read(&v, sizeof v);
  return v;
}

std::string BinaryReader::str() {
  const std::uint64_t n = u64();
  if (n > kMaxDimension) throw FormatError("implausible string length");
  std::string s(n, '\0');
  read(s.data(), n);
  return s;
}

Vector BinaryReader::vector() {
  const std::uint64_t n = u64();
  if (n > kMaxDimension) throw FormatError("implausible vector length");
  Vector v(static_cast<Index>(n));
  read(v.data(), n * sizeof(double));
  return v;
}

Matrix BinaryReader::matrix() {
  const std::uint64_t r = u64();
  const std::uint64_t c = u64();
  if (r > kMaxDimension || c > kMaxDimension) throw FormatError("implausible matrix shape");
  Matrix m(static_cast<Index>(r), static_cast<Index>(c));
  read(m.data(), r * c * sizeof(double));
  return m;
}

IntVector BinaryReader::int_vector() {
  const std::uint64_t n = u64();
  if (n > kMaxDimension) throw FormatError("implausible vector length");
  IntVector v(static_cast<Index>(n));
  for (Index i = 0; i < v.size(); ++i) v(i) = static_cast<int>(i64());
  return v;
}

MatrixX<unsigned char> BinaryReader::bytes_matrix() {
  const std::uint64_t r = u64();
  const std::uint64_t c = u64();
  if (r > kMaxDimension || c > kMaxDimension) throw FormatError("implausible matrix shape");
  MatrixX<unsigned char> m(static_cast<Index>(r), static_cast<Index>(c));
  read(m.data(), r * c);
  return m;
}

}  // namespace infact::io
