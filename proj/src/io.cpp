#include "bayescond/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "bayescond/errors.hpp"

namespace bayescond {

namespace {

constexpr char kMagic[4] = {'B', 'C', 'N', 'D'};
constexpr std::uint8_t kDtypeF64 = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

void write_bcnd(const std::string& path, const double* data, std::uint8_t ndim,
                std::uint32_t d0, std::uint32_t d1) {
  std::string out;
  out.append(kMagic, 4);
  out.push_back(static_cast<char>(kDtypeF64));
  out.push_back(static_cast<char>(ndim));
  out.push_back(0);
  out.push_back(0);
  put_u32(out, d0);
  put_u32(out, d1);
  const std::size_t n = static_cast<std::size_t>(d0) * d1;
  // Little-endian host assumed; serialize per element to stay explicit.
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &data[i], 8);
    for (int b = 0; b < 8; ++b)
      out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
  }
  write_text_file(path, out);
}

struct Bcnd {
  std::uint8_t ndim = 0;
  std::uint32_t d0 = 0, d1 = 0;
  std::vector<double> data;
};

Bcnd read_bcnd(const std::string& path) {
  const std::string raw = read_text_file(path);
  if (raw.size() < 16 || std::memcmp(raw.data(), kMagic, 4) != 0)
    throw IoError("not a BCND array: " + path);
  if (static_cast<std::uint8_t>(raw[4]) != kDtypeF64)
    throw IoError("unsupported dtype in " + path);
  Bcnd a;
  a.ndim = static_cast<std::uint8_t>(raw[5]);
  a.d0 = get_u32(raw.data() + 8);
  a.d1 = get_u32(raw.data() + 12);
  const std::size_t n = static_cast<std::size_t>(a.d0) * a.d1;
  if (raw.size() != 16 + n * 8) throw IoError("truncated BCND array: " + path);
  a.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<std::uint64_t>(
                  static_cast<unsigned char>(raw[16 + i * 8 + b]))
              << (8 * b);
    std::memcpy(&a.data[i], &bits, 8);
  }
  return a;
}

}  // namespace

void write_array(const std::string& path, const Eigen::VectorXd& v) {
  write_bcnd(path, v.data(), 1, static_cast<std::uint32_t>(v.size()), 1);
}

void write_array(const std::string& path, const Eigen::MatrixXd& m) {
  // Row-major on disk.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  write_bcnd(path, rm.data(), 2, static_cast<std::uint32_t>(m.rows()),
             static_cast<std::uint32_t>(m.cols()));
}

Eigen::VectorXd read_vector(const std::string& path) {
  const Bcnd a = read_bcnd(path);
  if (a.ndim != 1) throw IoError("expected 1-D array in " + path);
  return Eigen::Map<const Eigen::VectorXd>(a.data.data(),
                                           static_cast<Eigen::Index>(a.d0));
}

Eigen::MatrixXd read_matrix(const std::string& path) {
  const Bcnd a = read_bcnd(path);
  if (a.ndim != 2) throw IoError("expected 2-D array in " + path);
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>(
      a.data.data(), static_cast<Eigen::Index>(a.d0),
      static_cast<Eigen::Index>(a.d1));
}

void write_pgm(const std::string& path, const Eigen::MatrixXi& gray,
               const std::string& comment) {
  std::string out = "P2\n";
  if (!comment.empty()) out += "# " + comment + "\n";
  out += std::to_string(gray.cols()) + " " + std::to_string(gray.rows()) + "\n255\n";
  for (Eigen::Index i = 0; i < gray.rows(); ++i) {
    for (Eigen::Index j = 0; j < gray.cols(); ++j) {
      if (j) out += ' ';
      out += std::to_string(std::clamp(gray(i, j), 0, 255));
    }
    out += '\n';
  }
  write_text_file(path, out);
}

CsvWriter::CsvWriter(std::string path) : path_(std::move(path)) {}

void CsvWriter::comment(const std::string& line) { buf_ += "# " + line + "\n"; }

void CsvWriter::header(const std::vector<std::string>& cols) { row(cols); }

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += cells[i];
  }
  buf_ += '\n';
}

void CsvWriter::close() {
  if (closed_) return;
  write_text_file(path_, buf_);
  closed_ = true;
}

std::string CsvWriter::num(double v) {
  char tmp[64];
  std::snprintf(tmp, sizeof(tmp), "%.17g", v);
  return tmp;
}

std::string CsvWriter::num(std::int64_t v) { return std::to_string(v); }

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("short write to " + path);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace bayescond
