#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace bayescond {

// Binary array container: 16-byte header {magic "BCND", dtype u8 (1 = f64),
// ndim u8, reserved u16, dims u32 x 2} followed by row-major little-endian
// doubles.
void write_array(const std::string& path, const Eigen::VectorXd& v);
void write_array(const std::string& path, const Eigen::MatrixXd& m);
Eigen::VectorXd read_vector(const std::string& path);
Eigen::MatrixXd read_matrix(const std::string& path);

// Plain PGM (P2), max gray 255.  Pixel values are clamped to [0, 255].
void write_pgm(const std::string& path, const Eigen::MatrixXi& gray,
               const std::string& comment);

// CSV with '#' metadata comment lines, one header row, LF endings, and
// 17-significant-digit floats, so identical inputs reproduce identical bytes.
class CsvWriter {
 public:
  explicit CsvWriter(std::string path);
  void comment(const std::string& line);
  void header(const std::vector<std::string>& cols);
  void row(const std::vector<std::string>& cells);
  void close();

  static std::string num(double v);
  static std::string num(std::int64_t v);

 private:
  std::string path_;
  std::string buf_;
  bool closed_ = false;
};

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// FNV-1a; used to stamp config hashes into output artifacts.
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace bayescond
