#include "coot/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace coot::io {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& field, const std::string& path, std::size_t line) {
  const std::string t = trim(field);
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) {
    fail(ErrorKind::Io, path + ":" + std::to_string(line) + ": bad number '" + t + "'");
  }
  return x;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  return out;
}

}  // namespace

Matrix read_matrix_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) fail(ErrorKind::Io, path + ": empty matrix file");
  std::vector<std::vector<double>> rows;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    std::vector<double> row;
    std::stringstream ss(lines[ln]);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(parse_double(field, path, ln + 1));
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(ErrorKind::Io, path + ":" + std::to_string(ln + 1) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  if (!m.allFinite()) fail(ErrorKind::Domain, path + ": non-finite entries");
  return m;
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
  auto out = open_out(path);
  std::string line;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    line.clear();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) line += ',';
      line += format_double(m(i, j));
    }
    out << line << '\n';
  }
  if (!out) fail(ErrorKind::Io, "write failed: " + path);
}

Histogram read_weights_csv(const std::string& path) {
  const Matrix m = read_matrix_csv(path);
  if (m.cols() != 1) fail(ErrorKind::Io, path + ": weights file must have a single column");
  std::vector<double> masses(m.data(), m.data() + m.size());
  return Histogram::from_masses(masses);
}

Labels read_labels_csv(const std::string& path) {
  Labels out;
  const auto lines = read_lines(path);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string t = trim(lines[ln]);
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size() || v < -1) {
      fail(ErrorKind::Io, path + ":" + std::to_string(ln + 1) + ": bad label '" + t + "'");
    }
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) fail(ErrorKind::Io, path + ": empty label file");
  return out;
}

void write_labels_csv(const std::string& path, const Labels& labels) {
  auto out = open_out(path);
  for (int y : labels) out << y << '\n';
  if (!out) fail(ErrorKind::Io, "write failed: " + path);
}

std::vector<std::uint8_t> heatmap_pixels(const Matrix& m) {
  check_matrix(m, "heatmap");
  const double lo = m.minCoeff();
  const double hi = m.maxCoeff();
  std::vector<std::uint8_t> px(m.size(), 128);
  if (hi > lo) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        px[i * m.cols() + j] =
            static_cast<std::uint8_t>(std::lround(255.0 * (m(i, j) - lo) / (hi - lo)));
      }
    }
  }
  return px;
}

void export_heatmap(const Matrix& m, const std::string& path) {
  const auto px = heatmap_pixels(m);
  auto out = open_out(path, true);
  out << "P5\n" << m.cols() << ' ' << m.rows() << "\n255\n";
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (!out) fail(ErrorKind::Io, "write failed: " + path);
}

}  // namespace coot::io
