#pragma once

#include "coot/apps.hpp"
#include "coot/core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace coot::io {

/// Headerless comma-separated matrix, one row per line.
Matrix read_matrix_csv(const std::string& path);
void write_matrix_csv(const std::string& path, const Matrix& m);

/// Single-column weights file, normalized onto the simplex.
Histogram read_weights_csv(const std::string& path);

/// One integer class per line; -1 marks an unlabeled row.
Labels read_labels_csv(const std::string& path);
void write_labels_csv(const std::string& path, const Labels& labels);

/// Shortest text that round-trips the double (17 significant digits).
std::string format_double(double x);

/// Min-max normalized 8-bit pixels in row-major order; a constant matrix
/// maps to mid-gray 128.
std::vector<std::uint8_t> heatmap_pixels(const Matrix& m);

/// Binary PGM (P5, maxval 255), one pixel per entry.
void export_heatmap(const Matrix& m, const std::string& path);

}  // namespace coot::io
