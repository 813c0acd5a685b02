#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "normdescent/matrix.hpp"

namespace normdescent::io {

// Shortest text that round-trips the double exactly (%.17g).
std::string format_double(double v);

// Writes to a temp file next to `path`, then renames over it, so readers
// never observe a partial file.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_text(const std::filesystem::path& path);

// Matrix files are plain CSV rows. The reader tolerates one header line.
Matrix read_matrix_csv(const std::filesystem::path& path);
std::string matrix_to_csv(const Matrix& m);

// One comma-separated line of numbers; throws on anything else.
std::vector<double> parse_row(const std::string& line);

}  // namespace normdescent::io
