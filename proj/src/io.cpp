#include "normdescent/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace normdescent::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace {

bool parse_row(const std::string& line, std::vector<double>& out) {
  out.clear();
  const char* p = line.c_str();
  while (true) {
    while (*p == ' ' || *p == '\t') ++p;
    if (*p == '\0') break;
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(p, &end);
    if (end == p || errno == ERANGE) return false;
    out.push_back(v);
    p = end;
    while (*p == ' ' || *p == '\t') ++p;
    if (*p == ',') {
      ++p;
    } else if (*p != '\0') {
      return false;
    }
  }
  return !out.empty();
}

}  // namespace

std::vector<double> parse_row(const std::string& line) {
  std::vector<double> out;
  if (!parse_row(line, out)) {
    throw ValidationError("unparsable CSV row '" + line + "'");
  }
  return out;
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<double> data;
  std::vector<double> row;
  std::size_t cols = 0, rows = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!parse_row(line, row)) {
      if (first) {
        first = false;  // header line, skip
        continue;
      }
      throw ValidationError(path.string() + ": unparsable CSV row '" + line + "'");
    }
    first = false;
    if (cols == 0) cols = row.size();
    if (row.size() != cols)
      throw ValidationError(path.string() + ": ragged CSV row of width " +
                            std::to_string(row.size()));
    data.insert(data.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0) throw ValidationError(path.string() + ": no numeric rows");
  return Matrix(rows, cols, std::move(data));
}

std::string matrix_to_csv(const Matrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

}  // namespace normdescent::io
