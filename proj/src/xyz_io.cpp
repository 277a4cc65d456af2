#include "smoothpc/xyz_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "smoothpc/error.hpp"

namespace smoothpc {

namespace {

std::string location(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

}  // namespace

PointCloud read_xyz(std::istream& in, const std::string& source) {
  std::vector<double> coords;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;

    const char* p = line.data() + first;
    const char* end = line.data() + line.size();
    for (int c = 0; c < 3; ++c) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p < end && *p == '+') ++p;
      double value = 0.0;
      const auto [next, ec] = std::from_chars(p, end, value);
      if (ec != std::errc{} || (next < end && *next != ' ' && *next != '\t')) {
        throw InvalidInput(location(source, line_no) + "expected 3 numeric fields, got '" + line + "'");
      }
      if (!std::isfinite(value)) {
        throw InvalidInput(location(source, line_no) + "non-finite coordinate");
      }
      coords.push_back(value);
      p = next;
    }
    while (p < end && (*p == ' ' || *p == '\t')) ++p;
    if (p != end) {
      throw InvalidInput(location(source, line_no) + "trailing data after 3 fields: '" + line + "'");
    }
  }
  if (coords.empty()) throw InvalidInput(source + ": no points");

  const auto n = static_cast<Eigen::Index>(coords.size() / 3);
  Matrix points(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) points(i, c) = coords[static_cast<std::size_t>(3 * i + c)];
  }
  return PointCloud(std::move(points));
}

PointCloud read_xyz(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_xyz(in, path.string());
}

std::string format_xyz(const PointCloud& cloud) {
  std::string out;
  out.reserve(static_cast<std::size_t>(cloud.size()) * 60);
  char buffer[32];
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, cloud.points()(i, c));
      out.append(buffer, ptr);
      out.push_back(c < 2 ? ' ' : '\n');
    }
  }
  return out;
}

void write_xyz(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << format_xyz(cloud);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<std::filesystem::path> list_xyz_files(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw IoError("not a directory: '" + dir.string() + "'");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xyz") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<PointCloud> read_xyz_dir(const std::filesystem::path& dir) {
  std::vector<PointCloud> clouds;
  for (const auto& file : list_xyz_files(dir)) clouds.push_back(read_xyz(file));
  return clouds;
}

}  // namespace smoothpc
