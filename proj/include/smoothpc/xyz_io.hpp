#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "smoothpc/geometry.hpp"

namespace smoothpc {

// xyz-ascii: one point per line, three floats separated by single spaces,
// '\n' line endings, no header. Readers also accept scientific notation,
// CRLF endings and blank lines.

/// `source` names the stream in error messages ("file:line: ...").
PointCloud read_xyz(std::istream& in, const std::string& source = "<stream>");
PointCloud read_xyz(const std::filesystem::path& path);

/// Shortest round-trip decimal representation of every coordinate.
std::string format_xyz(const PointCloud& cloud);
void write_xyz(const std::filesystem::path& path, const PointCloud& cloud);

/// All `*.xyz` files in `dir`, sorted by filename.
std::vector<std::filesystem::path> list_xyz_files(const std::filesystem::path& dir);
std::vector<PointCloud> read_xyz_dir(const std::filesystem::path& dir);

}  // namespace smoothpc
