#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace umprobe {

/// Writes `bytes` to a sibling temporary file and renames it over `path`, so
/// readers observe either the old or the new content. Creates parent
/// directories as needed. Throws io on failure.
void atomic_write(const std::filesystem::path &path, std::string_view bytes);

std::string read_file(const std::filesystem::path &path);

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

} // namespace umprobe
