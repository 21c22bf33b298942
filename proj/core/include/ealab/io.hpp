#pragma once

#include <string>
#include <string_view>

namespace ealab {

// Writes `content` to a sibling temp file, then renames it over `path`.
// Throws std::runtime_error on failure.
void write_file_atomic(const std::string& path, std::string_view content);

std::string read_file(const std::string& path);

}  // namespace ealab
