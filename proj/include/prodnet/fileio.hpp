#pragma once

#include <filesystem>
#include <string>

namespace prodnet {

/// Throws DataError when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace prodnet
