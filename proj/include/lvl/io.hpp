#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace lvl::io {

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a partially written output.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string sha256_hex(std::string_view bytes);

}  // namespace lvl::io
