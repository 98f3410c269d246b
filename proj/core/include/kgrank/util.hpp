#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace kgrank {

std::string trim(std::string_view text);

/// Trims and folds every whitespace run into a single space.
std::string collapse_whitespace(std::string_view text);

std::vector<std::string> split_whitespace(std::string_view text);

/// ASCII lowercase; other bytes pass through untouched.
std::string to_lower(std::string_view text);

std::string sha256_hex(std::string_view data);

std::string read_file(const std::filesystem::path& path);

/// Writes through a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// UTC timestamp, second precision, e.g. 2024-05-01T12:00:00Z.
std::string iso8601_now();

/// Keeps [A-Za-z0-9._-] and maps everything else to '_'.
std::string safe_file_stem(std::string_view id);

}  // namespace kgrank
