#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace domsel {

/// Strips ASCII whitespace (space, tab, CR, LF, VT, FF) from both ends.
std::string_view trim(std::string_view s);

/// Splits on runs of ASCII whitespace; no empty tokens.
std::vector<std::string_view> split_whitespace(std::string_view s);

/// ASCII-only lowercasing; bytes >= 0x80 pass through untouched.
std::string ascii_lower(std::string_view s);

/// Reads a file as LF-separated lines. A trailing newline does not produce an
/// extra empty line; a trailing CR on each line is removed.
std::vector<std::string> read_lines(const std::filesystem::path& path);

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace domsel
