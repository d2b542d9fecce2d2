#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lutpower::csv {

// Shortest decimal representation that round-trips binary64 exactly
// (std::to_chars); all trace/model files go through this so reruns and
// serialize/parse cycles are byte- and bit-stable, locale notwithstanding.
std::string format_double(double v);

double parse_double(std::string_view field, const std::string& context);

std::vector<std::string> split_line(std::string_view line);

// Writes `content` to `path` atomically (temp file in the same directory,
// then rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

}  // namespace lutpower::csv
