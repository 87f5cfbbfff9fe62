#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace mobprof {

using Json = nlohmann::json;

/// Splits one delimited-text line. Trailing '\r' is stripped; no quoting support.
std::vector<std::string_view> split_fields(std::string_view line, char delimiter = ',');

std::string read_file(const std::filesystem::path& path);
/// Writes atomically enough for a batch tool: parent directories are created first.
void write_file(const std::filesystem::path& path, std::string_view contents);
Json read_json(const std::filesystem::path& path);
/// Pretty-printed with sorted keys and a trailing newline, so output is byte-stable.
void write_json(const std::filesystem::path& path, const Json& value);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Shortest representation that round-trips.
std::string format_double(double v);

bool parse_int(std::string_view text, long long& out);
bool parse_double(std::string_view text, double& out);

}  // namespace mobprof
