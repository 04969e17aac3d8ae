#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace qmscat::io {

using json = nlohmann::ordered_json;

/// Raw little-endian float64 blob. Used by every cache format; round-trips
/// bit-exactly.
void write_f64(const std::filesystem::path& path, const double* data,
               std::size_t count);
std::vector<double> read_f64(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

/// Splits one CSV line on commas. No quoting; fields are trimmed.
std::vector<std::string> split_csv_line(const std::string& line);

/// FNV-1a over a canonical string; used for config hashes in reports.
std::uint64_t fnv1a(const std::string& text);
std::string hash_hex(std::uint64_t h);

}  // namespace qmscat::io
