// Sidecar metadata, raw payloads and PNG rasters.
//
// Sidecar files are UTF-8 `key=value` lines. Blank lines and lines starting
// with '#' are ignored. A data set named `scan` is stored as `scan.meta`
// (metadata) next to `scan.raw` (payload); either path may be passed to the
// readers.
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cephforge/core.hpp"

namespace cephforge::io {

using KeyValues = std::map<std::string, std::string>;

KeyValues read_key_values(const std::filesystem::path& path);
void write_key_values(const std::filesystem::path& path, const KeyValues& kv);
KeyValues parse_key_values(const std::string& text);

/// Splits "a,b,c" and parses each field as a double; throws ValidationError on
/// a malformed field or when `expected` is non-zero and the count differs.
std::vector<double> parse_doubles(const std::string& text, std::size_t expected = 0);
std::string format_doubles(std::span<const double> values);

std::filesystem::path meta_path_for(const std::filesystem::path& p);
std::filesystem::path raw_path_for(const std::filesystem::path& p);

std::vector<char> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, std::span<const char> bytes);

/// PNG rasters are stored top row first, which is the highest `v` row in memory,
/// so images display with +Z pointing up.
Gray8 read_png_gray(const std::filesystem::path& path);
void write_png_gray(const std::filesystem::path& path, const Gray8& img);

struct Rgb8 {
    Gray8 r, g, b;
};
Rgb8 read_png_rgb(const std::filesystem::path& path);
void write_png_rgb(const std::filesystem::path& path, const Rgb8& img);

}  // namespace cephforge::io
