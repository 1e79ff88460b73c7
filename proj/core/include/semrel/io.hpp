#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace semrel::io {

// Whole-file read; throws NotFound when the file does not exist.
std::string read_file(const std::filesystem::path& path);

// Writes via a sibling temporary, fsyncs it and renames it over `path`, so a
// reader never observes a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Shortest text form that parses back to the identical double.
std::string format_double(double value);
// Strict parse of the whole string; std::nullopt on junk or non-finite values.
std::optional<double> parse_double(std::string_view text);

}  // namespace semrel::io

namespace semrel::io {

// Current time as ISO-8601 UTC with second precision ("2024-03-01T12:00:00Z").
// SOURCE_DATE_EPOCH, when set, replaces the clock so reruns are reproducible.
std::string utc_timestamp_now();
std::string format_utc_timestamp(long long seconds_since_epoch);

}  // namespace semrel::io
