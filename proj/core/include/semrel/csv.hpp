#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace semrel::csv {

// One parsed record and the 1-based physical line it started on.
struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

// RFC-4180 reader: quoted fields may contain commas, doubled quotes and
// newlines. CRLF record terminators are accepted. Throws FormatError on an
// unterminated quote.
std::vector<Record> parse(std::string_view content);

// Quotes a field when it contains a comma, quote, CR or LF.
std::string escape_field(std::string_view field);

std::string format_row(const std::vector<std::string>& fields);

}  // namespace semrel::csv
