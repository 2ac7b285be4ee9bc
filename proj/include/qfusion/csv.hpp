#pragma once
// Minimal RFC 4180 CSV reading/writing.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace qfusion::csv {

/// Shortest decimal text that reads back to exactly the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

/// Quotes a field when it holds a comma, quote, CR or LF.
std::string escape(std::string_view field);

void write_row(std::ostream& os, const std::vector<std::string>& fields);

/// Reads one record; returns false at end of input. Handles quoted fields
/// with embedded separators, doubled quotes and line breaks.
bool read_row(std::istream& is, std::vector<std::string>& fields);

}  // namespace qfusion::csv
