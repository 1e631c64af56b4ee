#pragma once

#include <istream>
#include <string>
#include <vector>

namespace sisvive::csv {

using Row = std::vector<std::string>;

/// Splits RFC-4180 records: quoted fields, doubled quotes, embedded
/// separators and line breaks inside quotes. Accepts CRLF or LF.
/// Throws sisvive::Error(kMalformedCsv) on an unterminated quote.
std::vector<Row> parse(std::istream& in, char sep = ',');

/// Quotes a field when it contains the separator, a quote or a line break.
std::string escape(const std::string& field, char sep = ',');

}  // namespace sisvive::csv
