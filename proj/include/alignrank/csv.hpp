// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace alignrank::csv {

using Row = std::vector<std::string>;

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);
double parse_double(std::string_view text);

// RFC 4180 quoting: fields containing a comma, quote or newline are quoted.
void write_row(std::ostream& out, const Row& fields);
std::vector<Row> read_all(std::istream& in);

}  // namespace alignrank::csv
