#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gradeforge::csv {

using Row = std::vector<std::string>;

// RFC 4180 subset: LF line endings, fields quoted only when they contain a
// comma, quote or newline.
std::string format_row(const Row& row);
std::string format(const Row& header, const std::vector<Row>& rows);

// Accepts LF or CRLF; skips blank lines. Throws ParseError on an unterminated quote.
std::vector<Row> parse(std::string_view text);

struct Table {
  Row header;
  std::vector<Row> rows;

  // Index of a header column, or throws ParseError naming it.
  std::size_t column(std::string_view name) const;
};

// First row is the header; throws ParseError when empty or when a row's
// width differs from the header's.
Table parse_table(std::string_view text);

}  // namespace gradeforge::csv
