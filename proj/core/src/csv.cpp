#include "gradeforge/csv.hpp"

#include "gradeforge/error.hpp"

namespace gradeforge::csv {

std::string format_row(const Row& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ',';
    const std::string& f = row[i];
    if (f.find_first_of(",\"\n\r") == std::string::npos) {
      out += f;
      continue;
    }
    out += '"';
    for (char ch : f) {
      if (ch == '"') out += '"';
      out += ch;
    }
    out += '"';
  }
  out += '\n';
  return out;
}

std::string format(const Row& header, const std::vector<Row>& rows) {
  std::string out = format_row(header);
  for (const auto& r : rows) out += format_row(r);
  return out;
}

std::vector<Row> parse(std::string_view text) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool quoted = false;
  bool row_has_content = false;
  std::size_t i = 0;
  auto end_row = [&] {
    if (row_has_content || !row.empty()) {
      row.push_back(std::move(field));
      rows.push_back(std::move(row));
    }
    row = {};
    field.clear();
    row_has_content = false;
  };
  while (i < text.size()) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
      row_has_content = true;
    } else if (ch == ',') {
      row.push_back(std::move(field));
      field.clear();
      row_has_content = true;
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_row();
    } else {
      field += ch;
      row_has_content = true;
    }
    ++i;
  }
  if (quoted) throw Error(ErrorKind::ParseError, "unterminated quoted CSV field");
  end_row();
  return rows;
}

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw Error(ErrorKind::ParseError, "missing CSV column '" + std::string(name) + "'");
}

Table parse_table(std::string_view text) {
  auto rows = parse(text);
  if (rows.empty()) throw Error(ErrorKind::ParseError, "empty CSV document");
  Table t;
  t.header = std::move(rows.front());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != t.header.size()) {
      throw Error(ErrorKind::ParseError, "CSV row " + std::to_string(i + 1) + " has " +
                                             std::to_string(rows[i].size()) + " fields, header has " +
                                             std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(rows[i]));
  }
  return t;
}

}  // namespace gradeforge::csv
