#pragma once

// Minimal RFC-4180 reader/writer. Rows are returned with the 1-based physical
// record number so diagnostics can point at the offending row.

#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "obdaml/error.hpp"

namespace obdaml::csv {

struct Row {
  std::size_t number = 0;  // 1-based; the header is row 1
  std::vector<std::string> fields;
};

inline std::vector<Row> parse(std::string_view text) {
  std::vector<Row> rows;
  Row current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool after_quote = false;
  std::size_t row_number = 1;
  std::size_t i = 0;

  // Strip UTF-8 BOM.
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
    after_quote = false;
  };
  auto end_row = [&] {
    end_field();
    current.number = row_number++;
    // A lone empty field is a blank line; skip it.
    if (!(current.fields.size() == 1 && current.fields[0].empty())) rows.push_back(std::move(current));
    current = Row{};
  };

  for (; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
          after_quote = true;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == ',') {
      end_field();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_row();
    } else if (c == '"') {
      if (field_started || after_quote) {
        throw Error(Errc::MalformedCsv, "row " + std::to_string(row_number) + ", column " +
                                            std::to_string(current.fields.size() + 1) +
                                            ": stray quote inside unquoted field");
      }
      in_quotes = true;
      field_started = true;
    } else {
      if (after_quote) {
        throw Error(Errc::MalformedCsv, "row " + std::to_string(row_number) + ", column " +
                                            std::to_string(current.fields.size() + 1) +
                                            ": characters after closing quote");
      }
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) {
    throw Error(Errc::MalformedCsv, "row " + std::to_string(row_number) + ": unterminated quoted field");
  }
  if (field_started || after_quote || !current.fields.empty()) end_row();
  return rows;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<Row> parse_file(const std::string& path) { return parse(read_file(path)); }

inline std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void write_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << escape(fields[i]);
  }
  os << '\n';
}

/// Header lookup by column name.
class Header {
 public:
  explicit Header(const Row& row) {
    for (std::size_t i = 0; i < row.fields.size(); ++i) index_[row.fields[i]] = i;
  }
  std::optional<std::size_t> find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t require(const std::string& name) const {
    auto idx = find(name);
    if (!idx) throw Error(Errc::MissingColumn, "required column '" + name + "' not found in header");
    return *idx;
  }

 private:
  std::map<std::string, std::size_t> index_;
};

}  // namespace obdaml::csv
