// Copyright 2026 the partial-id authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "partialid/errors.hpp"

namespace partialid::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // data rows, header excluded
};

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

// Plain comma-separated values with one header row. Lines that are empty or
// start with '#' are skipped. Every data row must have as many fields as the
// header.
inline Table read_file(const std::string& path, bool expect_header = true) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path);
  Table table;
  std::string line;
  std::size_t line_no = 0;
  bool header_done = !expect_header;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto fields = split_line(line);
    if (!header_done) {
      table.header = std::move(fields);
      header_done = true;
      continue;
    }
    if (expect_header && fields.size() != table.header.size()) {
      throw InputError(path + ": row " + std::to_string(line_no) + " has " +
                       std::to_string(fields.size()) + " fields, header has " +
                       std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  return table;
}

inline double parse_double(const std::string& field, const std::string& path,
                           std::size_t row, const std::string& column) {
  try {
    std::size_t pos = 0;
    double v = std::stod(field, &pos);
    if (pos != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw InputError(path + ": row " + std::to_string(row) + ", column '" +
                     column + "': cannot parse '" + field + "' as a number");
  }
}

}  // namespace partialid::csv
