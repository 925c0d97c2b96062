// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "glitchscope/csv.hpp"

#include <charconv>
#include <fstream>

#include "glitchscope/error.hpp"

namespace glitchscope::csv {

int Table::ColumnIndex(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<std::string> SplitLine(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

Table Read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open CSV file: " + path.string());
  Table table;
  std::string line;
  bool have_header = false;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header && line_number == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!have_header && !line.empty() && line.front() == '#') {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        auto trim = [](std::string s) {
          const auto first = s.find_first_not_of(" \t#");
          const auto last = s.find_last_not_of(" \t");
          return first == std::string::npos ? std::string() : s.substr(first, last - first + 1);
        };
        table.meta[trim(line.substr(0, colon))] = trim(line.substr(colon + 1));
      }
      continue;
    }
    if (line.empty()) continue;
    auto fields = SplitLine(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw ValidationError(path.string() + ":" + std::to_string(line_number) + ": expected " +
                            std::to_string(table.header.size()) + " fields, got " +
                            std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) throw ValidationError("CSV file has no header row: " + path.string());
  return table;
}

std::string FormatDouble(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

double ParseDouble(const std::string& text, const std::string& context) {
  const auto first = text.find_first_not_of(" \t");
  const auto last = text.find_last_not_of(" \t");
  if (first == std::string::npos) throw ValidationError("empty numeric cell (" + context + ")");
  const char* begin = text.data() + first;
  const char* end = text.data() + last + 1;
  if (*begin == '+') ++begin;
  double value = 0.0;
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc() || result.ptr != end) {
    throw ValidationError("non-numeric cell '" + text + "' (" + context + ")");
  }
  return value;
}

long long ParseInt(const std::string& text, const std::string& context) {
  long long value = 0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw ValidationError("non-integer cell '" + text + "' (" + context + ")");
  }
  return value;
}

}  // namespace glitchscope::csv
