// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GLITCHSCOPE_CSV_HPP_
#define GLITCHSCOPE_CSV_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace glitchscope::csv {

// Parsed CSV file. Leading lines that start with '#' are comments; those of the
// form "# key: value" are exposed through `meta`.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::map<std::string, std::string> meta;

  int ColumnIndex(const std::string& name) const;  // -1 when absent
};

// RFC 4180 subset: comma separator, double-quoted fields with "" escapes,
// LF or CRLF line ends. Every row must have as many fields as the header.
Table Read(const std::filesystem::path& path);

std::vector<std::string> SplitLine(const std::string& line);

// Shortest decimal text that parses back to the same double.
std::string FormatDouble(double value);

double ParseDouble(const std::string& text, const std::string& context);
long long ParseInt(const std::string& text, const std::string& context);

}  // namespace glitchscope::csv

#endif  // GLITCHSCOPE_CSV_HPP_
