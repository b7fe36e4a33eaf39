// SPDX-License-Identifier: Apache-2.0
//
// Small helpers shared by the TSV readers and writers.

#pragma once

#include <charconv>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "topoledger/error.h"

namespace topoledger {

inline void strip_carriage_return(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

// Fields written to TSV must not carry their own separators.
inline void require_tsv_field(std::string_view field, std::string_view module) {
  if (field.find_first_of("\t\r\n") != std::string_view::npos) {
    throw Error(ErrorCode::kMalformed, module,
                "field contains a tab or line break: '" + std::string(field) + "'");
  }
}

inline double parse_double(std::string_view text, std::string_view module,
                           const std::string& where) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw Error(ErrorCode::kMalformed, module,
                where + ": cannot parse number '" + std::string(text) + "'");
  }
  return value;
}

inline std::string format_fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

}  // namespace topoledger
