// Copyright 2026 The WSSV Surveillance Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "eval/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>

#include "common/error.hpp"

namespace wssv::eval {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, in_quotes = false, any = false;
  std::size_t line = 1;

  auto end_field = [&] {
    row.push_back(quoted ? field : trim(field));
    field.clear();
    quoted = false;
  };
  auto end_row = [&] {
    end_field();
    if (any) rows.push_back(std::move(row));
    row.clear();
    any = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!trim(field).empty()) fail(ErrorCode::kInput, "csv line " + std::to_string(line) + ": stray quote");
        field.clear();
        quoted = in_quotes = any = true;
        break;
      case ',': end_field(); any = true; break;
      case '\r': break;
      case '\n': end_row(); ++line; break;
      default:
        if (quoted) fail(ErrorCode::kInput, "csv line " + std::to_string(line) + ": text after closing quote");
        if (c != ' ' && c != '\t') any = true;
        field.push_back(c);
    }
  }
  if (in_quotes) fail(ErrorCode::kInput, "csv: unterminated quoted field");
  end_row();
  return rows;
}

double parse_real(const std::string& text, const std::string& where) {
  if (text.empty()) fail(ErrorCode::kInput, where + ": empty number");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(v)) {
    fail(ErrorCode::kInput, where + ": not a finite number: '" + text + "'");
  }
  return v;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace wssv::eval
