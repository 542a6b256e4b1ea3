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

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace wssv::eval {

// Minimal RFC 4180 reader: quoted fields, CRLF, blank lines skipped.
// Unquoted fields are trimmed.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

// Strict real parse; `where` prefixes the error message.
double parse_real(const std::string& text, const std::string& where);

std::string csv_escape(const std::string& field);

}  // namespace wssv::eval
