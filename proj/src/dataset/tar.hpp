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

#include <cstdint>
#include <string>
#include <vector>

namespace wssv::dataset {

struct TarEntry {
  std::string name;  // at most 100 bytes
  std::vector<std::uint8_t> data;
  std::int64_t mtime = 0;  // seconds since epoch
};

// POSIX ustar, regular files only, mode 0644, uid/gid 0, empty user and
// group names. Entries are written in the given order; the output depends
// only on the entries.
std::vector<std::uint8_t> write_tar(const std::vector<TarEntry>& entries);

// Reads what write_tar produces (and ordinary ustar/gnu archives with
// regular files and directories; directories are skipped). Throws kInput on
// malformed headers or checksums.
std::vector<TarEntry> read_tar(const std::vector<std::uint8_t>& archive);

}  // namespace wssv::dataset
