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

#include "dataset/tar.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>

#include "common/error.hpp"

namespace wssv::dataset {

namespace {

constexpr std::size_t kBlock = 512;

void put_octal(std::uint8_t* field, std::size_t width, std::uint64_t value) {
  // width-1 digits plus NUL
  std::string digits(width - 1, '0');
  for (std::size_t i = width - 1; i-- > 0;) {
    digits[i] = static_cast<char>('0' + (value & 7));
    value >>= 3;
  }
  if (value != 0) fail(ErrorCode::kInput, "tar: numeric field overflow");
  std::memcpy(field, digits.data(), width - 1);
  field[width - 1] = 0;
}

std::uint64_t get_octal(const std::uint8_t* field, std::size_t width) {
  std::uint64_t v = 0;
  std::size_t i = 0;
  while (i < width && (field[i] == ' ' || field[i] == 0)) ++i;
  for (; i < width && field[i] >= '0' && field[i] <= '7'; ++i) v = (v << 3) | static_cast<std::uint64_t>(field[i] - '0');
  for (; i < width; ++i) {
    if (field[i] != ' ' && field[i] != 0) fail(ErrorCode::kInput, "tar: bad octal field");
  }
  return v;
}

std::uint64_t header_checksum(const std::uint8_t* h) {
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < kBlock; ++i) sum += (i >= 148 && i < 156) ? ' ' : h[i];
  return sum;
}

std::string field_string(const std::uint8_t* p, std::size_t width) {
  const auto* end = std::find(p, p + width, 0);
  return std::string(reinterpret_cast<const char*>(p), static_cast<std::size_t>(end - p));
}

}  // namespace

std::vector<std::uint8_t> write_tar(const std::vector<TarEntry>& entries) {
  std::vector<std::uint8_t> out;
  for (const auto& e : entries) {
    if (e.name.empty() || e.name.size() > 100) fail(ErrorCode::kInput, "tar: entry name must be 1..100 bytes");
    std::uint8_t h[kBlock] = {};
    std::memcpy(h, e.name.data(), e.name.size());
    put_octal(h + 100, 8, 0644);
    put_octal(h + 108, 8, 0);
    put_octal(h + 116, 8, 0);
    put_octal(h + 124, 12, e.data.size());
    put_octal(h + 136, 12, static_cast<std::uint64_t>(std::max<std::int64_t>(e.mtime, 0)));
    h[156] = '0';
    std::memcpy(h + 257, "ustar", 6);  // magic incl. NUL
    h[263] = '0';
    h[264] = '0';
    char chk[8];
    std::snprintf(chk, sizeof(chk), "%06o", static_cast<unsigned>(header_checksum(h)));
    std::memcpy(h + 148, chk, 7);  // six digits, NUL
    h[155] = ' ';
    out.insert(out.end(), h, h + kBlock);
    out.insert(out.end(), e.data.begin(), e.data.end());
    out.resize(out.size() + (kBlock - e.data.size() % kBlock) % kBlock, 0);
  }
  out.resize(out.size() + 2 * kBlock, 0);
  return out;
}

std::vector<TarEntry> read_tar(const std::vector<std::uint8_t>& archive) {
  std::vector<TarEntry> out;
  std::size_t pos = 0;
  while (true) {
    if (pos + kBlock > archive.size()) fail(ErrorCode::kInput, "tar: truncated archive");
    const std::uint8_t* h = archive.data() + pos;
    if (std::all_of(h, h + kBlock, [](std::uint8_t b) { return b == 0; })) break;
    if (get_octal(h + 148, 8) != header_checksum(h)) {
      fail(ErrorCode::kInput, "tar: header checksum mismatch at offset " + std::to_string(pos));
    }
    TarEntry e;
    e.name = field_string(h, 100);
    const std::string prefix = std::memcmp(h + 257, "ustar", 5) == 0 ? field_string(h + 345, 155) : "";
    if (!prefix.empty()) e.name = prefix + "/" + e.name;
    const auto size = get_octal(h + 124, 12);
    e.mtime = static_cast<std::int64_t>(get_octal(h + 136, 12));
    const char type = static_cast<char>(h[156]);
    pos += kBlock;
    if (size > archive.size() - pos) fail(ErrorCode::kInput, "tar: entry '" + e.name + "' runs past the end");
    if (type == '0' || type == 0) {
      e.data.assign(archive.begin() + static_cast<std::ptrdiff_t>(pos),
                    archive.begin() + static_cast<std::ptrdiff_t>(pos + size));
      out.push_back(std::move(e));
    } else if (type != '5') {
      fail(ErrorCode::kInput, "tar: unsupported entry type '" + std::string(1, type) + "' for '" + e.name + "'");
    }
    pos += (size + kBlock - 1) / kBlock * kBlock;
  }
  return out;
}

}  // namespace wssv::dataset
