// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

// Little-endian primitives shared by the FLOG, MLP1 and MAHA readers/writers.

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "gradnorm/errors.hpp"

namespace gradnorm::io {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T to_little(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return value;
}

class Writer {
 public:
  void magic(std::string_view m) { buf_.insert(buf_.end(), m.begin(), m.end()); }

  template <typename T>
  void put(T value) {
    const auto le = to_little(value);
    const auto* p = reinterpret_cast<const char*>(&le);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }

  void u32(std::uint64_t value, const char* field) {
    if (value > UINT32_MAX) {
      throw IoError(IoError::Kind::kDimOverflow,
                    std::string(field) + " = " + std::to_string(value) + " does not fit in u32");
    }
    put(static_cast<std::uint32_t>(value));
  }

  // Writes to a sibling temp file, then renames over the target.
  void commit(const std::filesystem::path& path) const {
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError(IoError::Kind::kOpen, "cannot open " + tmp.string() + " for writing");
      out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
      if (!out) throw IoError(IoError::Kind::kOpen, "write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError(IoError::Kind::kOpen, "cannot rename onto " + path.string() + ": " + ec.message());
  }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : name_(path.string()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(IoError::Kind::kOpen, "cannot open " + name_);
    buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  std::size_t remaining() const noexcept { return buf_.size() - pos_; }
  const std::string& name() const noexcept { return name_; }

  void expect_magic(std::string_view m) {
    if (remaining() < m.size() || std::string_view(buf_.data() + pos_, m.size()) != m) {
      throw IoError(IoError::Kind::kBadMagic,
                    name_ + ": bad magic (expected \"" + std::string(m) + "\")");
    }
    pos_ += m.size();
  }

  template <typename T>
  T get() {
    require(sizeof(T));
    T value;
    std::memcpy(&value, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(value);
  }

  // Checks that count elements of elem_size bytes are available without
  // overflowing the size computation.
  void require_elements(std::uint64_t count, std::size_t elem_size) {
    if (count > remaining() / elem_size) {
      if (count > UINT64_MAX / elem_size) {
        throw IoError(IoError::Kind::kDimOverflow, name_ + ": declared size overflows");
      }
      throw IoError(IoError::Kind::kTruncated, name_ + ": truncated (need " +
                                                   std::to_string(count * elem_size) + " bytes, have " +
                                                   std::to_string(remaining()) + ")");
    }
  }

 private:
  void require(std::size_t bytes) {
    if (remaining() < bytes) throw IoError(IoError::Kind::kTruncated, name_ + ": truncated");
  }

  std::string name_;
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

}  // namespace gradnorm::io
