// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GLITCHSCOPE_DIGEST_HPP_
#define GLITCHSCOPE_DIGEST_HPP_

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace glitchscope {

// Incremental SHA-256 (OpenSSL) with helpers for little-endian scalars.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void Update(std::span<const std::uint8_t> bytes);
  void Update(std::string_view text);

  template <typename T>
    requires std::is_arithmetic_v<T>
  void UpdateScalar(T value) {
    std::uint8_t buffer[sizeof(T)];
    std::memcpy(buffer, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(std::begin(buffer), std::end(buffer));
    }
    Update(std::span<const std::uint8_t>(buffer, sizeof(T)));
  }

  std::string HexDigest();

 private:
  void* context_;
};

std::string Sha256Hex(std::string_view text);
std::string FileSha256Hex(const std::filesystem::path& path);

}  // namespace glitchscope

#endif  // GLITCHSCOPE_DIGEST_HPP_
