// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GLITCHSCOPE_SRC_BINARY_IO_HPP_
#define GLITCHSCOPE_SRC_BINARY_IO_HPP_

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <type_traits>

#include "glitchscope/error.hpp"

namespace glitchscope::binary {

// Little-endian scalar stream helpers shared by the trail and tensor formats.
class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw RuntimeFailure("cannot write " + path.string());
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void Put(T value) {
    char buffer[sizeof(T)];
    std::memcpy(buffer, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buffer, buffer + sizeof(T));
    out_.write(buffer, sizeof(T));
  }

  void PutBytes(const std::string& bytes, std::size_t width) {
    std::string padded = bytes.substr(0, width);
    padded.resize(width, '\0');
    out_.write(padded.data(), static_cast<std::streamsize>(width));
  }

  void Finish() {
    out_.flush();
    if (!out_) throw RuntimeFailure("write failed: " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw ValidationError("cannot open " + path.string());
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  T Get() {
    char buffer[sizeof(T)];
    in_.read(buffer, sizeof(T));
    if (!in_) throw ValidationError("truncated file: " + path_.string());
    if constexpr (std::endian::native == std::endian::big) std::reverse(buffer, buffer + sizeof(T));
    T value;
    std::memcpy(&value, buffer, sizeof(T));
    return value;
  }

  std::string GetBytes(std::size_t width) {
    std::string bytes(width, '\0');
    in_.read(bytes.data(), static_cast<std::streamsize>(width));
    if (!in_) throw ValidationError("truncated file: " + path_.string());
    bytes.erase(std::find(bytes.begin(), bytes.end(), '\0'), bytes.end());
    return bytes;
  }

  void ExpectEnd() {
    if (in_.peek() != std::char_traits<char>::eof()) {
      throw ValidationError("trailing bytes in " + path_.string());
    }
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

}  // namespace glitchscope::binary

#endif  // GLITCHSCOPE_SRC_BINARY_IO_HPP_
