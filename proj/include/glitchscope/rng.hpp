// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GLITCHSCOPE_RNG_HPP_
#define GLITCHSCOPE_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace glitchscope {

// Every random draw in the library goes through this type. The engine is
// std::mt19937_64 (fully specified by the standard); the mappings from raw
// 64-bit words to doubles, bounded integers, normals and permutations are
// implemented here so results do not depend on the standard library vendor:
//
//   uniform()      (word >> 11) * 2^-53, in [0, 1)
//   below(n)       rejection sampling on the top bits, unbiased in [0, n)
//   normal()       Box-Muller on two uniforms, no cached second value
//   shuffle(span)  Fisher-Yates from the back, j = below(i + 1)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Seed for an independent stream, mixed from a base seed and a tag.
  static std::uint64_t Derive(std::uint64_t seed, std::string_view tag);
  static std::uint64_t Derive(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next() { return engine_(); }
  double uniform();
  std::uint64_t below(std::uint64_t n);
  double normal();

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace glitchscope

#endif  // GLITCHSCOPE_RNG_HPP_
