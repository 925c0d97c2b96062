// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GLITCHSCOPE_TESTS_TEST_UTIL_HPP_
#define GLITCHSCOPE_TESTS_TEST_UTIL_HPP_

#include <atomic>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <unistd.h>
#include <vector>

#include "glitchscope/dataset.hpp"

namespace glitchscope::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("glitchscope-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ignored;
    std::filesystem::remove_all(path_, ignored);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string ReadText(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Builds a dataset from literal rows; ids are 0..n-1 unless given.
inline Dataset MakeDataset(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels, int k,
                           std::vector<SampleId> ids = {}) {
  Dataset data;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows.empty() ? 0 : rows.front().size());
  data.features.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) data.features(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  data.labels = labels;
  if (ids.empty()) {
    ids.resize(rows.size());
    std::iota(ids.begin(), ids.end(), SampleId{0});
  }
  data.sample_ids = std::move(ids);
  data.class_count = k;
  return data;
}

// Rows [begin, end) of data.
inline Dataset Slice(const Dataset& data, std::size_t begin, std::size_t end) {
  std::vector<std::size_t> rows(end - begin);
  std::iota(rows.begin(), rows.end(), begin);
  return data.Select(rows);
}

}  // namespace glitchscope::testing

#endif  // GLITCHSCOPE_TESTS_TEST_UTIL_HPP_
