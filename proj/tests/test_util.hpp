/**
 * gmdalign
 *
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>

#include <Eigen/Dense>

#include "gmdalign/corpus.hpp"
#include "gmdalign/rng.hpp"

namespace testutil {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("gmdalign_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline gmdalign::EmbeddingMatrix random_embedding(int dim, std::size_t rows,
                                                  std::uint64_t seed) {
  gmdalign::DetRng rng(seed);
  std::vector<float> data(rows * static_cast<std::size_t>(dim));
  for (auto& f : data) f = static_cast<float>(rng.normal());
  return gmdalign::EmbeddingMatrix(dim, std::move(data));
}

inline Eigen::MatrixXd random_psd(int dim, std::uint64_t seed) {
  gmdalign::DetRng rng(seed);
  Eigen::MatrixXd a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = rng.normal();
  return a.transpose() * a;
}

inline Eigen::VectorXd random_vector(int dim, gmdalign::DetRng& rng) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.normal();
  return v;
}

}  // namespace testutil
