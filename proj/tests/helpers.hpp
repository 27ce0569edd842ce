#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "oracles.hpp"
#include "ppm/random.hpp"
#include "ppm/raster.hpp"
#include "ppm/token_grid.hpp"

namespace testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("ppm_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline ppm::TokenGridf random_grid(int h, int w, int c, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  ppm::Rng rng(seed);
  ppm::TokenGridf g(h, w, c);
  for (Eigen::Index i = 0; i < g.tokens.size(); ++i) g.tokens.data()[i] = static_cast<float>(rng.uniform(lo, hi));
  return g;
}

template <typename Scalar>
oracle::Grid to_oracle(const ppm::TokenGrid<Scalar>& g) {
  oracle::Grid out = oracle::make_grid(g.height, g.width, g.channels());
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x)
      for (int c = 0; c < g.channels(); ++c) out[y][x][c] = g.at(x, y, c);
  return out;
}

template <typename Scalar>
std::vector<std::vector<double>> token_rows(const ppm::RowMatrix<Scalar>& m) {
  std::vector<std::vector<double>> rows(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) rows[r][c] = m(r, c);
  return rows;
}

inline oracle::Image to_image(const ppm::FloatRaster& r, int c = 0) {
  oracle::Image img(r.height(), std::vector<double>(r.width()));
  for (int y = 0; y < r.height(); ++y)
    for (int x = 0; x < r.width(); ++x) img[y][x] = r.at(x, y, c);
  return img;
}

inline std::vector<double> flat(const ppm::FloatRaster& r) { return {r.data().begin(), r.data().end()}; }

// Kernel[o][ky][kx][c] view of a (9*C_in) x C_out im2col weight matrix.
template <typename Scalar>
oracle::Kernel to_kernel(const ppm::RowMatrix<Scalar>& w, int in_channels) {
  const int out = static_cast<int>(w.cols());
  oracle::Kernel k(out, std::vector<std::vector<std::vector<double>>>(
                            3, std::vector<std::vector<double>>(3, std::vector<double>(in_channels))));
  for (int o = 0; o < out; ++o)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx)
        for (int c = 0; c < in_channels; ++c) k[o][ky][kx][c] = w((ky * 3 + kx) * in_channels + c, o);
  return k;
}

template <typename Scalar>
std::vector<double> to_std(const ppm::Vector<Scalar>& v) {
  return {v.data(), v.data() + v.size()};
}

}  // namespace testing
