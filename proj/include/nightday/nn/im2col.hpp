#pragma once

#include <vector>

namespace nightday::nn {

enum class Padding { zero, reflect };

struct ConvGeometry {
  int kernel = 3;
  int stride = 1;
  int pad = 0;
  Padding padding = Padding::zero;

  int out(int in) const { return (in + 2 * pad - kernel) / stride + 1; }
};

namespace detail {

// Maps a padded coordinate to a source index, or -1 when it lands on zero padding.
inline int source_index(int i, int n, Padding mode) {
  if (i >= 0 && i < n) return i;
  if (mode == Padding::zero) return -1;
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

}  // namespace detail

/// Unfolds output rows [row_begin, row_end) of a convolution over x [C,H,W]
/// into col [C*k*k, (row_end-row_begin)*Wo].
template <class T>
void im2col(const T* x, int channels, int height, int width, const ConvGeometry& g, int row_begin, int row_end,
            T* col) {
  const int k = g.kernel;
  const int wo = g.out(width);
  const int rows = row_end - row_begin;
  const std::size_t ncols = static_cast<std::size_t>(rows) * wo;
  std::vector<int> xs(static_cast<std::size_t>(wo));
  for (int c = 0; c < channels; ++c) {
    const T* xc = x + static_cast<std::size_t>(c) * height * width;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* dst = col + (static_cast<std::size_t>((c * k + ky) * k + kx)) * ncols;
        for (int ox = 0; ox < wo; ++ox) xs[ox] = detail::source_index(ox * g.stride - g.pad + kx, width, g.padding);
        for (int oy = row_begin; oy < row_end; ++oy) {
          const int iy = detail::source_index(oy * g.stride - g.pad + ky, height, g.padding);
          T* d = dst + static_cast<std::size_t>(oy - row_begin) * wo;
          if (iy < 0) {
            for (int ox = 0; ox < wo; ++ox) d[ox] = T(0);
            continue;
          }
          const T* src = xc + static_cast<std::size_t>(iy) * width;
          for (int ox = 0; ox < wo; ++ox) d[ox] = xs[ox] < 0 ? T(0) : src[xs[ox]];
        }
      }
    }
  }
}

/// Adjoint of im2col: scatters col back into x (accumulating).
template <class T>
void col2im(const T* col, int channels, int height, int width, const ConvGeometry& g, int row_begin, int row_end,
            T* x) {
  const int k = g.kernel;
  const int wo = g.out(width);
  const int rows = row_end - row_begin;
  const std::size_t ncols = static_cast<std::size_t>(rows) * wo;
  std::vector<int> xs(static_cast<std::size_t>(wo));
  for (int c = 0; c < channels; ++c) {
    T* xc = x + static_cast<std::size_t>(c) * height * width;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* src = col + (static_cast<std::size_t>((c * k + ky) * k + kx)) * ncols;
        for (int ox = 0; ox < wo; ++ox) xs[ox] = detail::source_index(ox * g.stride - g.pad + kx, width, g.padding);
        for (int oy = row_begin; oy < row_end; ++oy) {
          const int iy = detail::source_index(oy * g.stride - g.pad + ky, height, g.padding);
          if (iy < 0) continue;
          const T* s = src + static_cast<std::size_t>(oy - row_begin) * wo;
          T* dst = xc + static_cast<std::size_t>(iy) * width;
          for (int ox = 0; ox < wo; ++ox) {
            if (xs[ox] >= 0) dst[xs[ox]] += s[ox];
          }
        }
      }
    }
  }
}

}  // namespace nightday::nn
