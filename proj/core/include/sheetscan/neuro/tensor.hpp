// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

namespace sheetscan::neuro {

/// Dense h x w x c tensor stored row-major over (y, x, channel).
template <class R>
struct Tensor {
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<R> data;

  Tensor() = default;
  Tensor(int h_, int w_, int c_)
      : h(h_), w(w_), c(c_), data(static_cast<std::size_t>(h_) * w_ * c_, R(0)) {}

  std::size_t size() const noexcept { return data.size(); }
  std::size_t index(int y, int x, int ch) const noexcept {
    return (static_cast<std::size_t>(y) * w + x) * c + ch;
  }
  R& at(int y, int x, int ch) { return data[index(y, x, ch)]; }
  const R& at(int y, int x, int ch) const { return data[index(y, x, ch)]; }
  R* pixel(int y, int x) { return data.data() + index(y, x, 0); }
  const R* pixel(int y, int x) const { return data.data() + index(y, x, 0); }

  void zero() { std::fill(data.begin(), data.end(), R(0)); }
  bool same_shape(const Tensor& o) const noexcept { return h == o.h && w == o.w && c == o.c; }
  std::string shape_string() const {
    return std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c);
  }

  bool operator==(const Tensor&) const = default;
};

}  // namespace sheetscan::neuro
