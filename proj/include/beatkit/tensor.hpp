#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace beatkit::ad {

// Dense row-major matrix of doubles. Scalars are 1x1, column vectors Rx1.
// All autodiff values and model parameters are carried in this container.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {
    if (r < 0 || c < 0) throw std::invalid_argument("Tensor: negative shape");
  }
  Tensor(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != static_cast<size_t>(r) * c)
      throw std::invalid_argument("Tensor: data length does not match shape");
  }

  static Tensor scalar(double v) {
    Tensor t(1, 1);
    t.data[0] = v;
    return t;
  }
  static Tensor row(std::initializer_list<double> v) {
    Tensor t(1, static_cast<int>(v.size()));
    size_t i = 0;
    for (double x : v) t.data[i++] = x;
    return t;
  }
  static Tensor column(const std::vector<double>& v) {
    Tensor t(static_cast<int>(v.size()), 1);
    t.data = v;
    return t;
  }
  static Tensor full(int r, int c, double v) {
    Tensor t(r, c);
    for (double& x : t.data) x = v;
    return t;
  }

  size_t numel() const { return data.size(); }
  bool is_scalar() const { return rows == 1 && cols == 1; }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  double item() const {
    if (!is_scalar()) throw std::logic_error("Tensor::item on non-scalar");
    return data[0];
  }

  bool all_finite() const {
    for (double x : data)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

}  // namespace beatkit::ad
