#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cat/errors.hpp"

namespace cat {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

/// Dense row-major array of 64-bit floats with an optional gradient of the
/// same shape (empty vector = no gradient). Rank 1 and 2 cover everything
/// this library computes.
struct Tensor {
  Shape shape;
  std::vector<double> v;
  std::vector<double> g;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0)
      : shape(std::move(s)), v(shape_size(shape), fill) {}
  Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), v(std::move(values)) {
    if (v.size() != shape_size(shape))
      throw ShapeError("tensor: " + std::to_string(v.size()) + " values do not fill shape " +
                       shape_str(shape));
  }

  static Tensor matrix(std::size_t r, std::size_t c, std::vector<double> values) {
    return Tensor(Shape{r, c}, std::move(values));
  }
  static Tensor vec(std::vector<double> values) {
    Shape s{values.size()};
    return Tensor(std::move(s), std::move(values));
  }

  std::size_t size() const { return v.size(); }
  std::size_t rank() const { return shape.size(); }
  bool is_matrix() const { return rank() == 2; }
  bool is_vector() const { return rank() == 1; }

  std::size_t rows() const {
    if (!is_matrix()) throw ShapeError("rows(): tensor is not a matrix " + shape_str(shape));
    return shape[0];
  }
  std::size_t cols() const {
    if (!is_matrix()) throw ShapeError("cols(): tensor is not a matrix " + shape_str(shape));
    return shape[1];
  }

  double& at(std::size_t r, std::size_t c) { return v[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return v[r * cols() + c]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool has_grad() const { return !g.empty(); }
  void ensure_grad() {
    if (g.size() != v.size()) g.assign(v.size(), 0.0);
  }
  void drop_grad() { g.clear(); }
};

}  // namespace cat
