#pragma once

#include <cstddef>
#include <vector>

namespace kipps {

// Dense row-major tensor. Everything in the engine is rank 2; scalars are
// 1x1 and row vectors 1xN.
struct Tensor {
  std::vector<std::size_t> shape;  // {rows, cols}
  std::vector<double> data;

  Tensor() : shape{0, 0} {}
  Tensor(std::size_t r, std::size_t c) : shape{r, c}, data(r * c, 0.0) {}

  static Tensor scalar(double v) {
    Tensor t(1, 1);
    t.data[0] = v;
    return t;
  }
  static Tensor ones(std::size_t r, std::size_t c) {
    Tensor t(r, c);
    for (auto& v : t.data) v = 1.0;
    return t;
  }
  static Tensor row(const std::vector<double>& v) {
    Tensor t(1, v.size());
    t.data = v;
    return t;
  }

  std::size_t rows() const { return shape[0]; }
  std::size_t cols() const { return shape[1]; }
  std::size_t size() const { return data.size(); }

  double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool finite() const;
  void check_invariants() const;  // data length == product of shape, entries finite
};

Tensor transpose(const Tensor& a);
// op(a) * op(b) where op is optional transposition
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);
double l2_norm(const std::vector<double>& v);

}  // namespace kipps
