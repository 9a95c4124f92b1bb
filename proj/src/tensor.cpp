#include "kipps/tensor.hpp"

#include <cmath>

#include "kipps/error.hpp"

namespace kipps {

bool Tensor::finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::check_invariants() const {
  std::size_t prod = 1;
  for (auto d : shape) prod *= d;
  if (prod != data.size()) fail_data("tensor: data length does not match shape");
  if (!finite()) fail_data("tensor: non-finite entry");
}

Tensor transpose(const Tensor& a) {
  Tensor out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  const std::size_t m = trans_a ? a.cols() : a.rows();
  const std::size_t k = trans_a ? a.rows() : a.cols();
  const std::size_t k2 = trans_b ? b.cols() : b.rows();
  const std::size_t n = trans_b ? b.rows() : b.cols();
  if (k != k2) fail_data("matmul: inner dimensions do not match");

  Tensor out(m, n);
  auto va = [&](std::size_t i, std::size_t p) { return trans_a ? a.at(p, i) : a.at(i, p); };
  auto vb = [&](std::size_t p, std::size_t j) { return trans_b ? b.at(j, p) : b.at(p, j); };
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double ai = va(i, p);
      if (ai == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out.at(i, j) += ai * vb(p, j);
    }
  }
  return out;
}

double l2_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace kipps
