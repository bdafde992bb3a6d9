#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

namespace moth {

// Dense row-major tensor of doubles, rank 1..4. Small and boring on purpose:
// the hot loops live in kernels.hpp and work on raw pointers.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    std::int64_t n = 1;
    for (int d : shape_) {
      assert(d >= 0);
      n *= d;
    }
    data_.assign(static_cast<size_t>(n), 0.0);
  }

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  const std::vector<int>& shape() const { return shape_; }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](std::int64_t i) const { return data_[static_cast<size_t>(i)]; }

  double& operator()(int i) { return data_[static_cast<size_t>(i)]; }
  double operator()(int i) const { return data_[static_cast<size_t>(i)]; }

  double& operator()(int i, int j) {
    assert(rank() == 2);
    return data_[static_cast<size_t>(i) * shape_[1] + j];
  }
  double operator()(int i, int j) const {
    assert(rank() == 2);
    return data_[static_cast<size_t>(i) * shape_[1] + j];
  }

  double& operator()(int i, int j, int k) {
    assert(rank() == 3);
    return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
  }
  double operator()(int i, int j, int k) const {
    assert(rank() == 3);
    return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
  }

  double& operator()(int i, int j, int k, int l) {
    assert(rank() == 4);
    return data_[((static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }
  double operator()(int i, int j, int k, int l) const {
    assert(rank() == 4);
    return data_[((static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }

  void fill(double v) { data_.assign(data_.size(), v); }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

}  // namespace moth
