#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace cathseg::nn {

/// (batch, channels, height, width)
struct Shape4 {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  Eigen::Index count() const { return Eigen::Index(n) * c * h * w; }
  Eigen::Index plane() const { return Eigen::Index(h) * w; }
  bool operator==(const Shape4&) const = default;
  std::string str() const;
};

/// Dense 4-axis array stored row-major over (b, c, y, x).
template <typename Scalar>
class Tensor4 {
 public:
  using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;

  Tensor4() = default;
  explicit Tensor4(Shape4 shape, Scalar fill = Scalar(0)) : shape_(shape), data_(Storage::Constant(shape.count(), fill)) {
    if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) throw std::invalid_argument("Tensor4: negative dimension");
  }
  Tensor4(Shape4 shape, Storage data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.count()) throw std::invalid_argument("Tensor4: data size does not match " + shape_.str());
  }

  static Tensor4 zeros(Shape4 shape) { return Tensor4(shape); }
  static Tensor4 zeros_like(const Tensor4& other) { return Tensor4(other.shape()); }

  const Shape4& shape() const { return shape_; }
  int batch() const { return shape_.n; }
  int channels() const { return shape_.c; }
  int height() const { return shape_.h; }
  int width() const { return shape_.w; }
  Eigen::Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Eigen::Index offset(int b, int c, int y, int x) const {
    return ((Eigen::Index(b) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  Scalar& operator()(int b, int c, int y, int x) { return data_(offset(b, c, y, x)); }
  Scalar operator()(int b, int c, int y, int x) const { return data_(offset(b, c, y, x)); }

  Storage& array() { return data_; }
  const Storage& array() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  /// Sample `b` viewed as a (channels, height*width) matrix.
  MatrixMap sample(int b) { return MatrixMap(data() + offset(b, 0, 0, 0), shape_.c, shape_.plane()); }
  ConstMatrixMap sample(int b) const {
    return ConstMatrixMap(data() + offset(b, 0, 0, 0), shape_.c, shape_.plane());
  }

  template <typename Other>
  Tensor4<Other> cast() const {
    return Tensor4<Other>(shape_, data_.template cast<Other>());
  }

  bool all_finite() const { return data_.isFinite().all(); }

  friend bool operator==(const Tensor4& a, const Tensor4& b) {
    return a.shape_ == b.shape_ && (a.data_ == b.data_).all();
  }

 private:
  Shape4 shape_;
  Storage data_;
};

template <typename Scalar>
double dot(const Tensor4<Scalar>& a, const Tensor4<Scalar>& b) {
  if (!(a.shape() == b.shape())) throw std::invalid_argument("dot: shape mismatch");
  return (a.array().template cast<double>() * b.array().template cast<double>()).sum();
}

}  // namespace cathseg::nn
