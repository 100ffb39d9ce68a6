#pragma once

#include <Eigen/Core>

#include <cassert>
#include <cstdint>
#include <ostream>

namespace rsnn {

/// Channel-major activation shape. One-dimensional activations use
/// height = width = 1 and carry their length in `channels`.
struct Shape {
  int channels = 1;
  int height = 1;
  int width = 1;

  Eigen::Index size() const {
    return Eigen::Index(channels) * height * width;
  }
  Eigen::Index plane_size() const { return Eigen::Index(height) * width; }
  bool is_flat() const { return height == 1 && width == 1; }

  friend bool operator==(const Shape&, const Shape&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const Shape& s) {
  return os << s.height << 'x' << s.width << 'x' << s.channels;
}

template <typename Scalar>
using Plane =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Dense (channel, row, column) tensor stored contiguously in channel-major
/// order. The flat storage order is exactly the flatten order used between
/// the 2-D and 1-D parts of a network.
template <typename Scalar>
class Tensor {
 public:
  using PlaneMap = Eigen::Map<Plane<Scalar>>;
  using ConstPlaneMap = Eigen::Map<const Plane<Scalar>>;

  Tensor() = default;
  explicit Tensor(Shape shape)
      : shape_(shape), data_(Vector<Scalar>::Zero(shape.size())) {}
  Tensor(Shape shape, Vector<Scalar> data)
      : shape_(shape), data_(std::move(data)) {
    assert(data_.size() == shape_.size());
  }

  const Shape& shape() const { return shape_; }
  Eigen::Index size() const { return data_.size(); }

  Vector<Scalar>& data() { return data_; }
  const Vector<Scalar>& data() const { return data_; }

  PlaneMap channel(int c) {
    return PlaneMap(data_.data() + c * shape_.plane_size(), shape_.height,
                    shape_.width);
  }
  ConstPlaneMap channel(int c) const {
    return ConstPlaneMap(data_.data() + c * shape_.plane_size(),
                         shape_.height, shape_.width);
  }

  Scalar& operator()(int c, int y, int x) {
    return data_[index(c, y, x)];
  }
  Scalar operator()(int c, int y, int x) const {
    return data_[index(c, y, x)];
  }

  /// Same storage viewed as a one-dimensional tensor of length C*H*W.
  Tensor flattened() const {
    return Tensor(Shape{static_cast<int>(size()), 1, 1}, data_);
  }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Eigen::Index index(int c, int y, int x) const {
    assert(c >= 0 && c < shape_.channels);
    assert(y >= 0 && y < shape_.height);
    assert(x >= 0 && x < shape_.width);
    return (Eigen::Index(c) * shape_.height + y) * shape_.width + x;
  }

  Shape shape_;
  Vector<Scalar> data_;
};

using IntTensor = Tensor<std::int64_t>;
using BitTensor = Tensor<std::uint8_t>;
using RealTensor = Tensor<double>;

}  // namespace rsnn
