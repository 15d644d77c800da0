#pragma once

#include "tensor_lift/types.hpp"

#include <span>

namespace tensor_lift {

/// Dense N-way array of doubles, stored row-major (last index fastest).
///
/// This single linear order is shared by vectorize(), unfold(), the row order
/// of every structured design matrix and the linear indices of an
/// ObservationMask. Modes are numbered from 0.
class DenseTensor {
 public:
  DenseTensor() = default;
  /// Zero-filled tensor.
  explicit DenseTensor(Shape shape);
  DenseTensor(Shape shape, std::vector<double> data);

  static DenseTensor from_matrix(const Matrix& m);

  const Shape& shape() const { return shape_; }
  std::size_t order() const { return shape_.size(); }
  std::size_t dim(std::size_t mode) const { return shape_.at(mode); }
  std::size_t size() const { return data_.size(); }

  double operator[](std::size_t linear) const { return data_[linear]; }
  double& operator[](std::size_t linear) { return data_[linear]; }

  double at(std::span<const std::size_t> index) const;
  double& at(std::span<const std::size_t> index);

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  /// Order-2 tensors only.
  Matrix to_matrix() const;

  bool operator==(const DenseTensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Throws DimensionError if the shape is empty or has a zero extent.
void validate_shape(const Shape& shape);

std::size_t linear_index(const Shape& shape, std::span<const std::size_t> index);
MultiIndex multi_index(const Shape& shape, std::size_t linear);

/// Shape with one mode removed.
Shape drop_mode(const Shape& shape, std::size_t mode);

/// Mode-n unfolding: row i holds the mode-n fiber at i, columns run over the
/// remaining indices in row-major order.
Matrix unfold(const DenseTensor& t, std::size_t mode);
DenseTensor fold(const Matrix& m, std::size_t mode, const Shape& shape);

Vector vectorize(const DenseTensor& t);
DenseTensor devectorize(const Vector& v, const Shape& shape);

/// t x_mode m, with m of shape J x I_mode.
DenseTensor mode_product(const DenseTensor& t, const Matrix& m, std::size_t mode);

double inner(const DenseTensor& a, const DenseTensor& b);
double frobenius_norm(const DenseTensor& t);

}  // namespace tensor_lift
