#pragma once

#include "tensor_lift/tensor.hpp"

namespace tensor_lift {

/// The set of revealed entries of a tensor, held as sorted unique linear
/// indices in the DenseTensor order.
class ObservationMask {
 public:
  ObservationMask() = default;
  /// Sorts and validates; throws DimensionError on out-of-range or duplicate
  /// indices.
  ObservationMask(Shape shape, std::vector<std::uint64_t> indices);

  static ObservationMask full(const Shape& shape);

  const Shape& shape() const { return shape_; }
  const std::vector<std::uint64_t>& indices() const { return indices_; }
  std::size_t count() const { return indices_.size(); }
  std::size_t total() const { return element_count(shape_); }
  /// Observation rate |Omega| / I.
  double fraction() const;
  bool empty() const { return indices_.empty(); }

  bool contains(std::uint64_t linear) const;
  /// Sorted set difference [I] \ Omega.
  ObservationMask complement() const;

  /// Observed values of `t` in mask order.
  Vector gather(const DenseTensor& t) const;

  bool operator==(const ObservationMask&) const = default;

 private:
  Shape shape_;
  std::vector<std::uint64_t> indices_;
};

}  // namespace tensor_lift
