#include "tensor_lift/mask.hpp"

#include <algorithm>

namespace tensor_lift {

ObservationMask::ObservationMask(Shape shape, std::vector<std::uint64_t> indices)
    : shape_(std::move(shape)), indices_(std::move(indices)) {
  validate_shape(shape_);
  std::sort(indices_.begin(), indices_.end());
  if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
    throw DimensionError("observation mask contains duplicate indices");
  }
  if (!indices_.empty() && indices_.back() >= element_count(shape_)) {
    throw DimensionError("observation mask index out of bounds for shape " +
                         shape_to_string(shape_));
  }
}

ObservationMask ObservationMask::full(const Shape& shape) {
  std::vector<std::uint64_t> all(element_count(shape));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return ObservationMask(shape, std::move(all));
}

double ObservationMask::fraction() const {
  return static_cast<double>(count()) / static_cast<double>(total());
}

bool ObservationMask::contains(std::uint64_t linear) const {
  return std::binary_search(indices_.begin(), indices_.end(), linear);
}

ObservationMask ObservationMask::complement() const {
  std::vector<std::uint64_t> rest;
  rest.reserve(total() - count());
  auto it = indices_.begin();
  for (std::uint64_t i = 0; i < total(); ++i) {
    if (it != indices_.end() && *it == i) {
      ++it;
    } else {
      rest.push_back(i);
    }
  }
  return ObservationMask(shape_, std::move(rest));
}

Vector ObservationMask::gather(const DenseTensor& t) const {
  if (t.shape() != shape_) throw DimensionError("mask shape does not match tensor");
  Vector v(static_cast<Eigen::Index>(count()));
  for (std::size_t k = 0; k < count(); ++k) v[k] = t[indices_[k]];
  return v;
}

}  // namespace tensor_lift
