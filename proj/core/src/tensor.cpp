#include "tensor_lift/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace tensor_lift {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

void validate_shape(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor order must be at least 1");
  for (auto d : shape) {
    if (d == 0) throw DimensionError("zero extent in shape " + shape_to_string(shape));
  }
}

DenseTensor::DenseTensor(Shape shape) : shape_(std::move(shape)) {
  validate_shape(shape_);
  data_.assign(element_count(shape_), 0.0);
}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  validate_shape(shape_);
  if (data_.size() != element_count(shape_)) {
    throw DimensionError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_to_string(shape_));
  }
}

DenseTensor DenseTensor::from_matrix(const Matrix& m) {
  DenseTensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) t.data_[i * m.cols() + j] = m(i, j);
  return t;
}

double DenseTensor::at(std::span<const std::size_t> index) const {
  return data_[linear_index(shape_, index)];
}

double& DenseTensor::at(std::span<const std::size_t> index) {
  return data_[linear_index(shape_, index)];
}

Matrix DenseTensor::to_matrix() const {
  if (order() != 2) throw DimensionError("to_matrix requires an order-2 tensor");
  Matrix m(shape_[0], shape_[1]);
  for (std::size_t i = 0; i < shape_[0]; ++i)
    for (std::size_t j = 0; j < shape_[1]; ++j) m(i, j) = data_[i * shape_[1] + j];
  return m;
}

std::size_t linear_index(const Shape& shape, std::span<const std::size_t> index) {
  if (index.size() != shape.size()) throw DimensionError("index arity does not match tensor order");
  std::size_t linear = 0;
  for (std::size_t n = 0; n < shape.size(); ++n) {
    if (index[n] >= shape[n]) throw DimensionError("index out of bounds");
    linear = linear * shape[n] + index[n];
  }
  return linear;
}

MultiIndex multi_index(const Shape& shape, std::size_t linear) {
  if (linear >= element_count(shape)) throw DimensionError("linear index out of bounds");
  MultiIndex index(shape.size());
  for (std::size_t n = shape.size(); n-- > 0;) {
    index[n] = linear % shape[n];
    linear /= shape[n];
  }
  return index;
}

Shape drop_mode(const Shape& shape, std::size_t mode) {
  Shape out;
  out.reserve(shape.size() - 1);
  for (std::size_t n = 0; n < shape.size(); ++n)
    if (n != mode) out.push_back(shape[n]);
  return out;
}

namespace {

// Row-major strides split around `mode`: linear = outer * (I_mode * inner) +
// i_mode * inner + rest, where inner = prod of extents after `mode`.
struct ModeSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

ModeSplit split_at(const Shape& shape, std::size_t mode) {
  if (mode >= shape.size()) {
    throw DimensionError("mode " + std::to_string(mode) + " out of range for order " +
                         std::to_string(shape.size()));
  }
  ModeSplit s;
  for (std::size_t n = 0; n < mode; ++n) s.outer *= shape[n];
  s.extent = shape[mode];
  for (std::size_t n = mode + 1; n < shape.size(); ++n) s.inner *= shape[n];
  return s;
}

}  // namespace

Matrix unfold(const DenseTensor& t, std::size_t mode) {
  const ModeSplit s = split_at(t.shape(), mode);
  Matrix m(s.extent, s.outer * s.inner);
  const auto data = t.data();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < s.extent; ++i)
      for (std::size_t r = 0; r < s.inner; ++r)
        m(i, o * s.inner + r) = data[(o * s.extent + i) * s.inner + r];
  return m;
}

DenseTensor fold(const Matrix& m, std::size_t mode, const Shape& shape) {
  const ModeSplit s = split_at(shape, mode);
  if (static_cast<std::size_t>(m.rows()) != s.extent ||
      static_cast<std::size_t>(m.cols()) != s.outer * s.inner) {
    throw DimensionError("fold: matrix does not match shape " + shape_to_string(shape));
  }
  DenseTensor t(shape);
  auto data = t.data();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < s.extent; ++i)
      for (std::size_t r = 0; r < s.inner; ++r)
        data[(o * s.extent + i) * s.inner + r] = m(i, o * s.inner + r);
  return t;
}

Vector vectorize(const DenseTensor& t) {
  return Eigen::Map<const Vector>(t.data().data(), static_cast<Eigen::Index>(t.size()));
}

DenseTensor devectorize(const Vector& v, const Shape& shape) {
  return DenseTensor(shape, std::vector<double>(v.data(), v.data() + v.size()));
}

DenseTensor mode_product(const DenseTensor& t, const Matrix& m, std::size_t mode) {
  const ModeSplit s = split_at(t.shape(), mode);
  if (static_cast<std::size_t>(m.cols()) != s.extent) {
    throw DimensionError("mode_product: matrix has " + std::to_string(m.cols()) +
                         " columns, mode extent is " + std::to_string(s.extent));
  }
  Shape out_shape = t.shape();
  out_shape[mode] = static_cast<std::size_t>(m.rows());
  return fold(m * unfold(t, mode), mode, out_shape);
}

double inner(const DenseTensor& a, const DenseTensor& b) {
  if (a.shape() != b.shape()) throw DimensionError("inner: shape mismatch");
  return vectorize(a).dot(vectorize(b));
}

double frobenius_norm(const DenseTensor& t) { return vectorize(t).norm(); }

}  // namespace tensor_lift
