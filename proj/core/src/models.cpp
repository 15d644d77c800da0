#include "tensor_lift/models.hpp"

#include <cmath>

namespace tensor_lift {

namespace {

Shape factor_rows(const std::vector<Matrix>& factors) {
  Shape s;
  for (const auto& f : factors) s.push_back(static_cast<std::size_t>(f.rows()));
  return s;
}

Eigen::Map<const RowMatrix> as_rows(const DenseTensor& t, Eigen::Index rows, Eigen::Index cols) {
  return {t.data().data(), rows, cols};
}

}  // namespace

Shape CPModel::shape() const { return factor_rows(factors); }

void CPModel::validate() const {
  if (factors.empty()) throw DimensionError("CP model needs at least one factor");
  for (const auto& f : factors) {
    if (f.cols() != weights.size()) throw DimensionError("CP factor column count differs from rank");
    if (f.rows() == 0) throw DimensionError("CP factor with zero rows");
  }
  if (weights.size() == 0) throw DimensionError("CP rank must be positive");
}

void CPModel::normalize() {
  for (Eigen::Index r = 0; r < weights.size(); ++r) {
    double scale = weights[r];
    bool zero = false;
    for (auto& f : factors) {
      const double n = f.col(r).norm();
      if (n == 0.0) {
        zero = true;
        continue;
      }
      f.col(r) /= n;
      scale *= n;
    }
    weights[r] = zero ? 0.0 : std::abs(scale);
    if (!zero && scale < 0.0) factors.front().col(r) *= -1.0;
  }
}

Shape TuckerModel::shape() const { return factor_rows(factors); }

void TuckerModel::validate() const {
  if (factors.size() != core.order()) throw DimensionError("Tucker: one factor per core mode required");
  for (std::size_t n = 0; n < factors.size(); ++n) {
    if (static_cast<std::size_t>(factors[n].cols()) != core.dim(n))
      throw DimensionError("Tucker factor " + std::to_string(n) + " does not match core rank");
  }
}

Shape TTModel::shape() const {
  Shape s;
  for (const auto& c : cores) s.push_back(c.dim(1));
  return s;
}

Shape TTModel::ranks() const {
  Shape r;
  for (std::size_t n = 0; n + 1 < cores.size(); ++n) r.push_back(cores[n].dim(2));
  return r;
}

void TTModel::validate() const {
  if (cores.empty()) throw DimensionError("TT model needs at least one core");
  for (std::size_t n = 0; n < cores.size(); ++n) {
    if (cores[n].order() != 3) throw DimensionError("TT cores must be third-order");
    if (n + 1 < cores.size() && cores[n].dim(2) != cores[n + 1].dim(0))
      throw DimensionError("TT ranks of adjacent cores disagree at " + std::to_string(n));
  }
  if (cores.front().dim(0) != 1 || cores.back().dim(2) != 1)
    throw DimensionError("TT boundary ranks must be 1");
}

ModelKind kind_of(const Model& model) { return static_cast<ModelKind>(model.index()); }

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::cp: return "cp";
    case ModelKind::tucker: return "tucker";
    case ModelKind::tt: return "tt";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& text) {
  if (text == "cp") return ModelKind::cp;
  if (text == "tucker") return ModelKind::tucker;
  if (text == "tt") return ModelKind::tt;
  throw std::invalid_argument("unknown model kind '" + text + "'");
}

Shape model_shape(const Model& model) {
  return std::visit([](const auto& m) { return m.shape(); }, model);
}

DenseTensor reconstruct(const CPModel& model) {
  model.validate();
  const Shape shape = model.shape();
  const auto R = static_cast<Eigen::Index>(model.rank());
  // prefix(j, r) = weights_r * prod over the leading modes of the factor rows,
  // with j the row-major index of the leading modes.
  RowMatrix prefix = model.weights.transpose();
  for (std::size_t n = 0; n + 1 < shape.size(); ++n) {
    const Matrix& f = model.factors[n];
    RowMatrix next(prefix.rows() * f.rows(), R);
    for (Eigen::Index j = 0; j < prefix.rows(); ++j)
      for (Eigen::Index i = 0; i < f.rows(); ++i)
        next.row(j * f.rows() + i) = prefix.row(j).cwiseProduct(f.row(i));
    prefix = std::move(next);
  }
  const RowMatrix full = prefix * model.factors.back().transpose();
  return DenseTensor(shape, std::vector<double>(full.data(), full.data() + full.size()));
}

DenseTensor reconstruct(const TuckerModel& model) {
  model.validate();
  DenseTensor t = model.core;
  for (std::size_t n = 0; n < model.factors.size(); ++n) t = mode_product(t, model.factors[n], n);
  return t;
}

Matrix tt_left_chain(const std::vector<DenseTensor>& cores, std::size_t mode) {
  RowMatrix left = RowMatrix::Ones(1, 1);
  for (std::size_t k = 0; k < mode; ++k) {
    const DenseTensor& c = cores[k];
    const auto r0 = static_cast<Eigen::Index>(c.dim(0));
    const auto in = static_cast<Eigen::Index>(c.dim(1));
    const auto r1 = static_cast<Eigen::Index>(c.dim(2));
    RowMatrix prod = left * as_rows(c, r0, in * r1);
    left = Eigen::Map<RowMatrix>(prod.data(), prod.rows() * in, r1);
  }
  return left;
}

Matrix tt_right_chain(const std::vector<DenseTensor>& cores, std::size_t mode) {
  RowMatrix right = RowMatrix::Ones(1, 1);
  for (std::size_t k = cores.size(); k-- > mode + 1;) {
    const DenseTensor& c = cores[k];
    const auto r0 = static_cast<Eigen::Index>(c.dim(0));
    const auto in = static_cast<Eigen::Index>(c.dim(1));
    const auto r1 = static_cast<Eigen::Index>(c.dim(2));
    // (r0*in x r1) * (r1 x J) -> r0 x (in*J), row-major reshape keeps i_k slower than the tail.
    RowMatrix prod = as_rows(c, r0 * in, r1) * right;
    right = Eigen::Map<RowMatrix>(prod.data(), r0, in * prod.cols());
  }
  return right;
}

DenseTensor reconstruct(const TTModel& model) {
  model.validate();
  const Matrix left = tt_left_chain(model.cores, model.cores.size());
  return DenseTensor(model.shape(), std::vector<double>(left.data(), left.data() + left.size()));
}

DenseTensor reconstruct(const Model& model) {
  return std::visit([](const auto& m) { return reconstruct(m); }, model);
}

std::optional<double> rre(const DenseTensor& estimate, const DenseTensor& truth,
                          const ObservationMask* mask) {
  if (estimate.shape() != truth.shape()) throw DimensionError("rre: shape mismatch");
  double num = 0.0;
  double den = 0.0;
  auto accumulate = [&](std::size_t i) {
    const double d = estimate[i] - truth[i];
    num += d * d;
    den += truth[i] * truth[i];
  };
  if (mask) {
    if (mask->shape() != truth.shape()) throw DimensionError("rre: mask shape mismatch");
    for (auto i : mask->indices()) accumulate(i);
  } else {
    for (std::size_t i = 0; i < truth.size(); ++i) accumulate(i);
  }
  if (den == 0.0) return std::nullopt;
  return std::sqrt(num / den);
}

std::optional<double> rre(const Model& model, const DenseTensor& truth, const ObservationMask* mask) {
  return rre(reconstruct(model), truth, mask);
}

}  // namespace tensor_lift
