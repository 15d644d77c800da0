#pragma once

#include "tensor_lift/mask.hpp"
#include "tensor_lift/tensor.hpp"

#include <optional>
#include <variant>

namespace tensor_lift {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// CP model: x_{i_1..i_N} = sum_r weights_r * prod_n factors[n](i_n, r).
struct CPModel {
  Vector weights;
  std::vector<Matrix> factors;

  std::size_t rank() const { return static_cast<std::size_t>(weights.size()); }
  Shape shape() const;
  void validate() const;
  /// Moves column norms into the weights so every nonzero factor column has
  /// unit 2-norm. Zero columns stay zero and get weight 0.
  void normalize();
};

/// Tucker model: X = core x_1 A^(1) x_2 ... x_N A^(N).
struct TuckerModel {
  DenseTensor core;
  std::vector<Matrix> factors;

  Shape shape() const;
  Shape ranks() const { return core.shape(); }
  void validate() const;
};

/// Tensor-train model; core n has shape (R_{n-1}, I_n, R_n), R_0 = R_N = 1.
struct TTModel {
  std::vector<DenseTensor> cores;

  Shape shape() const;
  /// Interior ranks R_1..R_{N-1}.
  Shape ranks() const;
  void validate() const;
};

using Model = std::variant<CPModel, TuckerModel, TTModel>;

enum class ModelKind { cp, tucker, tt };

ModelKind kind_of(const Model& model);
const char* to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);
Shape model_shape(const Model& model);

DenseTensor reconstruct(const CPModel& model);
DenseTensor reconstruct(const TuckerModel& model);
DenseTensor reconstruct(const TTModel& model);
DenseTensor reconstruct(const Model& model);

/// Left interface of a TT at `mode`: rows run over (i_0..i_{mode-1}) in
/// row-major order, columns over R_{mode-1}. A 1x1 one-matrix when mode = 0.
Matrix tt_left_chain(const std::vector<DenseTensor>& cores, std::size_t mode);
/// Right interface: R_mode x prod_{k>mode} I_k. A 1x1 one-matrix for the last mode.
Matrix tt_right_chain(const std::vector<DenseTensor>& cores, std::size_t mode);

/// ||(estimate - truth)_Omega||_F / ||truth_Omega||_F, over all entries when
/// `mask` is null. Returns nullopt when the reference norm is zero.
std::optional<double> rre(const DenseTensor& estimate, const DenseTensor& truth,
                          const ObservationMask* mask = nullptr);
std::optional<double> rre(const Model& model, const DenseTensor& truth,
                          const ObservationMask* mask = nullptr);

}  // namespace tensor_lift
