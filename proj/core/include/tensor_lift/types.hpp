#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tensor_lift {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Shape = std::vector<std::size_t>;
using MultiIndex = std::vector<std::size_t>;

/// Shapes, modes or ranks that do not fit together.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Reading or writing one of the binary containers failed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine could not produce a result (singular masked Gram,
/// degenerate sampling distribution, violated solver precondition).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The observed rows of a subproblem do not determine it (A_Omega^T A_Omega
/// is singular), so beta is unbounded.
class SingularMaskedGramError : public SolverError {
 public:
  using SolverError::SolverError;
};

/// Product of all entries; 1 for an empty shape.
std::size_t element_count(const Shape& shape);

std::string shape_to_string(const Shape& shape);

}  // namespace tensor_lift
