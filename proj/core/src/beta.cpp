#include "tensor_lift/beta.hpp"

#include <cmath>
#include <sstream>

namespace tensor_lift {

BetaPolicy BetaPolicy::parse(const std::string& text) {
  if (text == "auto") return {};
  if (text == "exact") return exact();
  if (text == "heuristic") return heuristic();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(v >= 1.0)) {
    throw std::invalid_argument("beta must be auto, exact, heuristic or a number >= 1, got '" + text + "'");
  }
  return fixed(v);
}

std::string BetaPolicy::to_string() const {
  switch (mode) {
    case Mode::automatic: return "auto";
    case Mode::exact: return "exact";
    case Mode::heuristic: return "heuristic";
    case Mode::fixed: {
      std::ostringstream os;
      os << value;
      return os.str();
    }
  }
  return "?";
}

double exact_beta(const Matrix& gram, const Matrix& masked_gram) {
  if (gram.rows() != masked_gram.rows() || gram.cols() != masked_gram.cols())
    throw DimensionError("exact_beta: Gram shapes differ");
  const Eigen::SelfAdjointEigenSolver<Matrix> masked(masked_gram, Eigen::EigenvaluesOnly);
  const double top = masked.eigenvalues().maxCoeff();
  const double bottom = masked.eigenvalues().minCoeff();
  if (!(top > 0.0) || bottom <= 1e-12 * top) {
    throw SingularMaskedGramError(
        "masked Gram matrix is singular; observe more entries or add ridge regularization");
  }
  const Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(gram, masked_gram, Eigen::EigenvaluesOnly);
  if (ges.info() != Eigen::Success) throw SolverError("generalised eigenvalue computation for beta failed");
  return std::max(1.0, ges.eigenvalues().maxCoeff());
}

double heuristic_beta(double observed_fraction) {
  if (!(observed_fraction > 0.0 && observed_fraction <= 1.0))
    throw std::invalid_argument("observation rate must lie in (0,1]");
  return 2.0 / observed_fraction;
}

double estimate_beta(const StructuredOperator& op, std::span<const std::size_t> omega) {
  const Matrix rows = op.gather_rows(omega);
  return exact_beta(op.gram(), rows.transpose() * rows);
}

double resolve_beta(const BetaPolicy& policy, const Matrix& gram, const Matrix& masked_gram, std::size_t rows,
                    std::size_t observed) {
  const double p = static_cast<double>(observed) / static_cast<double>(rows);
  switch (policy.mode) {
    case BetaPolicy::Mode::fixed:
      if (!(policy.value >= 1.0)) throw std::invalid_argument("beta must be >= 1");
      return policy.value;
    case BetaPolicy::Mode::exact:
      return exact_beta(gram, masked_gram);
    case BetaPolicy::Mode::heuristic:
      return heuristic_beta(p);
    case BetaPolicy::Mode::automatic:
      if (gram.rows() <= 64 && rows <= 100000) return exact_beta(gram, masked_gram);
      return policy.heuristic_safety * heuristic_beta(p);
  }
  return 1.0;
}

}  // namespace tensor_lift
