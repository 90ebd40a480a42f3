#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace infact {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using IntVector = VectorX<int>;
using Index = Eigen::Index;

/// Raised when a distribution or model is given parameters outside its domain.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical kernel cannot proceed (e.g. a matrix that should be
/// positive definite is not).  `min_eigenvalue` carries the smallest
/// eigenvalue estimate when one was computed, NaN otherwise.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what,
                        double min_eigenvalue = std::numeric_limits<double>::quiet_NaN())
      : std::runtime_error(what), min_eigenvalue_(min_eigenvalue) {}

  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

}  // namespace infact
