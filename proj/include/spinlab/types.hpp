#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace spinlab {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using complexd = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Error taxonomy. ShapeError: malformed arguments (dimensions, invalid
// specs). NumericalError: well-formed input on which the requested
// computation is not defined or did not converge (degenerate form,
// non-joinable pair, logarithm chart failure, fit divergence).
struct SpinlabError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : SpinlabError {
  using SpinlabError::SpinlabError;
};
struct NumericalError : SpinlabError {
  using SpinlabError::SpinlabError;
};

}  // namespace spinlab
