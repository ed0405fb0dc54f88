#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace elastscat {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using CVec3 = Eigen::Vector3cd;
using CMat3 = Eigen::Matrix3cd;
using VecX = Eigen::VectorXd;
using CVecX = Eigen::VectorXcd;
using MatX = Eigen::MatrixXd;
using CMatX = Eigen::MatrixXcd;
using cplx = std::complex<double>;

/// Execution policy for the data-parallel kernels. Every parallel kernel has
/// a serial twin that computes bit-identical results; tests compare the two
/// and the bench target times them against each other.
enum class Exec { serial, parallel };

/// Solver failure carrying the per-iteration residual history.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& msg, std::vector<double> history = {})
      : std::runtime_error(msg), residual_history(std::move(history)) {}
  std::vector<double> residual_history;
};

/// Scatterer placement cannot satisfy the requested minimum-distance bound.
class InfeasibleError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace elastscat
