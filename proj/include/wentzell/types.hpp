#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace wentzell {

/// Small vector in R^N, N in {1, 2}. Fixed capacity, no heap allocation.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 2, 1>;
/// N x N matrix with the same fixed capacity as Vec.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 2, 2>;

/// One value per grid node.
using Field = Eigen::VectorXd;
/// One value per boundary node, ordered as Grid::boundary_nodes().
using BoundaryField = Eigen::VectorXd;
/// One N-vector per cell; row c holds the vector of cell c.
using GradientField = Eigen::MatrixXd;

enum class ErrorCode {
  InvalidInput,
  Unbounded,
  NonConverged,
  BadConfig,
  Incompatible,
  Inapplicable,
  Parse,
  Validation,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace wentzell
