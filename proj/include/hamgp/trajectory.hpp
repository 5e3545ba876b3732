#pragma once

#include <Eigen/Core>

namespace hamgp {

// One latent draw z_{0:T}: row t holds x_t (states) and h_t (gradient
// observations). Both matrices are (T+1) x n_x.
struct LatentTrajectory {
  Eigen::MatrixXd states;
  Eigen::MatrixXd gradients;

  Eigen::Index steps() const { return states.rows() - 1; }  // T
  Eigen::Index state_dim() const { return states.cols(); }

  bool same_shape() const {
    return states.rows() == gradients.rows() &&
           states.cols() == gradients.cols();
  }
};

}  // namespace hamgp
