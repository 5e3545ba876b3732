#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "hamgp/errors.hpp"
#include "hamgp/gaussian.hpp"

namespace hamgp {

// One hyperparameter with an independent Gaussian prior in a declared
// coordinate. Positive quantities (variances, length scales, damping) use
// the log coordinate so random walks stay in range; an identity coordinate
// is allowed, in which case structural validity guards must catch negative
// proposals.
struct CoordSpec {
  std::string name;
  bool log_scale = true;
  double prior_mean = 0.0;  // in the declared coordinate
  double prior_std = 10.0;  // broad default
};

struct HyperPrior {
  std::vector<CoordSpec> coords;

  Eigen::Index size() const {
    return static_cast<Eigen::Index>(coords.size());
  }

  void check(const Eigen::VectorXd& v) const {
    if (v.size() != size())
      throw ArgumentError("hyperprior: expected " + std::to_string(size()) +
                          " coordinates, got " + std::to_string(v.size()));
    for (const CoordSpec& c : coords)
      if (!(c.prior_std > 0.0))
        throw ConfigError("hyperprior: '" + c.name +
                          "' needs a positive prior standard deviation");
  }

  // log prior density evaluated in the declared coordinates
  double log_density(const Eigen::VectorXd& coord_values) const {
    check(coord_values);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < size(); ++i) {
      const CoordSpec& c = coords[static_cast<std::size_t>(i)];
      const double z = (coord_values[i] - c.prior_mean) / c.prior_std;
      acc += -0.5 * (kLogTwoPi + z * z) - std::log(c.prior_std);
    }
    return acc;
  }

  Eigen::VectorXd to_coords(const Eigen::VectorXd& natural) const {
    check(natural);
    Eigen::VectorXd out(natural.size());
    for (Eigen::Index i = 0; i < natural.size(); ++i) {
      if (coords[static_cast<std::size_t>(i)].log_scale) {
        if (!(natural[i] > 0.0))
          throw ArgumentError("hyperprior: '" +
                              coords[static_cast<std::size_t>(i)].name +
                              "' must be positive in the log coordinate");
        out[i] = std::log(natural[i]);
      } else {
        out[i] = natural[i];
      }
    }
    return out;
  }

  Eigen::VectorXd to_natural(const Eigen::VectorXd& coord_values) const {
    check(coord_values);
    Eigen::VectorXd out(coord_values.size());
    for (Eigen::Index i = 0; i < coord_values.size(); ++i)
      out[i] = coords[static_cast<std::size_t>(i)].log_scale
                   ? std::exp(coord_values[i])
                   : coord_values[i];
    return out;
  }

  Eigen::VectorXd prior_mean_coords() const {
    Eigen::VectorXd out(size());
    for (Eigen::Index i = 0; i < size(); ++i)
      out[i] = coords[static_cast<std::size_t>(i)].prior_mean;
    return out;
  }
};

}  // namespace hamgp
