#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace hamgp {

// One entry of a structure matrix: either a constant or a named structural
// hyperparameter slot scaled by +-1 (e.g. "d" or "-d").
struct PatternEntry {
  double constant = 0.0;
  std::string slot;  // empty means the entry is the constant
  double scale = 1.0;

  bool is_slot() const { return !slot.empty(); }
};

// Dense matrix of pattern entries, row major.
struct MatrixPattern {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<PatternEntry> entries;

  PatternEntry& at(Eigen::Index r, Eigen::Index c) {
    return entries[static_cast<std::size_t>(r * cols + c)];
  }
  const PatternEntry& at(Eigen::Index r, Eigen::Index c) const {
    return entries[static_cast<std::size_t>(r * cols + c)];
  }

  static MatrixPattern constant(const Eigen::MatrixXd& m);

  // Throws ConfigError when a slot has no value.
  Eigen::MatrixXd instantiate(const std::map<std::string, double>& values)
      const;

  void collect_slots(std::set<std::string>& out) const;
};

// Port-Hamiltonian structure x' = (J - R) grad H + G u with named slots for
// the unknown structural hyperparameters.
struct SystemStructure {
  MatrixPattern interconnection;  // J, n_x x n_x, skew-symmetric
  MatrixPattern dissipation;      // R, n_x x n_x, symmetric PSD
  MatrixPattern input_map;        // G, n_x x n_u
  std::map<std::string, double> values;  // current slot binding

  Eigen::Index state_dim() const { return interconnection.rows; }
  Eigen::Index input_dim() const { return input_map.cols; }
  std::set<std::string> slots() const;
};

// Instantiated structure matrices for one structural draw.
struct SystemMatrices {
  Eigen::MatrixXd J;
  Eigen::MatrixXd R;
  Eigen::MatrixXd G;
  Eigen::MatrixXd drift_gain;  // J - R
};

// Validates skew symmetry of J and positive semidefiniteness of R
// (eigenvalues >= -1e-12 scaled). Returns nullopt on violation; throws
// ConfigError on unbound slots or inconsistent dimensions.
std::optional<SystemMatrices> try_instantiate(
    const SystemStructure& structure,
    const std::map<std::string, double>& values);

// As above but throws NumericalError instead of returning nullopt.
SystemMatrices instantiate(const SystemStructure& structure,
                           const std::map<std::string, double>& values);
SystemMatrices instantiate(const SystemStructure& structure);

}  // namespace hamgp
