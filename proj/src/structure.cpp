#include "hamgp/structure.hpp"

#include <Eigen/Eigenvalues>
#include <string>

#include "hamgp/errors.hpp"

namespace hamgp {

MatrixPattern MatrixPattern::constant(const Eigen::MatrixXd& m) {
  MatrixPattern p;
  p.rows = m.rows();
  p.cols = m.cols();
  p.entries.resize(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      p.at(r, c).constant = m(r, c);
  return p;
}

Eigen::MatrixXd MatrixPattern::instantiate(
    const std::map<std::string, double>& values) const {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      const PatternEntry& e = at(r, c);
      if (!e.is_slot()) {
        m(r, c) = e.constant;
        continue;
      }
      auto it = values.find(e.slot);
      if (it == values.end())
        throw ConfigError("structural hyperparameter slot '" + e.slot +
                          "' has no value");
      m(r, c) = e.scale * it->second;
    }
  return m;
}

void MatrixPattern::collect_slots(std::set<std::string>& out) const {
  for (const PatternEntry& e : entries)
    if (e.is_slot()) out.insert(e.slot);
}

std::set<std::string> SystemStructure::slots() const {
  std::set<std::string> out;
  interconnection.collect_slots(out);
  dissipation.collect_slots(out);
  input_map.collect_slots(out);
  return out;
}

namespace {

std::string violation_message(const char* what, double worst) {
  return std::string("instantiated structure violates ") + what +
         " (worst deviation " + std::to_string(worst) + ")";
}

}  // namespace

std::optional<SystemMatrices> try_instantiate(
    const SystemStructure& structure,
    const std::map<std::string, double>& values) {
  const Eigen::Index n = structure.state_dim();
  if (structure.interconnection.cols != n || structure.dissipation.rows != n ||
      structure.dissipation.cols != n || structure.input_map.rows != n)
    throw ConfigError("structure matrices have inconsistent dimensions");

  SystemMatrices m;
  m.J = structure.interconnection.instantiate(values);
  m.R = structure.dissipation.instantiate(values);
  m.G = structure.input_map.instantiate(values);

  const double j_scale = std::max(1.0, m.J.cwiseAbs().maxCoeff());
  if ((m.J + m.J.transpose()).cwiseAbs().maxCoeff() > 1e-12 * j_scale)
    return std::nullopt;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (m.R + m.R.transpose()), Eigen::EigenvaluesOnly);
  const double r_scale = std::max(1.0, m.R.cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -1e-12 * r_scale) return std::nullopt;

  m.drift_gain = m.J - m.R;
  return m;
}

SystemMatrices instantiate(const SystemStructure& structure,
                           const std::map<std::string, double>& values) {
  auto m = try_instantiate(structure, values);
  if (m) return *m;
  // recompute the diagnostics for the message
  Eigen::MatrixXd j = structure.interconnection.instantiate(values);
  const double skew = (j + j.transpose()).cwiseAbs().maxCoeff();
  if (skew > 1e-12 * std::max(1.0, j.cwiseAbs().maxCoeff()))
    throw NumericalError(violation_message("skew symmetry of J", skew));
  Eigen::MatrixXd r = structure.dissipation.instantiate(values);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (r + r.transpose()), Eigen::EigenvaluesOnly);
  throw NumericalError(violation_message("positive semidefiniteness of R",
                                         es.eigenvalues().minCoeff()));
}

SystemMatrices instantiate(const SystemStructure& structure) {
  return instantiate(structure, structure.values);
}

}  // namespace hamgp
