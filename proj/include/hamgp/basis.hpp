#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "hamgp/errors.hpp"

namespace hamgp {

// Axis-aligned box [-L_1, L_1] x ... x [-L_n, L_n] centred at the origin.
template <class Scalar>
struct DomainBoxT {
  Eigen::Vector<Scalar, Eigen::Dynamic> half_widths;  // L_i > 0

  Eigen::Index dim() const { return half_widths.size(); }
};
using DomainBox = DomainBoxT<double>;

// Which index tuples enter the dictionary.
//   None           every tuple.
//   AntiSymmetric  tuples whose product basis function flips sign under
//                  x -> -x: a sine factor with even index is odd about the
//                  centre, one with odd index is even, so the product flips
//                  exactly when the number of even indices is odd.
//   AllEvenIndices tuples with every index even. Config-selectable
//                  alternative; the product only flips sign when the state
//                  dimension itself is odd, so it does not enforce an odd
//                  function on even-dimensional states.
enum class SymmetryMode { None, AntiSymmetric, AllEvenIndices };

// Truncated sine dictionary on a centred box, ordered by Laplace eigenvalue.
template <class Scalar>
struct BasisExpansionT {
  DomainBoxT<Scalar> domain;
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> indices;  // M x n, >= 1
  Eigen::Vector<Scalar, Eigen::Dynamic> eigenvalues;  // non-decreasing
  SymmetryMode symmetry = SymmetryMode::None;

  Eigen::Index size() const { return indices.rows(); }
  Eigen::Index dim() const { return domain.dim(); }
};
using BasisExpansion = BasisExpansionT<double>;

// Squared-exponential kernel hyperparameters with a length scale common to
// every dimension.
template <class Scalar>
struct KernelHyperparamsT {
  Scalar signal_variance;  // sigma_f^2
  Scalar length_scale;     // ell
};
using KernelHyperparams = KernelHyperparamsT<double>;

namespace detail {

// sin and cos of pi*j*(x+L)/(2L) evaluated as sin/cos(z + j*pi/2) with
// z = pi*j*x/(2L). The quarter-turn offset is resolved from j mod 4, which
// keeps the trig argument small and makes the parity of each factor under
// x -> -x exact in floating point (libm sin is odd, cos is even, bitwise).
template <class Scalar>
struct TrigFactor {
  Scalar sin_part;
  Scalar cos_part;
};

template <class Scalar>
TrigFactor<Scalar> shifted_trig(int j, Scalar z) {
  using std::cos;
  using std::sin;
  switch (j & 3) {
    case 0:
      return {sin(z), cos(z)};
    case 1:
      return {cos(z), -sin(z)};
    case 2:
      return {-sin(z), -cos(z)};
    default:
      return {-cos(z), sin(z)};
  }
}

inline int count_even(const Eigen::Ref<const Eigen::RowVectorXi>& tuple) {
  int n = 0;
  for (Eigen::Index i = 0; i < tuple.size(); ++i) n += (tuple[i] % 2 == 0);
  return n;
}

inline bool admits(SymmetryMode mode,
                   const Eigen::Ref<const Eigen::RowVectorXi>& tuple) {
  switch (mode) {
    case SymmetryMode::None:
      return true;
    case SymmetryMode::AntiSymmetric:
      return count_even(tuple) % 2 == 1;
    case SymmetryMode::AllEvenIndices:
      return count_even(tuple) == static_cast<int>(tuple.size());
  }
  return false;
}

}  // namespace detail

// Laplace eigenvalue of one index tuple: sum_i (pi j_i / (2 L_i))^2.
template <class Scalar>
Scalar tuple_eigenvalue(const DomainBoxT<Scalar>& domain,
                        const Eigen::Ref<const Eigen::RowVectorXi>& tuple) {
  const Scalar pi = std::numbers::pi_v<Scalar>;
  Scalar acc = 0;
  for (Eigen::Index i = 0; i < domain.dim(); ++i) {
    const Scalar w = pi * Scalar(tuple[i]) / (2 * domain.half_widths[i]);
    acc += w * w;
  }
  return acc;
}

// Enumerates index tuples in {1..max_index_per_dim}^n, keeps the ones the
// symmetry mode admits, orders them by eigenvalue (ties broken
// lexicographically) and returns the first n_basis. Throws ConfigError when
// the admissible dictionary is too small.
template <class Scalar>
BasisExpansionT<Scalar> build_expansion(const DomainBoxT<Scalar>& domain,
                                        Eigen::Index n_basis,
                                        SymmetryMode symmetry =
                                            SymmetryMode::None,
                                        int max_index_per_dim = 12) {
  const Eigen::Index n = domain.dim();
  if (n < 1) throw ConfigError("domain must have at least one dimension");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(domain.half_widths[i] > 0))
      throw ConfigError("domain half width " + std::to_string(i) +
                        " must be positive");
  if (n_basis < 1) throw ConfigError("n_basis must be at least 1");
  if (max_index_per_dim < 1)
    throw ConfigError("max_index_per_dim must be at least 1");

  double total = std::pow(static_cast<double>(max_index_per_dim),
                          static_cast<double>(n));
  if (total > 1e7)
    throw ConfigError("index enumeration too large: " +
                      std::to_string(max_index_per_dim) + "^" +
                      std::to_string(n) + " tuples");

  std::vector<Eigen::RowVectorXi> admitted;
  Eigen::RowVectorXi tuple = Eigen::RowVectorXi::Ones(n);
  for (;;) {
    if (detail::admits(symmetry, tuple)) admitted.push_back(tuple);
    // odometer increment, last dimension fastest
    Eigen::Index pos = n - 1;
    for (;;) {
      if (++tuple[pos] <= max_index_per_dim) break;
      tuple[pos] = 1;
      if (pos-- == 0) break;
    }
    if (pos == static_cast<Eigen::Index>(-1)) break;
  }

  if (static_cast<Eigen::Index>(admitted.size()) < n_basis)
    throw ConfigError(
        "requested " + std::to_string(n_basis) + " basis functions but only " +
        std::to_string(admitted.size()) + " index tuples are admissible with "
        "max_index_per_dim = " + std::to_string(max_index_per_dim));

  std::vector<Scalar> eigs(admitted.size());
  for (std::size_t k = 0; k < admitted.size(); ++k)
    eigs[k] = tuple_eigenvalue<Scalar>(domain, admitted[k]);

  std::vector<std::size_t> order(admitted.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (eigs[a] != eigs[b]) return eigs[a] < eigs[b];
    return std::lexicographical_compare(
        admitted[a].data(), admitted[a].data() + n, admitted[b].data(),
        admitted[b].data() + n);
  });

  BasisExpansionT<Scalar> out;
  out.domain = domain;
  out.symmetry = symmetry;
  out.indices.resize(n_basis, n);
  out.eigenvalues.resize(n_basis);
  for (Eigen::Index k = 0; k < n_basis; ++k) {
    out.indices.row(k) = admitted[order[k]];
    out.eigenvalues[k] = eigs[order[k]];
  }
  return out;
}

// phi(x): component k is prod_i (1/sqrt(L_i)) sin(pi j_ki (x_i+L_i)/(2 L_i)).
// Evaluation outside the box is permitted; callers that care track it.
template <class Scalar, class Derived>
Eigen::Vector<Scalar, Eigen::Dynamic> eval_basis(
    const BasisExpansionT<Scalar>& basis,
    const Eigen::MatrixBase<Derived>& x) {
  using std::sqrt;
  const Eigen::Index n = basis.dim();
  if (x.size() != n) throw ArgumentError("eval_basis: state dimension mismatch");
  const Scalar pi = std::numbers::pi_v<Scalar>;

  Eigen::Vector<Scalar, Eigen::Dynamic> phi(basis.size());
  for (Eigen::Index k = 0; k < basis.size(); ++k) {
    Scalar prod = 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int j = basis.indices(k, i);
      const Scalar L = basis.domain.half_widths[i];
      const Scalar z = pi * Scalar(j) * x[i] / (2 * L);
      prod *= detail::shifted_trig(j, z).sin_part / sqrt(L);
    }
    phi[k] = prod;
  }
  return phi;
}

// Jacobian of phi: entry (i, k) is d phi_k / d x_i, an n x M matrix.
template <class Scalar, class Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> eval_basis_jacobian(
    const BasisExpansionT<Scalar>& basis,
    const Eigen::MatrixBase<Derived>& x) {
  using std::sqrt;
  const Eigen::Index n = basis.dim();
  if (x.size() != n)
    throw ArgumentError("eval_basis_jacobian: state dimension mismatch");
  const Scalar pi = std::numbers::pi_v<Scalar>;

  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> jac(n, basis.size());
  Eigen::Vector<Scalar, Eigen::Dynamic> s(n), d(n);
  for (Eigen::Index k = 0; k < basis.size(); ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const int j = basis.indices(k, i);
      const Scalar L = basis.domain.half_widths[i];
      const Scalar z = pi * Scalar(j) * x[i] / (2 * L);
      const auto f = detail::shifted_trig(j, z);
      const Scalar norm = Scalar(1) / sqrt(L);
      s[i] = norm * f.sin_part;
      d[i] = norm * (pi * Scalar(j) / (2 * L)) * f.cos_part;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      Scalar prod = d[i];
      for (Eigen::Index i2 = 0; i2 < n; ++i2)
        if (i2 != i) prod *= s[i2];
      jac(i, k) = prod;
    }
  }
  return jac;
}

// Spectral density of the squared-exponential kernel at radial frequency
// omega in n_dims dimensions:
//   S(omega) = sigma_f^2 (2 pi ell^2)^(n/2) exp(-ell^2 omega^2 / 2).
template <class Scalar>
Scalar spectral_density_se(const KernelHyperparamsT<Scalar>& hyper,
                           Scalar omega, Eigen::Index n_dims) {
  using std::exp;
  using std::pow;
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar ell2 = hyper.length_scale * hyper.length_scale;
  return hyper.signal_variance *
         pow(2 * pi * ell2, Scalar(n_dims) / 2) *
         exp(-ell2 * omega * omega / 2);
}

// Prior covariance of the basis weights: diag(S(sqrt(eigenvalue_k))).
template <class Scalar>
Eigen::DiagonalMatrix<Scalar, Eigen::Dynamic> prior_weight_covariance(
    const BasisExpansionT<Scalar>& basis,
    const KernelHyperparamsT<Scalar>& hyper) {
  using std::sqrt;
  Eigen::Vector<Scalar, Eigen::Dynamic> diag(basis.size());
  for (Eigen::Index k = 0; k < basis.size(); ++k)
    diag[k] =
        spectral_density_se(hyper, sqrt(basis.eigenvalues[k]), basis.dim());
  return Eigen::DiagonalMatrix<Scalar, Eigen::Dynamic>(diag);
}

// Truncated kernel approximation sum_k S(sqrt(eig_k)) phi_k(x) phi_k(x').
template <class Scalar, class D1, class D2>
Scalar approx_kernel(const BasisExpansionT<Scalar>& basis,
                     const KernelHyperparamsT<Scalar>& hyper,
                     const Eigen::MatrixBase<D1>& x,
                     const Eigen::MatrixBase<D2>& xp) {
  const auto v = prior_weight_covariance(basis, hyper);
  const auto phi_x = eval_basis(basis, x);
  const auto phi_xp = eval_basis(basis, xp);
  return phi_x.dot(v.diagonal().cwiseProduct(phi_xp));
}

}  // namespace hamgp
