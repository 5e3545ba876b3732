#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "hamgp/basis.hpp"

using namespace hamgp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Oracle: the product formula written out directly, without the quarter-turn
// argument reduction used by eval_basis.
double direct_component(const BasisExpansion& basis, Eigen::Index k,
                        const VectorXd& x) {
  double prod = 1.0;
  for (Eigen::Index i = 0; i < basis.dim(); ++i) {
    const double L = basis.domain.half_widths[i];
    const int j = basis.indices(k, i);
    prod *= std::sin(std::numbers::pi * j * (x[i] + L) / (2.0 * L)) /
            std::sqrt(L);
  }
  return prod;
}

// Oracle: central finite differences of eval_basis.
MatrixXd fd_jacobian(const BasisExpansion& basis, const VectorXd& x,
                     double step) {
  MatrixXd jac(basis.dim(), basis.size());
  for (Eigen::Index i = 0; i < basis.dim(); ++i) {
    VectorXd xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    jac.row(i) =
        ((eval_basis(basis, xp) - eval_basis(basis, xm)) / (2.0 * step))
            .transpose();
  }
  return jac;
}

DomainBox box(std::initializer_list<double> widths) {
  DomainBox d;
  d.half_widths = Eigen::Map<const VectorXd>(std::data(widths),
                                             static_cast<Eigen::Index>(
                                                 widths.size()));
  return d;
}

VectorXd random_point(const DomainBox& d, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  VectorXd x(d.dim());
  for (Eigen::Index i = 0; i < d.dim(); ++i)
    x[i] = unit(gen) * d.half_widths[i];
  return x;
}

}  // namespace

TEST_CASE("first eigenvalue on a square box") {
  auto basis = build_expansion(box({8.0, 8.0}), 1);
  const double unit = std::pow(std::numbers::pi / 16.0, 2);
  CHECK(basis.indices.row(0) == Eigen::RowVector2i(1, 1));
  CHECK(basis.eigenvalues[0] == doctest::Approx(2.0 * unit).epsilon(1e-14));
  CHECK(basis.eigenvalues[0] == doctest::Approx(0.0771).epsilon(1e-3));
}

TEST_CASE("eigenvalue ordering breaks ties lexicographically") {
  auto basis = build_expansion(box({8.0, 8.0}), 4);
  CHECK(basis.indices.row(0) == Eigen::RowVector2i(1, 1));
  CHECK(basis.indices.row(1) == Eigen::RowVector2i(1, 2));
  CHECK(basis.indices.row(2) == Eigen::RowVector2i(2, 1));
  CHECK(basis.indices.row(3) == Eigen::RowVector2i(2, 2));
  CHECK(basis.eigenvalues[1] == basis.eigenvalues[2]);
}

TEST_CASE("interval eigenvalues follow the squared index") {
  auto basis = build_expansion(box({1.0}), 3);
  const double base = std::pow(std::numbers::pi / 2.0, 2);
  for (int k = 0; k < 3; ++k) {
    CHECK(basis.indices(k, 0) == k + 1);
    CHECK(basis.eigenvalues[k] ==
          doctest::Approx(base * (k + 1) * (k + 1)).epsilon(1e-14));
  }
}

TEST_CASE("eigenvalues recompute bit for bit from stored indices") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> width(0.5, 9.0);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Index n = 1 + rep % 3;
    DomainBox d;
    d.half_widths = VectorXd::NullaryExpr(n, [&](Eigen::Index) {
      return width(gen);
    });
    auto basis = build_expansion(d, 5 + rep % 7);
    for (Eigen::Index k = 0; k < basis.size(); ++k) {
      CHECK(basis.eigenvalues[k] ==
            tuple_eigenvalue<double>(d, basis.indices.row(k)));
      if (k > 0) CHECK(basis.eigenvalues[k] >= basis.eigenvalues[k - 1]);
    }
  }
}

TEST_CASE("dictionary shortfall is reported with counts") {
  CHECK_THROWS_WITH_AS(build_expansion(box({1.0}), 5, SymmetryMode::None, 2),
                       doctest::Contains("only 2 index tuples"), ConfigError);
  CHECK_THROWS_AS(build_expansion(box({-1.0}), 1), ConfigError);
  CHECK_THROWS_AS(build_expansion(box({1.0}), 0), ConfigError);
}

TEST_CASE("basis values at centre and boundary") {
  auto one = build_expansion(box({1.0}), 2);
  VectorXd centre = VectorXd::Zero(1);
  auto phi = eval_basis(one, centre);
  CHECK(phi[0] == 1.0);  // sin(pi/2)
  CHECK(phi[1] == 0.0);  // sin(pi)

  auto square = build_expansion(box({8.0, 8.0}), 1);
  VectorXd corner(2);
  corner << 8.0, 8.0;
  CHECK(std::abs(eval_basis(square, corner)[0]) < 1e-15);
}

TEST_CASE("argument reduction agrees with the direct product formula") {
  std::mt19937_64 gen(11);
  auto basis = build_expansion(box({8.0, 8.0}), 20);
  for (int rep = 0; rep < 100; ++rep) {
    VectorXd x = 1.5 * random_point(basis.domain, gen);  // also outside
    auto phi = eval_basis(basis, x);
    for (Eigen::Index k = 0; k < basis.size(); ++k)
      CHECK(phi[k] == doctest::Approx(direct_component(basis, k, x))
                          .epsilon(1e-12));
  }
}

TEST_CASE("jacobian of the first interval mode at the left edge") {
  auto basis = build_expansion(box({1.0}), 1);
  VectorXd x(1);
  x << -1.0;
  auto jac = eval_basis_jacobian(basis, x);
  CHECK(jac(0, 0) ==
        doctest::Approx(std::numbers::pi / 2.0).epsilon(1e-14));
}

TEST_CASE("jacobian matches finite differences of the basis") {
  std::mt19937_64 gen(13);
  const double step = 1e-5;
  auto check_expansion = [&](const BasisExpansion& basis, int n_points) {
    for (int rep = 0; rep < n_points; ++rep) {
      VectorXd x = random_point(basis.domain, gen);
      MatrixXd jac = eval_basis_jacobian(basis, x);
      MatrixXd ref = fd_jacobian(basis, x, step);
      for (Eigen::Index i = 0; i < jac.rows(); ++i)
        for (Eigen::Index k = 0; k < jac.cols(); ++k) {
          const double tol = std::max(1e-6 * std::abs(jac(i, k)), 1e-9);
          CHECK(std::abs(jac(i, k) - ref(i, k)) <= tol);
        }
    }
  };
  check_expansion(build_expansion(box({8.0, 8.0}), 20), 200);
  check_expansion(build_expansion(box({1.0}), 3), 200);
  check_expansion(
      build_expansion(box({8.0, 8.0}), 15, SymmetryMode::AntiSymmetric), 200);
}

TEST_CASE("spectral density closed-form values") {
  KernelHyperparams unit{1.0, 1.0};
  CHECK(spectral_density_se(unit, 0.0, 1) ==
        doctest::Approx(std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-14));
  CHECK(spectral_density_se(unit, 0.0, 2) ==
        doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-14));
  CHECK(spectral_density_se(unit, 1.0, 2) ==
        doctest::Approx(2.0 * std::numbers::pi * std::exp(-0.5))
            .epsilon(1e-14));
  CHECK(spectral_density_se(unit, 1.0, 2) ==
        doctest::Approx(3.8110).epsilon(1e-3));

  KernelHyperparams hyper{2.0, 0.5};
  const double expected = 2.0 * (2.0 * std::numbers::pi * 0.25) *
                          std::exp(-0.25 * 4.0 / 2.0);
  CHECK(spectral_density_se(hyper, 2.0, 2) ==
        doctest::Approx(expected).epsilon(1e-14));
  CHECK(spectral_density_se(hyper, 2.0, 2) ==
        doctest::Approx(1.9055).epsilon(1e-3));
}

TEST_CASE("weight prior diagonal is the spectral density at mode frequency") {
  auto basis = build_expansion(box({8.0, 8.0}), 12);
  KernelHyperparams hyper{1.3, 0.7};
  auto v = prior_weight_covariance(basis, hyper);
  REQUIRE(v.rows() == 12);
  for (Eigen::Index k = 0; k < basis.size(); ++k) {
    CHECK(v.diagonal()[k] ==
          spectral_density_se(hyper, std::sqrt(basis.eigenvalues[k]), 2));
    CHECK(v.diagonal()[k] > 0.0);
    if (k > 0) CHECK(v.diagonal()[k] <= v.diagonal()[k - 1]);
  }
}

TEST_CASE("truncated kernel approaches the squared exponential") {
  KernelHyperparams hyper{1.0, 1.0};
  auto basis = build_expansion(box({20.0}), 256, SymmetryMode::None, 300);
  VectorXd a(1), b(1);
  a << 0.3;
  b << -0.2;
  const double exact = std::exp(-0.125);
  CHECK(std::abs(approx_kernel(basis, hyper, a, b) - exact) < 1e-3);

  // truncation error shrinks as the dictionary grows
  auto sup_error = [&](Eigen::Index m) {
    auto small = build_expansion(box({10.0}), m, SymmetryMode::None, 300);
    double worst = 0.0;
    for (double xa = -2.0; xa <= 2.0; xa += 0.5)
      for (double xb = -2.0; xb <= 2.0; xb += 0.5) {
        VectorXd va(1), vb(1);
        va << xa;
        vb << xb;
        const double truth = std::exp(-0.5 * (xa - xb) * (xa - xb));
        worst = std::max(worst,
                         std::abs(approx_kernel(small, hyper, va, vb) - truth));
      }
    return worst;
  };
  CHECK(sup_error(256) <= sup_error(16));
  CHECK(sup_error(256) < 1e-3);
}

TEST_CASE("admitted index tuples respect the symmetry mode") {
  auto anti =
      build_expansion(box({8.0, 8.0}), 15, SymmetryMode::AntiSymmetric);
  for (Eigen::Index k = 0; k < anti.size(); ++k) {
    int evens = (anti.indices(k, 0) % 2 == 0) + (anti.indices(k, 1) % 2 == 0);
    CHECK(evens % 2 == 1);
  }
  auto even =
      build_expansion(box({8.0, 8.0}), 6, SymmetryMode::AllEvenIndices);
  for (Eigen::Index k = 0; k < even.size(); ++k) {
    CHECK(even.indices(k, 0) % 2 == 0);
    CHECK(even.indices(k, 1) % 2 == 0);
  }
}

TEST_CASE("antisymmetric dictionary flips sign exactly under negation") {
  std::mt19937_64 gen(17);
  auto basis =
      build_expansion(box({8.0, 8.0}), 15, SymmetryMode::AntiSymmetric);
  for (int rep = 0; rep < 100; ++rep) {
    VectorXd x = random_point(basis.domain, gen);
    VectorXd plus = eval_basis(basis, x);
    VectorXd minus = eval_basis(basis, VectorXd(-x));
    MatrixXd jp = eval_basis_jacobian(basis, x);
    MatrixXd jm = eval_basis_jacobian(basis, VectorXd(-x));
    for (Eigen::Index k = 0; k < basis.size(); ++k) {
      CHECK(minus[k] == -plus[k]);
      CHECK(jm(0, k) == jp(0, k));
      CHECK(jm(1, k) == jp(1, k));
    }
  }
}

TEST_CASE("all-even mode is odd on intervals but even on the plane") {
  std::mt19937_64 gen(19);
  auto line = build_expansion(box({2.0}), 4, SymmetryMode::AllEvenIndices);
  auto plane =
      build_expansion(box({2.0, 2.0}), 4, SymmetryMode::AllEvenIndices);
  for (int rep = 0; rep < 20; ++rep) {
    VectorXd x1 = random_point(line.domain, gen);
    CHECK(eval_basis(line, VectorXd(-x1)) == VectorXd(-eval_basis(line, x1)));
    VectorXd x2 = random_point(plane.domain, gen);
    CHECK(eval_basis(plane, VectorXd(-x2)) == eval_basis(plane, x2));
  }
}

TEST_CASE("evaluation outside the box stays finite") {
  auto basis = build_expansion(box({8.0, 8.0}), 10);
  VectorXd x(2);
  x << 16.0, -20.0;
  CHECK(eval_basis(basis, x).allFinite());
  CHECK(eval_basis_jacobian(basis, x).allFinite());
}

TEST_CASE("dimension mismatch is rejected") {
  auto basis = build_expansion(box({8.0, 8.0}), 3);
  VectorXd x(3);
  x.setZero();
  CHECK_THROWS_AS(eval_basis(basis, x), ArgumentError);
  CHECK_THROWS_AS(eval_basis_jacobian(basis, x), ArgumentError);
}
