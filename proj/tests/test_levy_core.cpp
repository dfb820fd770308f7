#include "harnack/levy_core.hpp"
#include "harnack/matrix_exp.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <random>

using namespace harnack;

TEST_SUITE("levy_core") {

TEST_CASE("sigma matches the 1-d quadrature oracle") {
  CHECK(compute_sigma(1, 1.0) == doctest::Approx(oracle::pi).epsilon(1e-12));
  for (double a : {0.5, 1.0, 1.5, 1.99}) {
    CAPTURE(a);
    const double ref = oracle::sigma_1d_quadrature(a);
    CHECK(compute_sigma(1, a) == doctest::Approx(ref).epsilon(1e-9));
    CHECK(compute_sigma(1, a) > 0.0);
  }
}

TEST_CASE("sigma matches the Gamma closed form in higher dimensions") {
  for (int d : {2, 3, 5}) {
    for (double a : {0.3, 1.0, 1.7}) {
      CAPTURE(d);
      CAPTURE(a);
      CHECK(compute_sigma(d, a) == doctest::Approx(oracle::sigma_closed(d, a)).epsilon(1e-10));
    }
  }
}

TEST_CASE("sigma blows up like 1/(2 - alpha)") {
  const double s1 = compute_sigma(1, 1.99), s2 = compute_sigma(1, 1.999);
  CHECK(s2 / s1 == doctest::Approx(10.0).epsilon(0.02));
}

TEST_CASE("stable symbol") {
  const StableSpec cauchy(1, 1.0, 1.0 / oracle::pi);
  CHECK(symbol(cauchy, Vector::Zero(1)) == 0.0);
  CHECK(symbol(cauchy, Vector::Constant(1, 2.0)) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(symbol(cauchy, Vector::Constant(1, -2.0)) == doctest::Approx(2.0).epsilon(1e-12));

  const StableSpec s(3, 1.4, 0.7);
  Vector xi(3);
  xi << 0.3, -1.2, 0.5;
  CHECK(symbol(s, xi) == doctest::Approx(0.7 * oracle::sigma_closed(3, 1.4) * std::pow(xi.norm(), 1.4)).epsilon(1e-10));
}

TEST_CASE("truncated symbol against direct quadrature") {
  for (double a : {0.5, 1.0, 1.5}) {
    const TruncatedStableSpec s(1, a, 0.8, 1.3);
    for (double k : {0.1, 1.0, 7.5}) {
      CAPTURE(a);
      CAPTURE(k);
      CHECK(symbol(s, Vector::Constant(1, k)) ==
            doctest::Approx(oracle::truncated_symbol_1d(a, 0.8, 1.3, k)).epsilon(1e-9));
    }
  }
}

TEST_CASE("truncated symbol is quadratic at the origin") {
  const double a = 1.2, c = 0.9, r = 1.5;
  const TruncatedStableSpec s(1, a, c, r);
  const double k = 1e-3;
  const double limit = c * std::pow(r, 2.0 - a) / (2.0 - a);
  CHECK(symbol(s, Vector::Constant(1, k)) / (k * k) == doctest::Approx(limit).epsilon(1e-5));
  // A stable symbol is not quadratic: the ratio diverges.
  const StableSpec st(1, a, c);
  CHECK(symbol(st, Vector::Constant(1, k)) / (k * k) > 100.0 * limit);
}

TEST_CASE("truncated symbol in two dimensions is below the stable one") {
  const TruncatedStableSpec tr(2, 1.0, 1.0, 1.0);
  const StableSpec st(2, 1.0, 1.0);
  for (double k : {0.5, 2.0, 20.0}) {
    Vector xi(2);
    xi << k, 0.0;
    CHECK(symbol(tr, xi) < symbol(st, xi));
    CHECK(symbol(tr, xi) > 0.0);
  }
}

TEST_CASE("c0 against quadrature oracles") {
  CHECK(compute_c0(0.0, 1) == doctest::Approx(0.479623484001).epsilon(1e-11));
  CHECK(compute_c0(0.0, 1) == doctest::Approx(oracle::c0_1d(1.0)).epsilon(1e-12));
  CHECK(compute_c0(0.0, 2) == doctest::Approx(oracle::c0_2d(1.0)).epsilon(1e-12));
  for (double a : {0.25, 0.5, 1.0, 2.0}) {
    CAPTURE(a);
    CHECK(compute_c0(a, 1) == doctest::Approx(oracle::c0_1d(std::exp(-a))).epsilon(1e-11));
    CHECK(compute_c0(a, 2) == doctest::Approx(oracle::c0_2d(std::exp(-a))).epsilon(1e-11));
  }
  CHECK(compute_c0(40.0, 1) < 1e-30);
  CHECK(compute_c0(1.0, 3) > 0.0);
}

TEST_CASE("split_levy_measure") {
  const StableSpec floor(1, 1.0, 0.5);
  SUBCASE("exact stable leaves nothing") {
    DominatingLevySpec spec{[](double rho) { return 0.5 * std::pow(rho, -2.0); }, floor, "exact"};
    CHECK(split_levy_measure(spec).identically_zero);
  }
  SUBCASE("twice the floor leaves the floor") {
    DominatingLevySpec spec{[](double rho) { return 1.0 * std::pow(rho, -2.0); }, floor, "double"};
    const ResidualDensity res = split_levy_measure(spec);
    CHECK_FALSE(res.identically_zero);
    for (double rho : {1e-3, 0.5, 7.0}) CHECK(res.density(rho) == doctest::Approx(0.5 * std::pow(rho, -2.0)));
  }
  SUBCASE("truncation fails domination beyond r") {
    DominatingLevySpec spec{[](double rho) { return rho <= 1.0 ? 0.5 * std::pow(rho, -2.0) : 0.0; }, floor, "cut"};
    try {
      split_levy_measure(spec);
      FAIL("expected a domination error");
    } catch (const DominationError& e) {
      CHECK(e.radius() > 1.0);
    }
  }
}

TEST_CASE("mu hat") {
  const StableSpec cauchy(1, 1.0, 1.0 / oracle::pi);
  const OUSpec free(Matrix::Zero(1, 1), cauchy);
  CHECK(compute_mu_hat(free, Vector::Zero(1), 1.0).modulus == 1.0);
  CHECK(compute_mu_hat(free, Vector::Constant(1, 1.0), 2.0).modulus == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  CHECK(compute_mu_hat(free, Vector::Constant(1, 1.0), 2.0).phase == 0.0);

  SUBCASE("A = -1 against time quadrature") {
    const StableSpec s(1, 1.5, 0.8);
    const OUSpec ou(Matrix::Constant(1, 1, -1.0), s);
    for (double t : {0.3, 1.0, 2.5}) {
      for (double k : {0.5, 3.0}) {
        auto integrand = [&](double u) { return s.symbol_coefficient() * std::pow(std::exp(-u) * k, 1.5); };
        const double ref = std::exp(-boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, t));
        CHECK(compute_mu_hat(ou, Vector::Constant(1, k), t).modulus == doctest::Approx(ref).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("matrix exponential") {
  CHECK(matrix_exp(Matrix::Zero(3, 3)).isApprox(Matrix::Identity(3, 3), 0.0));
  const Matrix diag = -Matrix::Identity(2, 2);
  const Matrix e = matrix_exp(diag, 1.0);
  CHECK(e(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(e(0, 1) == 0.0);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 20; ++rep) {
    Matrix a(3, 3);
    for (int i = 0; i < 9; ++i) a.data()[i] = normal(rng);
    a *= 2.0 / operator_norm(a) * std::uniform_real_distribution<double>(0.1, 1.0)(rng);
    const double s = 0.7, t = 1.3;
    const Matrix lhs = matrix_exp(a, s + t);
    const Matrix rhs = matrix_exp(a, s) * matrix_exp(a, t);
    CHECK((lhs - rhs).norm() <= 1e-12 * lhs.norm());
  }
}

TEST_CASE("spec validation") {
  CHECK_THROWS(StableSpec(0, 1.0, 1.0));
  CHECK_THROWS(StableSpec(1, 2.0, 1.0));
  CHECK_THROWS(StableSpec(1, 1.0, -1.0));
  CHECK_THROWS(TruncatedStableSpec(1, 1.0, 1.0, 0.0));
  CHECK_THROWS(OUSpec(Matrix::Zero(2, 2), StableSpec(1, 1.0, 1.0)));
}

}
