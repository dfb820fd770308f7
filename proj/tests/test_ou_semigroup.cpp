#include "harnack/ou_semigroup.hpp"
#include "harnack/stats.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace harnack;
using namespace harnack::stats;

TEST_SUITE("ou_semigroup") {

TEST_CASE("test functions") {
  const Vector c = Vector::Zero(2);
  const TestFunction ball = TestFunction::ball_indicator(c, 1.0);
  Vector in(2), out(2);
  in << 0.6, 0.6;
  out << 0.8, 0.8;
  CHECK(ball(in) == 1.0);
  CHECK(ball(out) == 0.0);
  CHECK(ball.power(3.0)(in) == 1.0);
  const TestFunction bump = TestFunction::gaussian_bump(c, 2.0, 1.0);
  CHECK(bump(in) == doctest::Approx(1.0 + std::exp(-0.72 / 8.0)));
  CHECK(bump.log()(in) == doctest::Approx(std::log(1.0 + std::exp(-0.72 / 8.0))));
  CHECK(bump.infimum() == 1.0);
  CHECK_THROWS(ball.log());
  const TestFunction cap = TestFunction::exp_cap(10.0);
  CHECK(cap(out) == doctest::Approx(std::exp(out.norm())));
  CHECK(cap(Vector::Constant(2, 5.0)) == 10.0);
  CHECK(cap.power(2.0)(out) == doctest::Approx(std::exp(2.0 * out.norm())));
  const TestFunction shifted = ball.shifted(Vector::Constant(2, 1.0));
  CHECK(shifted(Vector::Constant(2, -1.0)) == 1.0);
  CHECK(TestFunction::constant(3.0)(in) == 3.0);
  CHECK(ball.tag() != bump.tag());
}

TEST_CASE("default step count") {
  const StableSpec s(1, 1.0, 1.0);
  CHECK(default_steps(OUSpec(Matrix::Zero(1, 1), s), 2.0) == 1);
  CHECK(default_steps(OUSpec(Matrix::Constant(1, 1, -0.5), s), 2.0) == 50);
}

TEST_CASE("A = 0 endpoint is the increment") {
  const StableSpec s(1, 1.0, 1.0 / oracle::pi);
  const OUSpec spec(Matrix::Zero(1, 1), s);
  const SampleMatrix x = sample_ou(spec, Vector::Constant(1, 0.0), {0, 1.0}, 100000, {1, 0});
  std::vector<double> v(x.data(), x.data() + x.size());
  CHECK(ks_one_sample(v, [](double u) { return oracle::cauchy_cdf(u); }).p_value > 0.01);
}

TEST_CASE("no residual mass leaves the deterministic flow") {
  ResidualDensity zero;
  zero.d = 2;
  zero.identically_zero = true;
  zero.density = [](double) { return 0.0; };
  Matrix a(2, 2);
  a << -1.0, 0.3, 0.0, -0.5;
  const OUSpec spec(a, zero);
  Vector x0(2);
  x0 << 1.0, -2.0;
  const SampleMatrix x = sample_ou(spec, x0, {0, 1.5}, 100, {2, 0});
  const Vector expected = matrix_exp(a, 1.5) * x0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) CHECK((x.row(i).transpose() - expected).norm() < 1e-14);
}

TEST_CASE("shifting the start shifts the mean by the flow") {
  const StableSpec s(1, 1.5, 1.0);
  const OUSpec spec(Matrix::Constant(1, 1, -0.8), s);
  const std::size_t n = 50000;
  const SampleMatrix a = sample_ou(spec, Vector::Constant(1, 0.0), {0, 1.0}, n, {3, 0});
  const SampleMatrix b = sample_ou(spec, Vector::Constant(1, 2.0), {0, 1.0}, n, {4, 0});
  std::vector<double> va(a.data(), a.data() + n), vb(b.data(), b.data() + n);
  const double shift = mean(vb) - mean(va);
  const double se = std::sqrt(variance(va) / n + variance(vb) / n);
  CHECK(std::abs(shift - 2.0 * std::exp(-0.8)) <= 3.0 * se);
}

TEST_CASE("OU characteristic function") {
  const StableSpec s(1, 1.2, 1.0);
  const OUSpec spec(Matrix::Constant(1, 1, -1.0), s);
  const SampleMatrix x = sample_ou_convolution(spec, {0, 1.0}, 100000, {5, 0});
  for (double k : {0.5, 1.5}) {
    const CfEstimate cf = empirical_cf(x, Vector::Constant(1, k));
    CHECK(std::abs(cf.value - compute_mu_hat(spec, Vector::Constant(1, k), 1.0).modulus) <= 3.0 * cf.std_err + 5e-3);
  }
}

TEST_CASE("semigroup estimates") {
  const StableSpec s(1, 1.0, 1.0 / oracle::pi);
  const OUSpec spec(Matrix::Zero(1, 1), s);
  const std::size_t n = 100000;
  const SemigroupEstimate one = estimate_Ptf(spec, TestFunction::constant(1.0), Vector::Zero(1), 1.0, n, {6, 0});
  CHECK(one.mean == 1.0);
  CHECK(one.std_err == 0.0);
  const TestFunction ball = TestFunction::ball_indicator(Vector::Zero(1), 1.0);
  const SemigroupEstimate e = estimate_Ptf(spec, ball, Vector::Zero(1), 1.0, n, {6, 0});
  CHECK(std::abs(e.mean - 0.5) <= 3.0 * e.std_err);
  const SemigroupEstimate wide = estimate_Ptf(spec, TestFunction::ball_indicator(Vector::Zero(1), 2.0), Vector::Zero(1),
                                              1.0, n, {6, 0});
  CHECK(e.mean <= wide.mean + 3.0 * std::hypot(e.std_err, wide.std_err));
  const SemigroupSampler sampler(spec, 1.0, n, {6, 0});
  CHECK(sampler.estimate(ball, Vector::Zero(1)).mean == e.mean);
}

TEST_CASE("factorization check") {
  const StableSpec s2(2, 1.3, 1.0);
  std::vector<Vector> probes;
  for (int k = 0; k < 10; ++k) {
    Vector xi(2);
    xi << 0.3 * (k + 1), -0.1 * k;
    probes.push_back(xi);
  }
  SUBCASE("A = 0 is the stable symbol") {
    const OUSpec spec(Matrix::Zero(2, 2), s2);
    const FactorizationReport rep = factorization_check(spec, 1.0, probes);
    CHECK(rep.passed);
    for (const auto& p : rep.probes) {
      const double expected = std::exp(-(symbol(s2, p.xi) - 1.0 * rep.c0 * std::pow(p.xi.norm(), 1.3)));
      CHECK(p.pi_hat == doctest::Approx(expected).epsilon(1e-10));
    }
  }
  SUBCASE("random drift with norm 0.5") {
    Matrix a(2, 2);
    a << 0.2, -0.7, 0.4, -0.3;
    a *= 0.5 / operator_norm(a);
    const FactorizationReport rep = factorization_check(OUSpec(a, s2), 0.5, probes);
    CHECK(rep.passed);
    CHECK(rep.max_excess <= 1e-8);
  }
  SUBCASE("zero frequency") {
    const FactorizationReport rep = factorization_check(OUSpec(Matrix::Zero(2, 2), s2), 1.0, {Vector::Zero(2)});
    CHECK(rep.probes[0].mu_hat == 1.0);
    CHECK(rep.probes[0].pi_hat == 1.0);
  }
  CHECK_THROWS(factorization_check(OUSpec(Matrix::Zero(1, 1), TruncatedStableSpec(1, 1.0, 1.0, 1.0)), 1.0, {}));
  CHECK_THROWS(factorization_check(OUSpec(Matrix::Zero(2, 2), s2), 2.0, probes));
}

}
