#include "harnack/density.hpp"
#include "harnack/sampling.hpp"
#include "harnack/stats.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace harnack;
using namespace harnack::stats;

namespace {

std::vector<double> column(const SampleMatrix& m, int j = 0) {
  std::vector<double> out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[i] = m(i, j);
  return out;
}

}  // namespace

TEST_SUITE("sampling") {

TEST_CASE("Kolmogorov distribution") {
  CHECK(kolmogorov_survival(1.36) == doctest::Approx(0.049).epsilon(0.02));
  CHECK(kolmogorov_survival(1.63) == doctest::Approx(0.0098).epsilon(0.03));
  CHECK(kolmogorov_survival(0.0) == 1.0);
}

TEST_CASE("KS detects a wrong distribution") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  std::vector<double> x(20000);
  for (auto& v : x) v = normal(rng);
  CHECK(ks_one_sample(x, [](double v) { return 0.5 * std::erfc(-v / std::sqrt(2.0)); }).p_value > 0.01);
  CHECK(ks_one_sample(x, [](double v) { return oracle::cauchy_cdf(v); }).p_value < 1e-6);
}

TEST_CASE("CMS Cauchy samples") {
  const std::size_t n = 100000;
  const Eigen::VectorXd x = sample_sym_stable_1d(1.0, 1.0, n, {3, 0});
  std::vector<double> v(x.begin(), x.end());
  const double below = std::count_if(v.begin(), v.end(), [](double s) { return s <= 0.0; }) / double(n);
  CHECK(std::abs(below - 0.5) <= 3.0 / std::sqrt(double(n)));
  CHECK(ks_one_sample(v, [](double s) { return oracle::cauchy_cdf(s); }).p_value > 0.01);
  const Eigen::VectorXd y = sample_sym_stable_1d(1.0, 2.5, n, {4, 0});
  std::vector<double> w(y.begin(), y.end());
  CHECK(ks_one_sample(w, [](double s) { return oracle::cauchy_cdf(s, 2.5); }).p_value > 0.01);
}

TEST_CASE("CMS near the Gaussian limit") {
  const std::size_t n = 100000;
  const Eigen::VectorXd x = sample_sym_stable_1d(1.99, 1.0, n, {5, 0});
  std::vector<double> clipped;
  for (double v : x) {
    if (std::abs(v) < 10.0) clipped.push_back(v);
  }
  // exp(-xi^2) is the N(0, 2) characteristic function.
  CHECK(variance(clipped) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("positive stable Laplace transform") {
  const double beta = 0.6;
  const Eigen::VectorXd s = sample_positive_stable(beta, 200000, {6, 0});
  CHECK((s.array() > 0.0).all());
  for (double lambda : {0.3, 1.0, 2.5}) {
    const Eigen::ArrayXd e = (-lambda * s.array()).exp();
    const double mean = e.mean();
    const double se = std::sqrt((e - mean).square().mean() / e.size());
    CHECK(std::abs(mean - std::exp(-std::pow(lambda, beta))) < 4.0 * se);
  }
}

TEST_CASE("rotationally invariant samples") {
  const StableSpec s1(1, 1.0, 1.0 / oracle::pi);
  const SampleMatrix x = sample_rot_stable(s1, 1.0, 100000, {10, 0});
  const Eigen::VectorXd y = sample_sym_stable_1d(1.0, rot_stable_scale(s1, 1.0), 100000, {11, 0});
  const auto a = column(x);
  std::vector<double> b(y.begin(), y.end());
  CHECK(ks_two_sample(a, b).p_value > 0.01);

  const StableSpec s2(2, 1.3, 0.8);
  const SampleMatrix z = sample_rot_stable(s2, 0.7, 200000, {12, 0});
  CHECK(empirical_cf(z, Vector::Zero(2)).value == 1.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * oracle::pi);
  for (int k = 0; k < 5; ++k) {
    Vector xi(2);
    xi << 0.9, 0.4;
    const double th = angle(rng);
    Eigen::Matrix2d rot;
    rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    const CfEstimate c1 = empirical_cf(z, xi);
    const CfEstimate c2 = empirical_cf(z, rot * xi);
    CHECK(std::abs(c1.value - c2.value) <= 3.0 * std::hypot(c1.std_err, c2.std_err));
  }
  std::vector<Vector> probes;
  for (double k : {0.2, 0.5, 1.0, 2.0}) {
    Vector xi(2);
    xi << k, -0.5 * k;
    probes.push_back(xi);
  }
  CHECK(check_rot_stable_calibration(s2, 0.7, probes, 200000, {13, 0}).passed);
}

TEST_CASE("samples do not depend on the thread count") {
  const StableSpec s(3, 1.5, 1.0);
  const SampleMatrix a = sample_rot_stable(s, 1.0, 10000, {14, 2}, 1);
  const SampleMatrix b = sample_rot_stable(s, 1.0, 10000, {14, 2}, 4);
  CHECK(a == b);
  const TruncatedStableSpec tr(2, 1.0, 1.0, 1.0);
  CHECK(sample_truncated_stable(tr, 0.5, 0.05, 9000, {15, 0}, 1) == sample_truncated_stable(tr, 0.5, 0.05, 9000, {15, 0}, 3));
  CHECK_FALSE(sample_rot_stable(s, 1.0, 100, {14, 2}) == sample_rot_stable(s, 1.0, 100, {14, 3}));
}

TEST_CASE("jump decomposition closed forms") {
  const TruncatedStableSpec spec(1, 1.0, 1.0, 1.0);
  const JumpDecomposition j = make_jump_decomposition(spec, 0.5);
  CHECK(j.poisson_intensity == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(j.gaussian_sd_per_coord == doctest::Approx(1.0).epsilon(1e-12));
  const JumpDecomposition full = make_jump_decomposition(spec, 1.0 - 1e-12);
  CHECK(full.poisson_intensity < 1e-10);
  CHECK(full.gaussian_sd_per_coord == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(default_epsilon(spec, 0.5) == doctest::Approx(0.05));
}

TEST_CASE("truncated samples") {
  const TruncatedStableSpec spec(1, 1.2, 1.0, 0.8);
  const double t = 0.6;
  const std::size_t n = 100000;
  const SampleMatrix x = sample_truncated_stable(spec, t, default_epsilon(spec, t), n, {16, 0});
  const auto v = column(x);
  CHECK(std::abs(mean(v)) <= 3.0 * std::sqrt(variance(v) / n));
  for (double k : {0.3, 0.8, 1.5, 3.0, 6.0}) {
    const CfEstimate cf = empirical_cf(x, Vector::Constant(1, k));
    const double ref = std::exp(-t * symbol(spec, Vector::Constant(1, k)));
    CAPTURE(k);
    CHECK(std::abs(cf.value - ref) <= 3.0 * cf.std_err + 2e-3);
  }
}

TEST_CASE("residual samples") {
  SUBCASE("zero residual") {
    ResidualDensity zero;
    zero.d = 2;
    zero.identically_zero = true;
    zero.density = [](double) { return 0.0; };
    const SampleMatrix x = sample_residual(zero, 1.0, 1e-3, 1000, {17, 0});
    CHECK(x.isZero(0.0));
  }
  SUBCASE("residual equal to the floor") {
    const StableSpec floor(1, 1.0, 0.5);
    const DominatingLevySpec dom{[](double rho) { return 1.0 * std::pow(rho, -2.0); }, floor, ""};
    const ResidualDensity res = split_levy_measure(dom);
    const double t = 0.5;
    const ResidualJumpLaw law = make_residual_jump_law(res, 0.01);
    std::vector<long> counts;
    const std::size_t n = 100000;
    const SampleMatrix x = sample_residual(law, t, n, {18, 0}, 1, &counts);
    for (double k : {0.5, 1.0, 2.0, 4.0}) {
      const CfEstimate cf = empirical_cf(x, Vector::Constant(1, k));
      const double ref = std::exp(-t * symbol(floor, Vector::Constant(1, k)));
      CAPTURE(k);
      CHECK(std::abs(cf.value - ref) <= 3.0 * cf.std_err + 2e-3);
    }
    std::vector<double> c(counts.begin(), counts.end());
    CHECK(std::abs(mean(c) - t * law.intensity) <= 3.0 * std::sqrt(t * law.intensity / n));
  }
  SUBCASE("mass beyond the table is rejected") {
    ResidualDensity heavy;
    heavy.d = 1;
    heavy.density = [](double rho) { return std::pow(rho, -1.0001); };
    CHECK_THROWS_AS(make_residual_jump_law(heavy, 1e-3, 10.0), std::runtime_error);
  }
}

TEST_CASE("substreams are distinct") {
  const SeedSpec root{42, 0};
  CHECK(substream(root, 1).stream_id != substream(root, 2).stream_id);
  auto e1 = make_engine(root, 0), e2 = make_engine(root, 1);
  CHECK(e1() != e2());
}

}
