#include "harnack/density.hpp"
#include "harnack/harnack_lab.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace harnack;

namespace {

Vector point(double x) { return Vector::Constant(1, x); }

Vector point2(double x, double y) {
  Vector v(2);
  v << x, y;
  return v;
}

}  // namespace

TEST_SUITE("density") {

TEST_CASE("Cauchy closed form") {
  const StableSpec cauchy(1, 1.0, 1.0 / oracle::pi);
  CHECK(stable_density(cauchy, 1.0, point(0.0)) == doctest::Approx(1.0 / oracle::pi).epsilon(1e-13));
  CHECK(stable_density(cauchy, 2.0, point(2.0)) == doctest::Approx(2.0 / (oracle::pi * 8.0)).epsilon(1e-13));
  double worst = 0.0;
  for (double t : {0.5, 1.0, 2.0}) {
    for (int k = 0; k <= 400; ++k) {
      const double x = -10.0 + 0.05 * k;
      const double ref = oracle::cauchy_1d(t, x);
      worst = std::max(worst, std::abs(stable_density(cauchy, t, point(x)) / ref - 1.0));
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("multivariate Cauchy closed form") {
  for (int d : {2, 3}) {
    const StableSpec s(d, 1.0, 0.6);
    const double kappa = 1.3 * s.symbol_coefficient();
    for (double r : {0.0, 0.01, 0.4, 1.0, 3.0, 25.0}) {
      CAPTURE(d);
      CAPTURE(r);
      Vector x = Vector::Zero(d);
      x(d - 1) = r;
      CHECK(stable_density(s, 1.3, x) == doctest::Approx(oracle::cauchy_nd(d, kappa, r)).epsilon(1e-11));
    }
  }
}

TEST_CASE("1-d densities against Fourier quadrature") {
  for (double a : {0.5, 0.8, 1.3, 1.5, 1.9}) {
    const StableSpec s(1, a, 0.7);
    for (double t : {0.3, 1.0}) {
      const double kappa = t * s.symbol_coefficient();
      for (double x : {0.0, 0.02, 0.5, 1.7, 6.0, 40.0}) {
        CAPTURE(a);
        CAPTURE(x);
        CHECK(stable_density(s, t, point(x)) == doctest::Approx(oracle::stable_1d_fourier(a, kappa, x)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("symmetry and rotation invariance") {
  const StableSpec s1(1, 1.3, 1.0);
  CHECK(stable_density(s1, 1.0, point(0.7)) == stable_density(s1, 1.0, point(-0.7)));
  const StableSpec s2(2, 0.7, 1.0);
  CHECK(stable_density(s2, 0.4, point2(0.6, 0.8)) == doctest::Approx(stable_density(s2, 0.4, point2(-1.0, 0.0))).epsilon(1e-14));
}

TEST_CASE("scaling law property") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ut(0.05, 5.0), ux(-8.0, 8.0);
  for (auto [d, a] : std::vector<std::pair<int, double>>{{1, 0.5}, {1, 1.5}, {2, 1.0}, {3, 1.2}}) {
    const StableSpec s(d, a, 1.0);
    for (int i = 0; i < 40; ++i) {
      const double t = ut(rng);
      Vector x(d);
      for (int k = 0; k < d; ++k) x(k) = ux(rng);
      const double lhs = stable_density(s, t, x);
      const double rhs = std::pow(t, -d / a) * stable_density(s, 1.0, std::pow(t, -1.0 / a) * x);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
  }
}

TEST_CASE("density integrates to one") {
  for (double a : {0.6, 1.0, 1.7}) {
    const StableSpec s(1, a, 1.0);
    // Mass on [-L, L] plus the series tail beyond.
    const double scale = std::pow(s.symbol_coefficient(), 1.0 / a);
    const double L = 30.0;
    auto f = [&](double x) { return stable_density(s, 1.0, point(x)); };
    const double inner = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -L, L, 12, 1e-12);
    const StableCdf1d cdf(a);
    const double tail = 2.0 * (1.0 - cdf(L / scale));
    CHECK(inner + tail == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("tail asymptotic") {
  const StableSpec cauchy(1, 1.0, 1.0 / oracle::pi);
  CHECK(tail_asymptotic(cauchy, 1.0, point(10.0)) == doctest::Approx(1.0 / (100.0 * oracle::pi)).epsilon(1e-14));
  double prev = 0.0;
  for (double x : {10.0, 100.0, 1000.0}) {
    const double r = tail_asymptotic(cauchy, 1.0, point(x)) / oracle::cauchy_1d(1.0, x);
    CHECK(std::abs(r - 1.0) < std::abs(prev - 1.0) + (prev == 0.0 ? 1.0 : 0.0));
    prev = r;
  }
  const StableSpec s(2, 1.5, 2.0);
  CHECK(tail_asymptotic(s, 1.0, point2(8.0, 0.0)) / tail_asymptotic(s, 1.0, point2(16.0, 0.0)) ==
        doctest::Approx(std::pow(2.0, 3.5)));
  CHECK(tail_asymptotic(s, 2.0, point2(8.0, 0.0)) == doctest::Approx(2.0 * tail_asymptotic(s, 1.0, point2(8.0, 0.0))));
  CHECK_THROWS(tail_asymptotic(s, 1.0, point2(1.0, 0.0)));
}

TEST_CASE("density methods agree across switch points") {
  for (int d : {1, 2}) {
    for (double a : {0.5, 1.0, 1.5, 1.9}) {
      for (double r : {0.2, 0.5, 1.0, 2.0, 4.0}) {
        const DensityValue lo = standard_stable_density(d, a, r * (1.0 - 1e-9));
        const DensityValue hi = standard_stable_density(d, a, r * (1.0 + 1e-9));
        CAPTURE(d);
        CAPTURE(a);
        CAPTURE(r);
        CHECK(lo.value == doctest::Approx(hi.value).epsilon(1e-7));
        CHECK_FALSE(lo.asymptotic());
        CHECK(lo.value > 0.0);
      }
    }
  }
}

TEST_CASE("large-r series consistency") {
  // The leading tail term times sigma tends to one.
  for (double a : {0.7, 1.3}) {
    const double r = 1e4;
    CHECK(standard_stable_density(1, a, r).value * std::pow(r, 1.0 + a) * oracle::sigma_closed(1, a) ==
          doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("stable CDF") {
  const StableCdf1d cauchy(1.0);
  for (double x : {-50.0, -3.0, -0.4, 0.0, 0.3, 2.0, 15.0, 60.0, 1e4}) {
    CAPTURE(x);
    CHECK(cauchy(x) == doctest::Approx(oracle::cauchy_cdf(x)).epsilon(1e-10));
  }
  for (double a : {0.5, 1.5}) {
    const StableCdf1d cdf(a);
    CHECK(cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
    double prev = 0.0;
    for (double x = -30.0; x <= 30.0; x += 0.37) {
      const double v = cdf(x);
      CHECK(v >= prev);
      CHECK(v + cdf(-x) == doctest::Approx(1.0).epsilon(1e-12));
      prev = v;
    }
    // Derivative matches the density.
    const double h = 1e-4, x = 1.3;
    CHECK((cdf(x + h) - cdf(x - h)) / (2 * h) == doctest::Approx(standard_stable_density(1, a, x).value).epsilon(1e-6));
  }
  CHECK(stable_upper_tail_series(0.5, 1e6) ==
        doctest::Approx(std::tgamma(0.5) * std::sin(0.25 * oracle::pi) / oracle::pi * 1e-3).epsilon(2e-3));
}

TEST_CASE("bound constants for Cauchy") {
  const StableSpec cauchy(1, 1.0, 1.0 / oracle::pi);
  SUBCASE("origin node") {
    const BoundConstants bc = estimate_bound_constants(cauchy, {1.0}, {point(0.0)});
    CHECK(bc.c1_hat == doctest::Approx(1.0 / oracle::pi));
    CHECK(bc.c1_hat == bc.c2_hat);
  }
  SUBCASE("full range") {
    const BoundConstants bc = fit_bound_constants_for(cauchy, 1e3);
    CHECK(bc.c1_hat == doctest::Approx(0.5 / oracle::pi).epsilon(1e-12));
    CHECK(bc.c2_hat == doctest::Approx(1.0 / oracle::pi).epsilon(1e-6));
  }
  SUBCASE("scaling consistency") {
    std::vector<Vector> xs, xs_scaled;
    for (double x : {0.0, 0.3, 1.0, 2.5, 9.0}) {
      xs.push_back(point(x));
      xs_scaled.push_back(point(x * 2.0));
    }
    const BoundConstants a = estimate_bound_constants(cauchy, {1.0}, xs);
    const BoundConstants b = estimate_bound_constants(cauchy, {2.0}, xs_scaled);
    CHECK(a.c1_hat == doctest::Approx(b.c1_hat).epsilon(1e-13));
    CHECK(a.c2_hat == doctest::Approx(b.c2_hat).epsilon(1e-13));
  }
}

TEST_CASE("bound ratio extrema include the kink and the endpoints") {
  const StableSpec s(2, 1.5, 1.0);
  const auto u = bound_ratio_extrema(s, 50.0);
  CHECK(std::find(u.begin(), u.end(), 0.0) != u.end());
  CHECK(std::find(u.begin(), u.end(), 1.0) != u.end());
  CHECK(std::find(u.begin(), u.end(), 50.0) != u.end());
}

TEST_CASE("bound shape") {
  CHECK(bound_shape(1.0, 0.0, 1, 1.0) == 1.0);
  CHECK(bound_shape(1.0, 2.0, 1, 1.0) == doctest::Approx(0.25));
  CHECK(bound_shape(0.5, 0.1, 2, 1.0) == doctest::Approx(4.0));
  CHECK(bound_shape<long double>(1.0L, 2.0L, 1, 1.0L) == doctest::Approx(0.25));
}

TEST_CASE("envelope fit") {
  const std::vector<double> w{0.0, 1.0, 2.0, 3.0}, v{1.0, 3.0, 2.0, 4.5};
  const Envelope up = fit_envelope(w, v, true);
  const Envelope lo = fit_envelope(w, v, false);
  for (std::size_t i = 0; i < w.size(); ++i) {
    CHECK(v[i] <= up.intercept + up.slope * w[i] + 1e-12);
    CHECK(v[i] >= lo.intercept + lo.slope * w[i] - 1e-12);
  }
  CHECK(up.slope >= 1e-9);
  // Exact line is its own envelope.
  const std::vector<double> line{2.0, 2.5, 3.0, 3.5};
  const Envelope e = fit_envelope(w, line, true);
  CHECK(e.slope == doctest::Approx(0.5));
  CHECK(e.intercept == doctest::Approx(2.0));
}

TEST_CASE("truncated density estimate") {
  const TruncatedStableSpec spec(1, 1.0, 1.0, 1.0);
  const DensityGrid est = truncated_density_estimate(spec, 0.5, 200000, {7, 0});
  CHECK(est.mass >= 0.98);
  CHECK(est.mass <= 1.02);
  int asymmetric = 0, checked = 0;
  for (double x = 0.05; x < 2.0; x += 0.1) {
    const double a = est.value_at(x), b = est.value_at(-x);
    const double se = std::hypot(est.std_err_at(x), est.std_err_at(-x));
    ++checked;
    if (std::abs(a - b) > 3.0 * se) ++asymmetric;
  }
  CHECK(asymmetric <= 1 + checked / 20);
  CHECK_THROWS(truncated_density_estimate(spec, 1.5, 200000, {7, 0}));
  CHECK_THROWS(truncated_density_estimate(spec, 0.5, 100, {7, 0}));
}

TEST_CASE("truncated estimate matches the stable density when r is large") {
  const TruncatedStableSpec spec(1, 1.0, 1.0, 1e3);
  const StableSpec stable(1, 1.0, 1.0);
  const DensityGrid est = truncated_density_estimate(spec, 0.5, 400000, {8, 0});
  for (double x : {-1.0, -0.5, 0.0, 0.25, 0.8}) {
    const double ref = stable_density(stable, 0.5, point(x));
    CAPTURE(x);
    CHECK(std::abs(est.value_at(x) - ref) <= 0.05 * ref + 3.0 * est.std_err_at(x));
  }
}

TEST_CASE("truncated bounds at the fit") {
  const TruncatedStableSpec spec(1, 1.0, 1.0, 1.0);
  std::vector<DensityGrid> ests;
  for (double t : {0.25, 0.5, 1.0}) ests.push_back(truncated_density_estimate(spec, t, 200000, {9, 0}));
  const TruncatedBoundConstants tb = check_truncated_bounds(spec, ests);
  CHECK(tb.near_violations == 0);
  CHECK(tb.tail_violations == 0);
  CHECK(tb.global_violations == 0);
  CHECK(std::isfinite(tb.c1));
  CHECK(tb.c2 > 0.0);
  CHECK(tb.c2 <= tb.c1);
  CHECK(tb.c4 > 0.0);

  SUBCASE("c7 at a single node") {
    DensityGrid one;
    one.t = 0.5;
    one.d = 1;
    one.points = Eigen::MatrixXd::Constant(1, 1, 0.3);
    one.values = Eigen::VectorXd::Constant(1, 0.4);
    const TruncatedBoundConstants single = check_truncated_bounds(spec, {one});
    CHECK(single.c7 == doctest::Approx(0.4 * 0.5));
  }
}

TEST_CASE("tail convexity rule") {
  auto grid = [](auto&& p) {
    DensityGrid g;
    g.t = 0.5;
    g.points.resize(801, 1);
    g.values.resize(801);
    for (int i = 0; i <= 800; ++i) {
      const double x = -4.0 + 0.01 * i;
      g.points(i, 0) = x;
      g.values(i) = p(std::abs(x));
    }
    return g;
  };
  // (t/|x|)^{|x|} up to a constant: -log p = |x| log(|x|/t) + 1 is convex
  const DensityGrid shaped = grid([](double x) { return std::exp(-1.0 - x * std::log(x / 0.5)); });
  const TailConvexity ok = tail_convexity_check(shaped, {1.5, 2.0, 3.0});
  CHECK(ok.passed);
  CHECK(ok.h[1] == doctest::Approx((1.0 + 2.0 * std::log(4.0)) / 2.0).epsilon(1e-3));
  // a pure exponential tail is linear, not superlinear
  CHECK_FALSE(tail_convexity_check(grid([](double x) { return std::exp(-2.0 * x); }), {1.5, 2.0, 3.0}).passed);
  // -log p / |x| need not be monotone for the check to pass
  const DensityGrid bulk = grid([](double x) { return std::exp(-0.1 - 0.3 * x * x); });
  const TailConvexity b = tail_convexity_check(bulk, {0.5, 0.6, 0.7});
  CHECK(b.h[1] < b.h[0]);
  CHECK(b.passed);
  CHECK_FALSE(tail_convexity_check(grid([](double) { return 0.0; }), {1.5, 2.0}).passed);
}

}
