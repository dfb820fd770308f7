#pragma once

#include "harnack/levy_core.hpp"
#include "harnack/sampling.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace harnack {

/// How a density value was obtained.
enum class DensityMethod { origin, large_r_series, small_r_series, inversion, asymptotic };

struct DensityValue {
  double value = 0.0;
  DensityMethod method = DensityMethod::inversion;
  bool clamped = false;  // a negative quadrature value was set to 0

  bool asymptotic() const { return method == DensityMethod::asymptotic; }
};

/// Density at radius r of the law with characteristic function exp(-|xi|^alpha) in R^d.
DensityValue standard_stable_density(int d, double alpha, double r);

/// Transition density p_t(x) of the process of `spec`.
DensityValue stable_density_value(const StableSpec& spec, double t, const Vector& x);
double stable_density(const StableSpec& spec, double t, const Vector& x);
/// Radial form, x of norm `radius`.
double stable_density_radial(const StableSpec& spec, double t, double radius);

/// Far-field envelope t * c * |x|^{-d-alpha}; requires |x| >= 4 t^{1/alpha}.
double tail_asymptotic(const StableSpec& spec, double t, const Vector& x);

/// Distribution function of the 1-d law with characteristic function exp(-|xi|^alpha).
///
/// Tabulated on [0, R] by Simpson cells with cubic Hermite interpolation; the
/// tail series takes over beyond R.
class StableCdf1d {
 public:
  explicit StableCdf1d(double alpha, double spacing = 0.02);

  double operator()(double x) const;
  double alpha() const { return alpha_; }
  double table_end() const { return end_; }

 private:
  double upper_tail(double x) const;

  double alpha_;
  double h_;
  double end_;
  std::vector<double> cdf_;
  std::vector<double> pdf_;
};

/// 1 - F(x) by the convergent (alpha < 1) or asymptotic series; NaN when the
/// series does not reach full precision at x.
double stable_upper_tail_series(double alpha, double x);

/// phi(t, x) = min(t^{-d/alpha}, t |x|^{-d-alpha}).
template <class Scalar>
Scalar bound_shape(Scalar t, Scalar x_norm, int d, Scalar alpha) {
  using std::pow;
  const Scalar near = pow(t, -Scalar(d) / alpha);
  if (x_norm == Scalar(0)) return near;
  const Scalar far = t * pow(x_norm, -(Scalar(d) + alpha));
  return near < far ? near : far;
}

struct BoundConstants {
  double c1_hat = 0.0;
  double c2_hat = 0.0;
  std::string grid_meta;
};

/// Extremes of p_t(x) / phi(t, x) over the tensor grid t_grid x x_grid.
BoundConstants estimate_bound_constants(const StableSpec& spec, const std::vector<double>& t_grid,
                                        const std::vector<Vector>& x_grid);

/// Scaled radii u = |x| / t^{1/alpha} at which p/phi (a function of u alone)
/// attains its extremes on [0, u_max]: the endpoints, the kink at u = 1 and
/// any interior critical points.
std::vector<double> bound_ratio_extrema(const StableSpec& spec, double u_max);

/// Density estimate on a grid of points.
struct DensityGrid {
  double t = 0.0;
  int d = 1;
  Eigen::MatrixXd points;  // one point per row
  Eigen::VectorXd values;
  Eigen::VectorXd std_err;
  double bandwidth = 0.0;
  std::size_t n_samples = 0;
  std::size_t samples_beyond_one = 0;  // samples with |X| > 1
  double mass = 0.0;

  /// Piecewise-linear estimate at radius |x| (0 outside the grid); d = 1 uses x itself.
  double value_at(double x) const;
  double std_err_at(double x) const;
};

/// Kernel density estimate from given samples.
///
/// d = 1: Gaussian KDE with Silverman bandwidth on the central 98% and
/// histogram bins of width 4h beyond it. d >= 2: radial shell histogram.
DensityGrid density_estimate(const SampleMatrix& samples, double t, double r, double bandwidth = 0.0);

/// Samples the truncated process at time t and estimates its density;
/// bandwidth 0 selects "auto".
DensityGrid truncated_density_estimate(const TruncatedStableSpec& spec, double t, std::size_t n,
                                       const SeedSpec& seed, double bandwidth = 0.0, int threads = 1);

/// Line v = intercept + slope * w.
struct Envelope {
  double intercept = 0.0;
  double slope = 0.0;
};

/// Tightest line above (upper) or below (lower) all points with slope >= min_slope,
/// optimal at the mean abscissa.
Envelope fit_envelope(const std::vector<double>& w, const std::vector<double>& v, bool upper,
                      double min_slope = 1e-9);

struct TailConvexity {
  std::vector<double> radii;
  std::vector<double> h;  // -log p / |x|
  bool passed = false;
};

/// -log p must be increasing and convex in |x| across the given radii (increasing secant slopes,
/// the first one positive), as for p ~ (t/|x|)^{c|x|}.
TailConvexity tail_convexity_check(const DensityGrid& estimate, const std::vector<double>& radii);

struct TruncatedBoundConstants {
  double c1 = 0.0, c2 = 0.0;  // upper / lower near pair, |x| <= 1
  double c3 = 0.0, c4 = 0.0;  // upper tail envelope (t/|x|)^{c4 |x|}
  double c5 = 0.0, c6 = 0.0;  // lower tail envelope
  double c7 = 0.0;            // p <= c7 t^{-d/alpha}
  bool tail_reliable = true;
  int near_violations = 0;
  int tail_violations = 0;
  int global_violations = 0;
  // Per-t constants {c1, c2, c7} for stability reporting.
  std::vector<std::vector<double>> per_t;
  std::vector<TailConvexity> convexity;
  std::string grid_meta;
};

TruncatedBoundConstants check_truncated_bounds(const TruncatedStableSpec& spec,
                                               const std::vector<DensityGrid>& estimates);

}  // namespace harnack
