#pragma once

#include "harnack/levy_core.hpp"
#include "harnack/matrix_exp.hpp"
#include "harnack/sampling.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace harnack {

/// Bounded nonnegative test function, optionally raised to a power or logged.
///
/// Base kernels (centered at `center`):
///   ball_indicator  1{|z - center| <= scale}
///   gaussian_bump   exp(-|z - center|^2 / (2 scale^2))
///   constant        1
///   exp_cap         min(exp(|z - center|), level)
/// The value is transform(offset + weight * kernel).
class TestFunction {
 public:
  enum class Kind { ball_indicator, gaussian_bump, constant, exp_cap };

  static TestFunction ball_indicator(Vector center, double radius, double offset = 0.0);
  static TestFunction gaussian_bump(Vector center, double width, double offset = 0.0);
  static TestFunction constant(double value);
  static TestFunction exp_cap(double level, Vector center = Vector());

  template <class Derived>
  double operator()(const Eigen::MatrixBase<Derived>& z) const {
    return apply(base(z));
  }

  /// z -> f(z)^p.
  TestFunction power(double p) const;
  /// z -> log f(z); requires inf f >= 1.
  TestFunction log() const;
  /// z -> f(z + delta).
  TestFunction shifted(const Vector& delta) const;

  Kind kind() const { return kind_; }
  std::string tag() const;
  double infimum() const;
  double supremum() const;

 private:
  TestFunction(Kind kind, Vector center, double scale, double offset, double level);

  template <class Derived>
  double base(const Eigen::MatrixBase<Derived>& z) const {
    if (kind_ == Kind::constant) return offset_ + weight_;
    double dist2 = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double diff = center_.size() == 0 ? z(i) : z(i) - center_(i);
      dist2 += diff * diff;
    }
    double k = 0.0;
    switch (kind_) {
      case Kind::ball_indicator:
        k = dist2 <= scale_ * scale_ ? 1.0 : 0.0;
        break;
      case Kind::gaussian_bump:
        k = std::exp(-0.5 * dist2 / (scale_ * scale_));
        break;
      case Kind::exp_cap:
        k = std::min(std::exp(std::sqrt(dist2)), level_);
        break;
      case Kind::constant:
        break;
    }
    return offset_ + weight_ * k;
  }

  double apply(double v) const;

  Kind kind_;
  Vector center_;
  double scale_ = 1.0;
  double offset_ = 0.0;
  double weight_ = 1.0;
  double level_ = 1.0;
  double exponent_ = 1.0;
  bool log_ = false;
};

struct OUPathConfig {
  int n_steps = 0;  // 0 selects default_steps
  double t = 1.0;
};

/// max(1, ceil(50 ||A|| t)).
int default_steps(const OUSpec& spec, double t);

struct SemigroupEstimate {
  double mean = 0.0;
  double std_err = 0.0;
  std::size_t n = 0;
  double t = 0.0;
  Vector x;
  std::string f_tag;
  SeedSpec seed;
};

/// Independent increments L_t of the driver (n x d).
SampleMatrix sample_increments(const Driver& driver, double t, std::size_t n, const SeedSpec& seed,
                               int threads = 1);

/// Stochastic convolution sum_k e^{(t - t_k) A} Delta L_k with t_k the left grid points.
SampleMatrix sample_ou_convolution(const OUSpec& spec, const OUPathConfig& cfg, std::size_t n,
                                   const SeedSpec& seed, int threads = 1);

/// Endpoints X_t = e^{tA} x0 + convolution.
SampleMatrix sample_ou(const OUSpec& spec, const Vector& x0, const OUPathConfig& cfg, std::size_t n,
                       const SeedSpec& seed, int threads = 1);

/// Monte Carlo access to P_t at one time, sharing one set of convolution
/// samples across starting points and test functions (common random numbers).
class SemigroupSampler {
 public:
  SemigroupSampler(const OUSpec& spec, double t, std::size_t n, const SeedSpec& seed, int threads = 1,
                   int n_steps = 0);

  double t() const { return t_; }
  std::size_t size() const { return static_cast<std::size_t>(noise_.rows()); }
  const SampleMatrix& noise() const { return noise_; }
  const Matrix& flow() const { return flow_; }

  /// f(e^{tA} x + Z_i) for every stored sample.
  Eigen::VectorXd values(const TestFunction& f, const Vector& x) const;
  SemigroupEstimate estimate(const TestFunction& f, const Vector& x) const;

 private:
  double t_;
  SeedSpec seed_;
  int threads_;
  Matrix flow_;
  SampleMatrix noise_;
};

SemigroupEstimate estimate_Ptf(const OUSpec& spec, const TestFunction& f, const Vector& x, double t,
                               std::size_t n, const SeedSpec& seed, int threads = 1, int n_steps = 0);

/// Mean and standard error (sample sd / sqrt n) in a fixed summation order.
std::pair<double, double> mean_and_std_err(const Eigen::VectorXd& v);

struct FactorizationProbe {
  Vector xi;
  double mu_hat = 1.0;        // |mu_t hat(xi)|
  double stable_factor = 1.0; // exp(-t c0 c |xi|^alpha)
  double pi_hat = 1.0;        // mu_hat / stable_factor
  double excess = 0.0;        // max(pi_hat - 1, 0)
};

struct FactorizationReport {
  double t = 0.0;
  double c0 = 0.0;
  std::vector<FactorizationProbe> probes;
  double max_excess = 0.0;
  bool passed = true;
};

/// Splits mu_t hat into exp(-t c0 c |xi|^alpha) times the residual factor
/// pi_t hat and checks |pi_t hat| <= 1 + 1e-8 at every probe.
FactorizationReport factorization_check(const OUSpec& spec, double t, const std::vector<Vector>& probe_xis);

}  // namespace harnack
