#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace harnack {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a radial Levy density fails to dominate its stable floor.
class DominationError : public std::runtime_error {
 public:
  DominationError(double radius, double density, double floor);
  double radius() const { return radius_; }

 private:
  double radius_;
};

/// Rotationally invariant symmetric alpha-stable process with Levy measure
/// c |z|^{-d-alpha} dz.
///
/// The symbol is psi(xi) = sigma(d, alpha) * c * |xi|^alpha, with sigma
/// computed once at construction by compute_sigma.
class StableSpec {
 public:
  StableSpec(int d, double alpha, double c);

  int d() const { return d_; }
  double alpha() const { return alpha_; }
  double c() const { return c_; }
  double sigma() const { return sigma_; }
  /// Coefficient of |xi|^alpha in the symbol.
  double symbol_coefficient() const { return sigma_ * c_; }

 private:
  int d_;
  double alpha_;
  double c_;
  double sigma_;
};

/// Truncated stable process: Levy measure c |z|^{-d-alpha} 1{|z| <= r} dz.
class TruncatedStableSpec {
 public:
  TruncatedStableSpec(int d, double alpha, double c, double r);

  int d() const { return d_; }
  double alpha() const { return alpha_; }
  double c() const { return c_; }
  double r() const { return r_; }

 private:
  int d_;
  double alpha_;
  double c_;
  double r_;
};

using RadialDensity = std::function<double(double)>;

/// Levy measure with radial density m(rho) that dominates a stable floor.
struct DominatingLevySpec {
  RadialDensity radial_density;
  StableSpec stable_floor;
  std::string description;
};

/// Levy density of X' = X - X^S after removing the stable floor.
struct ResidualDensity {
  int d = 1;
  RadialDensity density;
  bool identically_zero = false;
};

using Driver = std::variant<StableSpec, TruncatedStableSpec, DominatingLevySpec, ResidualDensity>;

int driver_dimension(const Driver& driver);
std::string driver_kind(const Driver& driver);

/// dX_t = A X_t dt + dL_t.
class OUSpec {
 public:
  OUSpec(Matrix drift, Driver driver);

  const Matrix& drift() const { return drift_; }
  const Driver& driver() const { return driver_; }
  int d() const { return static_cast<int>(drift_.rows()); }
  double drift_norm() const { return drift_norm_; }
  bool drift_is_zero() const { return drift_norm_ == 0.0; }

 private:
  Matrix drift_;
  Driver driver_;
  double drift_norm_;
};

/// Spectral norm (largest singular value).
double operator_norm(const Matrix& a);

/// sigma(d, alpha) = int (1 - cos z_1) |z|^{-d-alpha} dz by quadrature.
double compute_sigma(int d, double alpha);

double symbol(const StableSpec& spec, const Vector& xi);
double symbol(const TruncatedStableSpec& spec, const Vector& xi);
double symbol(const DominatingLevySpec& spec, const Vector& xi);
double symbol(const ResidualDensity& residual, const Vector& xi);
double symbol(const Driver& driver, const Vector& xi);

/// |S^{d-1}| int_0^inf m(rho) rho^{d-1} (1 - Lambda_d(rho k)) d rho for k = |xi|.
double radial_symbol(const RadialDensity& m, int d, double xi_norm);

/// c0 = int_{|z| <= exp(-||A||)} (1 - cos z_1) |z|^{-d} dz.
double compute_c0(double op_norm_A, int d);

/// Radii (log-spaced over [1e-6, 1e6]) on which domination is verified.
std::vector<double> domination_grid(int points = 200);

/// Removes the stable floor; throws DominationError at the first grid radius
/// where m(rho) < c rho^{-d-alpha}.
ResidualDensity split_levy_measure(const DominatingLevySpec& spec);

struct CharacteristicValue {
  double modulus = 1.0;
  double phase = 0.0;
};

/// Characteristic function of mu_t, the law of X_t - e^{tA} x:
///   exp(-int_0^t psi(e^{sA^T} xi) ds).
CharacteristicValue compute_mu_hat(const OUSpec& spec, const Vector& xi, double t);

}  // namespace harnack
