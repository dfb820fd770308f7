#pragma once

// Radial building blocks shared by the symbol, density and c0 integrals.
//
// For a rotation-invariant function on R^d the sphere average of
// cos<xi, z> depends only on s = |xi||z| and equals
//   Lambda_d(s) = Gamma(d/2) (2/s)^(d/2-1) J_{d/2-1}(s),
// which is cos(s) for d = 1 and sin(s)/s for d = 3.

namespace harnack::radial {

/// Surface area |S^{d-1}| of the unit sphere in R^d (2 for d = 1).
double sphere_area(int d);

/// Lambda_d(s), the sphere average of cos(s * u_1).
double lambda(int d, double s);

/// (1 - Lambda_d(s)) / s^2, accurate down to s = 0 where it equals 1/(2d).
double one_minus_lambda_over_s2(int d, double s);

/// Positive zeros of Lambda_d in increasing order.
class LambdaZeros {
 public:
  explicit LambdaZeros(int d);
  /// m-th positive zero, m >= 1.
  double operator()(int m) const;
  /// Smallest index m with zero(m) > x.
  int first_above(double x) const;

 private:
  int d_;
  double order_;
};

}  // namespace harnack::radial
