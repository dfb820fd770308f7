#include "harnack/levy_core.hpp"

#include "harnack/matrix_exp.hpp"
#include "harnack/quadrature.hpp"
#include "harnack/radial.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

namespace harnack {

namespace radial {

double sphere_area(int d) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

double lambda(int d, double s) {
  s = std::abs(s);
  switch (d) {
    case 1:
      return std::cos(s);
    case 2:
      return boost::math::cyl_bessel_j(0, s);
    case 3:
      return s < 1e-8 ? 1.0 - s * s / 6.0 : std::sin(s) / s;
    default:
      break;
  }
  if (s < 1e-8) return 1.0;
  const double nu = 0.5 * d - 1.0;
  return std::tgamma(0.5 * d) * std::pow(2.0 / s, nu) * boost::math::cyl_bessel_j(nu, s);
}

double one_minus_lambda_over_s2(int d, double s) {
  s = std::abs(s);
  if (s > 2.0) return (1.0 - lambda(d, s)) / (s * s);
  // sum_{k>=1} (-1)^{k+1} (s^2/4)^k Gamma(d/2) / (k! Gamma(k + d/2)) / s^2
  const double q = 0.25 * s * s;
  double term = 1.0 / (2.0 * d);
  double sum = term;
  for (int k = 1; k < 60; ++k) {
    term *= -q / ((k + 1.0) * (k + 0.5 * d));
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

LambdaZeros::LambdaZeros(int d) : d_(d), order_(0.5 * d - 1.0) {}

double LambdaZeros::operator()(int m) const {
  if (d_ == 1) return (m - 0.5) * std::numbers::pi;
  if (d_ == 3) return m * std::numbers::pi;
  return boost::math::cyl_bessel_j_zero(order_, m);
}

int LambdaZeros::first_above(double x) const {
  if (d_ == 1) return static_cast<int>(std::floor(x / std::numbers::pi + 0.5)) + 1;
  int m = std::max(1, static_cast<int>(std::floor(x / std::numbers::pi - 0.5 * order_ + 0.25)) - 1);
  while ((*this)(m) <= x) ++m;
  while (m > 1 && (*this)(m - 1) > x) --m;
  return m;
}

}  // namespace radial

namespace {

constexpr double kHeadEnd = 2.0;

// int_from^inf s^{-1-alpha} Lambda_d(s) ds, summed between zeros of Lambda_d.
double lambda_tail(int d, double alpha, double from) {
  const radial::LambdaZeros zeros(d);
  const int m0 = zeros.first_above(from);
  auto f = [d, alpha](double s) { return std::pow(s, -1.0 - alpha) * radial::lambda(d, s); };
  quad::Tolerance tol{1e-300, 1e-13, 2000};
  auto piece = [&](int k) {
    const double a = k == 0 ? from : zeros(m0 + k - 1);
    const double b = zeros(m0 + k);
    return quad::gauss_kronrod(f, a, b, tol, "stable symbol tail").value;
  };
  quad::SeriesControl ctl;
  ctl.rel = 1e-13;
  return quad::oscillatory_series(piece, ctl, "stable symbol tail").value;
}

// int_0^upper s^{-1-alpha} (1 - Lambda_d(s)) ds; upper may be +inf.
double radial_stable_integral(int d, double alpha, double upper) {
  const double head_end = std::min(upper, kHeadEnd);
  auto g = [d](double s) { return radial::one_minus_lambda_over_s2(d, s); };
  quad::Tolerance tol{1e-300, 1e-13, 4000};
  double value = quad::power_singular(g, 1.0 - alpha, head_end, tol, "symbol near the origin").value;
  if (upper <= kHeadEnd) return value;
  if (std::isfinite(upper) && upper <= 200.0) {
    auto f = [d, alpha](double s) {
      return std::pow(s, -1.0 - alpha) * (1.0 - radial::lambda(d, s));
    };
    for (double a = kHeadEnd; a < upper; a += std::numbers::pi) {
      value += quad::gauss_kronrod(f, a, std::min(a + std::numbers::pi, upper), tol,
                                   "symbol mid range")
                   .value;
    }
    return value;
  }
  value += std::pow(kHeadEnd, -alpha) / alpha - lambda_tail(d, alpha, kHeadEnd);
  if (std::isfinite(upper)) {
    value -= std::pow(upper, -alpha) / alpha - lambda_tail(d, alpha, upper);
  }
  return value;
}

void check_stable_parameters(int d, double alpha, double c) {
  if (d < 1) throw std::invalid_argument("dimension d must be >= 1");
  if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("alpha must lie in (0, 2)");
  if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("c must be positive and finite");
}

}  // namespace

DominationError::DominationError(double radius, double density, double floor)
    : std::runtime_error([&] {
        std::ostringstream os;
        os.precision(10);
        os << "Levy density does not dominate the stable floor at radius " << radius
           << " (density " << density << " < floor " << floor << ")";
        return os.str();
      }()),
      radius_(radius) {}

StableSpec::StableSpec(int d, double alpha, double c) : d_(d), alpha_(alpha), c_(c) {
  check_stable_parameters(d, alpha, c);
  sigma_ = compute_sigma(d, alpha);
  if (!(sigma_ * c_ > 0.0)) throw std::invalid_argument("symbol coefficient must be positive");
}

TruncatedStableSpec::TruncatedStableSpec(int d, double alpha, double c, double r)
    : d_(d), alpha_(alpha), c_(c), r_(r) {
  check_stable_parameters(d, alpha, c);
  if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("truncation radius r must be positive");
}

int driver_dimension(const Driver& driver) {
  return std::visit(
      [](const auto& s) -> int {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DominatingLevySpec>) {
          return s.stable_floor.d();
        } else if constexpr (std::is_same_v<T, ResidualDensity>) {
          return s.d;
        } else {
          return s.d();
        }
      },
      driver);
}

std::string driver_kind(const Driver& driver) {
  switch (driver.index()) {
    case 0: return "stable";
    case 1: return "truncated";
    case 2: return "dominating";
    default: return "residual";
  }
}

OUSpec::OUSpec(Matrix drift, Driver driver) : drift_(std::move(drift)), driver_(std::move(driver)) {
  if (drift_.rows() != drift_.cols()) throw std::invalid_argument("drift matrix must be square");
  if (drift_.rows() != driver_dimension(driver_)) {
    throw std::invalid_argument("drift matrix dimension does not match driver dimension");
  }
  if (!drift_.allFinite()) throw std::invalid_argument("drift matrix has non-finite entries");
  drift_norm_ = operator_norm(drift_);
}

double operator_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

double compute_sigma(int d, double alpha) {
  check_stable_parameters(d, alpha, 1.0);
  return radial::sphere_area(d) * radial_stable_integral(d, alpha, INFINITY);
}

double symbol(const StableSpec& spec, const Vector& xi) {
  const double k = xi.norm();
  return k == 0.0 ? 0.0 : spec.symbol_coefficient() * std::pow(k, spec.alpha());
}

double symbol(const TruncatedStableSpec& spec, const Vector& xi) {
  const double k = xi.norm();
  if (k == 0.0) return 0.0;
  return spec.c() * radial::sphere_area(spec.d()) * std::pow(k, spec.alpha()) *
         radial_stable_integral(spec.d(), spec.alpha(), spec.r() * k);
}

double radial_symbol(const RadialDensity& m, int d, double k) {
  if (k == 0.0) return 0.0;
  const double rho_star = kHeadEnd / k;
  const double log_star = std::log(rho_star);
  quad::Tolerance tol{1e-14, 1e-11, 4000};
  auto inner = [&](double u) {
    const double rho = std::exp(u);
    const double s = rho * k;
    return m(rho) * std::pow(rho, d) * s * s * radial::one_minus_lambda_over_s2(d, s);
  };
  auto mass = [&](double u) {
    const double rho = std::exp(u);
    return m(rho) * std::pow(rho, d);
  };
  const double near = quad::gauss_kronrod(inner, log_star - 60.0, log_star, tol, "residual symbol (small jumps)").value;
  const double far_mass = quad::gauss_kronrod(mass, log_star, log_star + 60.0, tol, "residual symbol (large jumps)").value;

  const radial::LambdaZeros zeros(d);
  const int m0 = zeros.first_above(kHeadEnd);
  auto osc = [&](double s) {
    const double rho = s / k;
    return m(rho) * std::pow(rho, d - 1) * radial::lambda(d, s) / k;
  };
  auto piece = [&](int j) {
    const double a = j == 0 ? kHeadEnd : zeros(m0 + j - 1);
    return quad::gauss_kronrod(osc, a, zeros(m0 + j), tol, "residual symbol oscillation").value;
  };
  quad::SeriesControl ctl;
  ctl.abs = 1e-15;
  ctl.rel = 1e-11;
  const double far_osc = quad::oscillatory_series(piece, ctl, "residual symbol oscillation").value;
  return radial::sphere_area(d) * (near + far_mass - far_osc);
}

double symbol(const DominatingLevySpec& spec, const Vector& xi) {
  const ResidualDensity residual = split_levy_measure(spec);
  return symbol(spec.stable_floor, xi) + symbol(residual, xi);
}

double symbol(const ResidualDensity& residual, const Vector& xi) {
  if (residual.identically_zero) return 0.0;
  return radial_symbol(residual.density, residual.d, xi.norm());
}

double symbol(const Driver& driver, const Vector& xi) {
  return std::visit([&](const auto& s) { return symbol(s, xi); }, driver);
}

double compute_c0(double op_norm_A, int d) {
  if (!(op_norm_A >= 0.0)) throw std::invalid_argument("operator norm must be nonnegative");
  if (d < 1) throw std::invalid_argument("dimension d must be >= 1");
  const double radius = std::exp(-op_norm_A);
  if (radius == 0.0) return 0.0;
  auto f = [d](double rho) { return rho * radial::one_minus_lambda_over_s2(d, rho); };
  quad::Tolerance tol{1e-300, 1e-13, 2000};
  return radial::sphere_area(d) * quad::gauss_kronrod(f, 0.0, radius, tol, "c0").value;
}

std::vector<double> domination_grid(int points) {
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i) {
    grid[i] = std::pow(10.0, -6.0 + 12.0 * i / (points - 1));
  }
  return grid;
}

ResidualDensity split_levy_measure(const DominatingLevySpec& spec) {
  const StableSpec& floor = spec.stable_floor;
  const int d = floor.d();
  const double c = floor.c();
  const double exponent = -(d + floor.alpha());
  bool zero = true;
  for (double rho : domination_grid()) {
    const double base = c * std::pow(rho, exponent);
    const double m = spec.radial_density(rho);
    if (!(m >= base * (1.0 - 1e-12))) throw DominationError(rho, m, base);
    if (std::abs(m - base) > 1e-12 * base) zero = false;
  }
  ResidualDensity out;
  out.d = d;
  out.identically_zero = zero;
  out.density = [m = spec.radial_density, c, exponent](double rho) {
    return std::max(m(rho) - c * std::pow(rho, exponent), 0.0);
  };
  return out;
}

CharacteristicValue compute_mu_hat(const OUSpec& spec, const Vector& xi, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("compute_mu_hat: t must be positive");
  if (xi.size() != spec.d()) throw std::invalid_argument("compute_mu_hat: frequency dimension mismatch");
  if (xi.norm() == 0.0) return {1.0, 0.0};
  const Matrix at = spec.drift().transpose();
  auto integrand = [&](double s) {
    const Vector rotated = spec.drift_is_zero() ? xi : Vector(matrix_exp(at, s) * xi);
    return symbol(spec.driver(), rotated);
  };
  quad::Tolerance tol{1e-300, 1e-12, 2000};
  const double exponent = quad::gauss_kronrod(integrand, 0.0, t, tol, "mu_hat time integral").value;
  return {std::exp(-exponent), 0.0};
}

}  // namespace harnack
