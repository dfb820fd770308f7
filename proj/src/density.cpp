#include "harnack/density.hpp"

#include "harnack/quadrature.hpp"
#include "harnack/radial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace harnack {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Sums sign(k) * exp(log_envelope(k)) for k = first, first+1, ... and returns
// NaN unless the envelope falls below 1e-16 |sum| (or bottoms out below
// 1e-13 |sum| for a divergent series) without heavy cancellation.
template <class LogEnvelope, class Sign>
double guarded_series(LogEnvelope&& log_envelope, Sign&& sign, int first, int max_terms = 150) {
  double sum = 0.0;
  double max_env = 0.0;
  double prev_env = INFINITY;
  bool decreasing = false;
  for (int k = first; k < first + max_terms; ++k) {
    const double env = std::exp(log_envelope(k));
    if (!std::isfinite(env)) return kNaN;
    if (k > first) {
      if (env < prev_env) {
        decreasing = true;
      } else if (decreasing) {
        // Terms grow again: an asymptotic series, cut at its smallest term.
        return prev_env <= 1e-13 * std::abs(sum) && max_env <= 1e4 * std::abs(sum) ? sum : kNaN;
      }
    }
    sum += sign(k) * env;
    max_env = std::max(max_env, env);
    prev_env = env;
    if (k > first && env <= 1e-16 * std::abs(sum)) {
      return max_env <= 1e4 * std::abs(sum) ? sum : kNaN;
    }
  }
  return kNaN;
}

// Large-r expansion of the standardized density:
//   sum_k (-1)^{k+1}/k! 2^{k a} pi^{-d/2-1} Gamma((k a + d)/2) Gamma(1 + k a/2) sin(pi k a/2) r^{-k a - d}.
double large_r_series(int d, double alpha, double r) {
  const double log_r = std::log(r);
  auto log_env = [&](int k) {
    const double ka = k * alpha;
    return ka * std::numbers::ln2 - (0.5 * d + 1.0) * std::log(kPi) + std::lgamma(0.5 * (ka + d)) +
           std::lgamma(1.0 + 0.5 * ka) - std::lgamma(k + 1.0) - (ka + d) * log_r;
  };
  auto sign = [&](int k) { return (k % 2 == 1 ? 1.0 : -1.0) * std::sin(0.5 * kPi * k * alpha); };
  return guarded_series(log_env, sign, 1);
}

// Power series in r^2, convergent for alpha > 1:
//   P sum_k (-1)^k (r/2)^{2k} Gamma((d + 2k)/alpha) / (k! Gamma(k + d/2)).
double small_r_series(int d, double alpha, double r) {
  const double prefactor =
      std::pow(2.0 * kPi, -d) * radial::sphere_area(d) * std::tgamma(0.5 * d) / alpha;
  const double log_half_r = std::log(0.5 * r);
  auto log_env = [&](int k) {
    return 2.0 * k * log_half_r + std::lgamma((d + 2.0 * k) / alpha) - std::lgamma(k + 1.0) -
           std::lgamma(k + 0.5 * d);
  };
  auto sign = [](int k) { return k % 2 == 0 ? 1.0 : -1.0; };
  const double sum = guarded_series(log_env, sign, 0);
  return std::isnan(sum) ? sum : prefactor * sum;
}

double origin_density(int d, double alpha) {
  return std::pow(2.0 * kPi, -d) * radial::sphere_area(d) * std::tgamma(d / alpha) / alpha;
}

// (2 pi)^{-d} |S^{d-1}| int_0^inf exp(-s^alpha) s^{d-1} Lambda_d(s r) ds, split at zeros of Lambda_d.
double inversion(int d, double alpha, double r) {
  const double s_cap = std::pow(60.0 + 2.0 * (d - 1) * std::log(60.0 / alpha + 1.0), 1.0 / alpha);
  auto f = [&](double s) {
    return std::exp(-std::pow(s, alpha)) * std::pow(s, d - 1) * radial::lambda(d, s * r);
  };
  const radial::LambdaZeros zeros(d);
  double first = 0.0;
  auto piece = [&](int k) {
    const double a = k == 0 ? 0.0 : zeros(k) / r;
    if (a >= s_cap) return 0.0;
    const double b = std::min(zeros(k + 1) / r, s_cap);
    // Later pieces only need accuracy relative to the first one.
    const quad::Tolerance tol{k == 0 ? 1e-300 : 1e-17 * std::abs(first), 1e-13, 4000};
    const double v = quad::gauss_kronrod(f, a, b, tol, "stable density inversion").value;
    if (k == 0) first = v;
    return v;
  };
  quad::SeriesControl ctl;
  ctl.rel = 1e-13;
  ctl.max_pieces = 200000;
  const double integral = quad::oscillatory_series(piece, ctl, "stable density inversion").value;
  return std::pow(2.0 * kPi, -d) * radial::sphere_area(d) * integral;
}

// Leading tail term of the standardized density: r^{-d-alpha} / sigma(d, alpha).
double standard_leading_tail(int d, double alpha, double r) {
  return std::pow(r, -(d + alpha)) / compute_sigma(d, alpha);
}

}  // namespace

DensityValue standard_stable_density(int d, double alpha, double r) {
  if (d < 1) throw std::invalid_argument("dimension d must be >= 1");
  if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("alpha must lie in (0, 2)");
  r = std::abs(r);
  if (!std::isfinite(r)) return {0.0, DensityMethod::asymptotic, false};
  if (r == 0.0) return {origin_density(d, alpha), DensityMethod::origin, false};

  DensityValue out;
  double value = r > 0.2 ? large_r_series(d, alpha, r) : kNaN;
  if (!(value > 0.0)) value = kNaN;
  out.method = DensityMethod::large_r_series;
  if (std::isnan(value) && alpha > 1.0) {
    value = small_r_series(d, alpha, r);
    out.method = DensityMethod::small_r_series;
  }
  if (std::isnan(value)) {
    try {
      value = inversion(d, alpha, r);
      out.method = DensityMethod::inversion;
    } catch (const quad::QuadratureError&) {
      if (r < 2.0) throw;
      value = standard_leading_tail(d, alpha, r);
      out.method = DensityMethod::asymptotic;
    }
  }
  if (value < 0.0) {
    out.clamped = true;
    value = 0.0;
  }
  out.value = value;
  return out;
}

DensityValue stable_density_value(const StableSpec& spec, double t, const Vector& x) {
  if (x.size() != spec.d()) throw std::invalid_argument("stable_density: point dimension mismatch");
  if (!(t > 0.0)) throw std::invalid_argument("stable_density: t must be positive");
  const double kappa = t * spec.symbol_coefficient();
  const double scale = std::pow(kappa, 1.0 / spec.alpha());
  DensityValue v = standard_stable_density(spec.d(), spec.alpha(), x.norm() / scale);
  v.value *= std::pow(scale, -spec.d());
  return v;
}

double stable_density(const StableSpec& spec, double t, const Vector& x) {
  return stable_density_value(spec, t, x).value;
}

double stable_density_radial(const StableSpec& spec, double t, double radius) {
  Vector x = Vector::Zero(spec.d());
  x(0) = radius;
  return stable_density(spec, t, x);
}

double tail_asymptotic(const StableSpec& spec, double t, const Vector& x) {
  const double norm = x.norm();
  if (!(t > 0.0)) throw std::invalid_argument("tail_asymptotic: t must be positive");
  if (norm < 4.0 * std::pow(t, 1.0 / spec.alpha())) {
    throw std::invalid_argument("tail_asymptotic requires |x| >= 4 t^{1/alpha}");
  }
  return t * spec.c() * std::pow(norm, -(spec.d() + spec.alpha()));
}

double stable_upper_tail_series(double alpha, double x) {
  if (!(x > 0.0)) return kNaN;
  const double log_x = std::log(x);
  auto log_env = [&](int k) {
    const double ka = k * alpha;
    return std::lgamma(ka) - std::lgamma(k + 1.0) - ka * log_x - std::log(kPi);
  };
  auto sign = [&](int k) { return (k % 2 == 1 ? 1.0 : -1.0) * std::sin(0.5 * kPi * k * alpha); };
  return guarded_series(log_env, sign, 1);
}

StableCdf1d::StableCdf1d(double alpha, double spacing) : alpha_(alpha), h_(spacing) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("alpha must lie in (0, 2)");
  end_ = 20.0;
  while (std::isnan(stable_upper_tail_series(alpha, end_))) {
    end_ *= 2.0;
    if (end_ > 1e4) throw std::runtime_error("stable tail series does not settle");
  }
  const auto cells = static_cast<std::size_t>(std::ceil(end_ / h_));
  end_ = cells * h_;
  pdf_.resize(cells + 1);
  cdf_.resize(cells + 1);
  auto g = [&](double x) { return standard_stable_density(1, alpha, x).value; };
  pdf_[0] = g(0.0);
  cdf_[0] = 0.5;
  for (std::size_t i = 0; i < cells; ++i) {
    const double a = i * h_;
    pdf_[i + 1] = g(a + h_);
    cdf_[i + 1] = cdf_[i] + h_ / 6.0 * (pdf_[i] + 4.0 * g(a + 0.5 * h_) + pdf_[i + 1]);
  }
}

double StableCdf1d::upper_tail(double x) const {
  if (x < end_) {
    const double pos = x / h_;
    const auto i = std::min(static_cast<std::size_t>(pos), cdf_.size() - 2);
    const double s = pos - i;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    const double f = h00 * cdf_[i] + h10 * h_ * pdf_[i] + h01 * cdf_[i + 1] + h11 * h_ * pdf_[i + 1];
    return 1.0 - f;
  }
  return stable_upper_tail_series(alpha_, x);
}

double StableCdf1d::operator()(double x) const {
  return x >= 0.0 ? 1.0 - upper_tail(x) : upper_tail(-x);
}

BoundConstants estimate_bound_constants(const StableSpec& spec, const std::vector<double>& t_grid,
                                        const std::vector<Vector>& x_grid) {
  if (t_grid.empty() || x_grid.empty()) throw std::invalid_argument("bound constants need nonempty grids");
  BoundConstants out;
  out.c1_hat = INFINITY;
  out.c2_hat = 0.0;
  double x_lo = INFINITY, x_hi = 0.0;
  for (double t : t_grid) {
    for (const auto& x : x_grid) {
      const double p = stable_density(spec, t, x);
      const double ratio = p / bound_shape(t, x.norm(), spec.d(), spec.alpha());
      if (!std::isfinite(ratio) || !(ratio > 0.0)) {
        std::ostringstream os;
        os << "density-to-envelope ratio is not finite and positive at t = " << t << ", |x| = " << x.norm();
        throw std::runtime_error(os.str());
      }
      out.c1_hat = std::min(out.c1_hat, ratio);
      out.c2_hat = std::max(out.c2_hat, ratio);
      x_lo = std::min(x_lo, x.norm());
      x_hi = std::max(x_hi, x.norm());
    }
  }
  const auto [t_lo, t_hi] = std::minmax_element(t_grid.begin(), t_grid.end());
  std::ostringstream os;
  os << t_grid.size() << " times in [" << *t_lo << ", " << *t_hi << "] x " << x_grid.size()
     << " points with |x| in [" << x_lo << ", " << x_hi << "]";
  out.grid_meta = os.str();
  return out;
}

std::vector<double> bound_ratio_extrema(const StableSpec& spec, double u_max) {
  std::vector<double> out{0.0, 1.0};
  if (u_max <= 1.0) {
    out.back() = u_max;
    return out;
  }
  out.push_back(u_max);
  const int d = spec.d();
  const double a = spec.alpha();
  auto ratio = [&](double u) { return stable_density_radial(spec, 1.0, u) * std::pow(u, d + a); };
  constexpr int kScan = 400;
  std::vector<double> u(kScan + 1), h(kScan + 1);
  for (int i = 0; i <= kScan; ++i) {
    u[i] = std::exp(std::log(u_max) * i / kScan);
    h[i] = ratio(u[i]);
  }
  for (int i = 1; i < kScan; ++i) {
    const bool peak = h[i] >= h[i - 1] && h[i] >= h[i + 1];
    const bool dip = h[i] <= h[i - 1] && h[i] <= h[i + 1];
    if (!peak && !dip) continue;
    // Golden-section search on the bracketing pair of scan intervals.
    const double sign = peak ? -1.0 : 1.0;
    double lo = u[i - 1], hi = u[i + 1];
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
    double f1 = sign * ratio(m1), f2 = sign * ratio(m2);
    for (int it = 0; it < 80 && hi - lo > 1e-12 * hi; ++it) {
      if (f1 < f2) {
        hi = m2;
        m2 = m1;
        f2 = f1;
        m1 = hi - g * (hi - lo);
        f1 = sign * ratio(m1);
      } else {
        lo = m1;
        m1 = m2;
        f1 = f2;
        m2 = lo + g * (hi - lo);
        f2 = sign * ratio(m2);
      }
    }
    out.push_back(0.5 * (lo + hi));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double DensityGrid::value_at(double x) const {
  const Eigen::Index n = points.rows();
  if (n == 0) return 0.0;
  if (d > 1) x = std::abs(x);
  auto coord = [&](Eigen::Index i) { return points(i, 0); };
  if (x < coord(0) || x > coord(n - 1)) return 0.0;
  Eigen::Index lo = 0, hi = n - 1;
  while (hi - lo > 1) {
    const Eigen::Index mid = (lo + hi) / 2;
    (coord(mid) <= x ? lo : hi) = mid;
  }
  const double span = coord(hi) - coord(lo);
  const double s = span > 0.0 ? (x - coord(lo)) / span : 0.0;
  return (1.0 - s) * values(lo) + s * values(hi);
}

double DensityGrid::std_err_at(double x) const {
  const Eigen::Index n = points.rows();
  if (n == 0) return 0.0;
  if (d > 1) x = std::abs(x);
  if (x < points(0, 0) || x > points(n - 1, 0)) return 0.0;
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < n; ++i) {
    if (std::abs(points(i, 0) - x) < std::abs(points(best, 0) - x)) best = i;
  }
  return std_err(best);
}

namespace {

DensityGrid kde_1d(const SampleMatrix& samples, double t, double r, double bandwidth) {
  const auto n = static_cast<std::size_t>(samples.rows());
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = samples(i, 0);
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  auto q = [&](double p) {
    const double pos = p * (n - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const auto hi = std::min(lo + 1, n - 1);
    return sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
  };
  const double q01 = q(0.01), q99 = q(0.99);
  if (bandwidth <= 0.0) {
    // Silverman's rule on the central 98%.
    double s1 = 0.0, s2 = 0.0;
    std::size_t m = 0;
    for (double v : sorted) {
      if (v < q01 || v > q99) continue;
      s1 += v;
      s2 += v * v;
      ++m;
    }
    const double mean = s1 / m;
    const double sd = std::sqrt(std::max(s2 / m - mean * mean, 0.0));
    const double iqr = q(0.75) - q(0.25);
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    bandwidth = 0.9 * spread * std::pow(static_cast<double>(m), -0.2);
    if (!(bandwidth > 0.0)) throw std::runtime_error("KDE bandwidth collapsed to zero");
  }
  const double h = bandwidth;
  const double delta = h / 8.0;
  const double core = std::max(std::abs(q01), std::abs(q99));
  std::vector<double> abs_sorted(n);
  for (std::size_t i = 0; i < n; ++i) abs_sorted[i] = std::abs(x[i]);
  std::sort(abs_sorted.begin(), abs_sorted.end());
  const double q9999 = abs_sorted[static_cast<std::size_t>(0.9999 * (n - 1))];
  const double outer = std::max({3.0, 2.0 * r, q9999, core});

  // Linear binning on multiples of delta over [-(core + 5h), core + 5h].
  const auto half_bins = static_cast<long>(std::ceil((core + 5.0 * h) / delta));
  std::vector<double> bins(2 * half_bins + 1, 0.0);
  for (double v : x) {
    const double pos = v / delta + half_bins;
    if (pos < 0.0 || pos >= 2.0 * half_bins) continue;
    const auto k = static_cast<long>(pos);
    const double frac = pos - k;
    bins[k] += 1.0 - frac;
    bins[k + 1] += frac;
  }
  const int reach = 40;  // 5h in units of delta
  std::vector<double> kernel(2 * reach + 1);
  for (int j = -reach; j <= reach; ++j) {
    const double z = j * delta / h;
    kernel[j + reach] = std::exp(-0.5 * z * z) / (std::sqrt(2.0 * kPi) * h);
  }
  const double roughness = 1.0 / (2.0 * std::sqrt(kPi));
  const double nd = static_cast<double>(n);

  std::vector<double> px, pv, pe;
  const auto core_steps = static_cast<long>(std::floor(core / (2.0 * delta)));
  for (long i = -core_steps; i <= core_steps; ++i) {
    const long k = 2 * i + half_bins;
    double s = 0.0;
    for (int j = -reach; j <= reach; ++j) s += bins[k + j] * kernel[j + reach];
    const double value = s / nd;
    px.push_back(2.0 * i * delta);
    pv.push_back(value);
    pe.push_back(std::sqrt(std::max(value, 0.0) * roughness / (nd * h)));
  }
  double mass = 0.0;
  for (std::size_t i = 0; i + 1 < pv.size(); ++i) mass += 0.5 * (pv[i] + pv[i + 1]) * (px[i + 1] - px[i]);

  // Histogram bins of width 4h beyond the core, mirrored on both sides.
  const double core_edge = core_steps * 2.0 * delta;
  const double w = 4.0 * h;
  const auto outer_bins = static_cast<long>(std::ceil((outer - core_edge) / w));
  std::vector<double> counts(outer_bins, 0.0), counts_neg(outer_bins, 0.0);
  for (double v : x) {
    const double a = std::abs(v);
    if (a <= core_edge) continue;
    const auto b = static_cast<long>((a - core_edge) / w);
    if (b >= outer_bins) continue;
    (v > 0.0 ? counts : counts_neg)[b] += 1.0;
  }
  std::vector<double> lx, lv, le;
  for (long b = outer_bins - 1; b >= 0; --b) {
    lx.push_back(-(core_edge + (b + 0.5) * w));
    lv.push_back(counts_neg[b] / (nd * w));
    le.push_back(std::sqrt(counts_neg[b]) / (nd * w));
    mass += counts_neg[b] / nd;
  }
  for (long b = 0; b < outer_bins; ++b) mass += counts[b] / nd;

  DensityGrid out;
  out.t = t;
  out.d = 1;
  out.bandwidth = h;
  out.n_samples = n;
  out.mass = mass;
  const std::size_t total = lx.size() + px.size() + static_cast<std::size_t>(outer_bins);
  out.points.resize(total, 1);
  out.values.resize(total);
  out.std_err.resize(total);
  std::size_t row = 0;
  auto push = [&](double px_, double pv_, double pe_) {
    out.points(row, 0) = px_;
    out.values(row) = pv_;
    out.std_err(row) = pe_;
    ++row;
  };
  for (std::size_t i = 0; i < lx.size(); ++i) push(lx[i], lv[i], le[i]);
  for (std::size_t i = 0; i < px.size(); ++i) push(px[i], pv[i], pe[i]);
  for (long b = 0; b < outer_bins; ++b) {
    push(core_edge + (b + 0.5) * w, counts[b] / (nd * w), std::sqrt(counts[b]) / (nd * w));
  }
  out.samples_beyond_one =
      static_cast<std::size_t>(std::count_if(x.begin(), x.end(), [](double v) { return std::abs(v) > 1.0; }));
  return out;
}

DensityGrid shell_histogram(const SampleMatrix& samples, double t, double r) {
  const int d = static_cast<int>(samples.cols());
  const auto n = static_cast<std::size_t>(samples.rows());
  std::vector<double> radius(n);
  for (std::size_t i = 0; i < n; ++i) radius[i] = samples.row(i).norm();
  std::vector<double> sorted = radius;
  std::sort(sorted.begin(), sorted.end());
  const double outer = std::max({3.0, 2.0 * r, sorted[static_cast<std::size_t>(0.9999 * (n - 1))]});
  const double median = sorted[n / 2];
  const double w = std::max(median, 1e-12) * std::pow(static_cast<double>(n), -1.0 / (d + 4.0));
  const auto nbins = static_cast<long>(std::ceil(outer / w));
  std::vector<double> counts(nbins, 0.0);
  for (double v : radius) {
    const auto b = static_cast<long>(v / w);
    if (b < nbins) counts[b] += 1.0;
  }
  const double area = radial::sphere_area(d);
  DensityGrid out;
  out.t = t;
  out.d = d;
  out.bandwidth = w;
  out.n_samples = n;
  out.points = Eigen::MatrixXd::Zero(nbins, d);
  out.values.resize(nbins);
  out.std_err.resize(nbins);
  const double nd = static_cast<double>(n);
  for (long b = 0; b < nbins; ++b) {
    const double volume = area / d * (std::pow((b + 1) * w, d) - std::pow(b * w, d));
    out.points(b, 0) = (b + 0.5) * w;
    out.values(b) = counts[b] / (nd * volume);
    out.std_err(b) = std::sqrt(counts[b]) / (nd * volume);
    out.mass += counts[b] / nd;
  }
  out.samples_beyond_one =
      static_cast<std::size_t>(std::count_if(radius.begin(), radius.end(), [](double v) { return v > 1.0; }));
  return out;
}

}  // namespace

DensityGrid density_estimate(const SampleMatrix& samples, double t, double r, double bandwidth) {
  if (samples.rows() < 2) throw std::invalid_argument("density estimate needs samples");
  return samples.cols() == 1 ? kde_1d(samples, t, r, bandwidth) : shell_histogram(samples, t, r);
}

DensityGrid truncated_density_estimate(const TruncatedStableSpec& spec, double t, std::size_t n,
                                       const SeedSpec& seed, double bandwidth, int threads) {
  if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("truncated density estimate needs t in (0, 1]");
  if (n < 10000) throw std::invalid_argument("truncated density estimate needs n >= 1e4");
  const SampleMatrix samples =
      sample_truncated_stable(spec, t, default_epsilon(spec, t), n, seed, threads);
  return density_estimate(samples, t, spec.r(), bandwidth);
}

Envelope fit_envelope(const std::vector<double>& w, const std::vector<double>& v, bool upper,
                      double min_slope) {
  if (w.empty() || w.size() != v.size()) throw std::invalid_argument("envelope fit needs matching points");
  // A lower envelope of (w, v) is the negated upper envelope of (w, -v) with slope <= -min_slope;
  // both reduce to scanning candidate slopes taken from the convex hull.
  const double sgn = upper ? 1.0 : -1.0;
  std::vector<std::pair<double, double>> pts(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) pts[i] = {w[i], sgn * v[i]};
  std::sort(pts.begin(), pts.end());
  std::vector<std::pair<double, double>> hull;
  for (const auto& p : pts) {
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull.back();
      const double cross = (b.first - a.first) * (p.second - a.second) - (b.second - a.second) * (p.first - a.first);
      if (cross >= 0.0) hull.pop_back();
      else break;
    }
    if (!hull.empty() && hull.back().first == p.first) {
      hull.back().second = std::max(hull.back().second, p.second);
      continue;
    }
    hull.push_back(p);
  }
  double w_mean = 0.0;
  for (double x : w) w_mean += x;
  w_mean /= static_cast<double>(w.size());

  // Slope s in the transformed problem corresponds to sgn * s in the original.
  std::vector<double> candidates{sgn * min_slope};
  for (std::size_t i = 0; i + 1 < hull.size(); ++i) {
    const double s = (hull[i + 1].second - hull[i].second) / (hull[i + 1].first - hull[i].first);
    if (sgn * s >= min_slope) candidates.push_back(s);
  }
  Envelope best;
  double best_obj = INFINITY;
  for (double s : candidates) {
    double a = -INFINITY;
    for (const auto& p : hull) a = std::max(a, p.second - s * p.first);
    const double obj = a + s * w_mean;
    if (obj < best_obj) {
      best_obj = obj;
      best = {sgn * a, sgn * s};
    }
  }
  return best;
}

TailConvexity tail_convexity_check(const DensityGrid& estimate, const std::vector<double>& radii) {
  TailConvexity out;
  out.radii = radii;
  out.passed = radii.size() >= 2;
  std::vector<double> neg_log;
  for (double r : radii) {
    double p = estimate.value_at(r);
    if (estimate.d == 1) p = 0.5 * (p + estimate.value_at(-r));
    const double h = p > 0.0 ? -std::log(p) / r : INFINITY;
    if (!std::isfinite(h)) out.passed = false;
    out.h.push_back(h);
    neg_log.push_back(h * r);
  }
  if (!out.passed) return out;
  double prev_slope = 0.0;
  for (std::size_t i = 0; i + 1 < radii.size(); ++i) {
    const double slope = (neg_log[i + 1] - neg_log[i]) / (radii[i + 1] - radii[i]);
    if (!(slope > prev_slope)) out.passed = false;
    prev_slope = slope;
  }
  return out;
}

TruncatedBoundConstants check_truncated_bounds(const TruncatedStableSpec& spec,
                                               const std::vector<DensityGrid>& estimates) {
  if (estimates.empty()) throw std::invalid_argument("check_truncated_bounds needs estimates");
  const int d = spec.d();
  const double alpha = spec.alpha();
  TruncatedBoundConstants out;
  out.c1 = 0.0;
  out.c2 = INFINITY;
  std::vector<double> tail_w, tail_v;
  for (const auto& est : estimates) {
    const double t = est.t;
    if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("truncated bounds apply for t in (0, 1]");
    double c1 = 0.0, c2 = INFINITY, c7 = 0.0;
    for (Eigen::Index i = 0; i < est.values.size(); ++i) {
      const double radius = est.points.row(i).norm();
      const double p = est.values(i);
      c7 = std::max(c7, p * std::pow(t, d / alpha));
      if (!(p > 0.0)) continue;
      if (radius <= 1.0) {
        const double ratio = p / bound_shape(t, radius, d, alpha);
        c1 = std::max(c1, ratio);
        c2 = std::min(c2, ratio);
      } else {
        tail_w.push_back(radius * std::log(t / radius));
        tail_v.push_back(std::log(p));
      }
    }
    out.per_t.push_back({c1, c2, c7});
    out.c1 = std::max(out.c1, c1);
    out.c2 = std::min(out.c2, c2);
    out.c7 = std::max(out.c7, c7);
    if (est.samples_beyond_one < 100) out.tail_reliable = false;
    out.convexity.push_back(tail_convexity_check(est, {1.5, 2.0, 3.0}));
  }
  if (!tail_w.empty()) {
    const Envelope up = fit_envelope(tail_w, tail_v, true);
    const Envelope low = fit_envelope(tail_w, tail_v, false);
    out.c3 = std::exp(up.intercept);
    out.c4 = up.slope;
    out.c5 = std::exp(low.intercept);
    out.c6 = low.slope;
  } else {
    out.tail_reliable = false;
  }

  const double tol = 1e-12;
  for (const auto& est : estimates) {
    const double t = est.t;
    for (Eigen::Index i = 0; i < est.values.size(); ++i) {
      const double radius = est.points.row(i).norm();
      const double p = est.values(i);
      if (p > out.c7 * std::pow(t, -d / alpha) * (1.0 + tol)) ++out.global_violations;
      if (!(p > 0.0)) continue;
      if (radius <= 1.0) {
        const double phi = bound_shape(t, radius, d, alpha);
        if (p > out.c1 * phi * (1.0 + tol) || p < out.c2 * phi * (1.0 - tol)) ++out.near_violations;
      } else {
        const double w = radius * std::log(t / radius);
        const double lp = std::log(p);
        if (lp > std::log(out.c3) + out.c4 * w + tol * (1.0 + std::abs(lp)) ||
            lp < std::log(out.c5) + out.c6 * w - tol * (1.0 + std::abs(lp))) {
          ++out.tail_violations;
        }
      }
    }
  }
  std::ostringstream os;
  os << estimates.size() << " times, n = " << estimates.front().n_samples << " samples each";
  out.grid_meta = os.str();
  return out;
}

}  // namespace harnack
