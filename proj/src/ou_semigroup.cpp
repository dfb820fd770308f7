#include "harnack/ou_semigroup.hpp"

#include "harnack/parallel.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace harnack {

Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& a, double t) {
  if (a.rows() != a.cols()) throw std::invalid_argument("matrix_exp: matrix must be square");
  if (!a.allFinite() || !std::isfinite(t)) throw std::invalid_argument("matrix_exp: non-finite input");
  if (a.size() == 0) return a;
  const Eigen::MatrixXd scaled = a * t;
  if (scaled.isZero(0.0)) return Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd out = scaled.exp();
  if (!out.allFinite()) throw std::overflow_error("matrix_exp: e^{tA} overflows");
  return out;
}

TestFunction::TestFunction(Kind kind, Vector center, double scale, double offset, double level)
    : kind_(kind), center_(std::move(center)), scale_(scale), offset_(offset), level_(level) {}

TestFunction TestFunction::ball_indicator(Vector center, double radius, double offset) {
  if (!(radius > 0.0)) throw std::invalid_argument("ball_indicator: radius must be positive");
  if (!(offset >= 0.0)) throw std::invalid_argument("test functions must be nonnegative");
  return {Kind::ball_indicator, std::move(center), radius, offset, 1.0};
}

TestFunction TestFunction::gaussian_bump(Vector center, double width, double offset) {
  if (!(width > 0.0)) throw std::invalid_argument("gaussian_bump: width must be positive");
  if (!(offset >= 0.0)) throw std::invalid_argument("test functions must be nonnegative");
  return {Kind::gaussian_bump, std::move(center), width, offset, 1.0};
}

TestFunction TestFunction::constant(double value) {
  if (!(value >= 0.0) || !std::isfinite(value)) throw std::invalid_argument("constant: value must be finite and >= 0");
  TestFunction f(Kind::constant, Vector(), 1.0, 0.0, 1.0);
  f.weight_ = value;
  return f;
}

TestFunction TestFunction::exp_cap(double level, Vector center) {
  if (!(level >= 1.0) || !std::isfinite(level)) throw std::invalid_argument("exp_cap: level must be finite and >= 1");
  return {Kind::exp_cap, std::move(center), 1.0, 0.0, level};
}

TestFunction TestFunction::power(double p) const {
  if (log_) throw std::invalid_argument("power of a logged test function");
  if (!(p > 0.0)) throw std::invalid_argument("test function power must be positive");
  TestFunction f = *this;
  f.exponent_ *= p;
  return f;
}

TestFunction TestFunction::log() const {
  if (log_) throw std::invalid_argument("test function is already logged");
  if (!(infimum() >= 1.0)) throw std::invalid_argument("log of a test function requires f >= 1");
  TestFunction f = *this;
  f.log_ = true;
  return f;
}

TestFunction TestFunction::shifted(const Vector& delta) const {
  TestFunction f = *this;
  if (kind_ == Kind::constant) return f;
  f.center_ = (center_.size() == 0 ? Vector(Vector::Zero(delta.size())) : center_) - delta;
  return f;
}

double TestFunction::apply(double v) const {
  if (exponent_ != 1.0) v = std::pow(v, exponent_);
  return log_ ? std::log(v) : v;
}

double TestFunction::infimum() const {
  switch (kind_) {
    case Kind::constant: return apply(weight_);
    case Kind::exp_cap: return apply(offset_ + weight_);
    default: return apply(offset_);
  }
}

double TestFunction::supremum() const {
  switch (kind_) {
    case Kind::constant: return apply(weight_);
    case Kind::exp_cap: return apply(offset_ + weight_ * level_);
    default: return apply(offset_ + weight_);
  }
}

std::string TestFunction::tag() const {
  std::ostringstream os;
  os.precision(12);
  auto center = [&] {
    os << "[";
    for (Eigen::Index i = 0; i < center_.size(); ++i) os << (i ? "," : "") << center_(i);
    os << "]";
  };
  switch (kind_) {
    case Kind::ball_indicator:
      os << "ball_indicator(";
      center();
      os << "," << scale_ << ")";
      break;
    case Kind::gaussian_bump:
      os << "gaussian_bump(";
      center();
      os << "," << scale_ << ")";
      break;
    case Kind::constant:
      os << "constant(" << weight_ << ")";
      break;
    case Kind::exp_cap:
      os << "exp_cap(" << level_;
      if (center_.size() != 0) {
        os << ",";
        center();
      }
      os << ")";
      break;
  }
  std::string base = os.str();
  if (offset_ != 0.0) {
    std::ostringstream o;
    o.precision(12);
    o << offset_ << "+" << base;
    base = o.str();
  }
  if (exponent_ != 1.0) {
    std::ostringstream o;
    o.precision(12);
    o << "(" << base << ")^" << exponent_;
    base = o.str();
  }
  return log_ ? "log(" + base + ")" : base;
}

int default_steps(const OUSpec& spec, double t) {
  return std::max(1, static_cast<int>(std::ceil(50.0 * spec.drift_norm() * t)));
}

namespace {

// Raises epsilon until the expected number of residual jumps over [0, t] is at most 8;
// the jumps below it go into the Gaussian part.
ResidualJumpLaw capped_jump_law(const ResidualDensity& residual, double t, double epsilon) {
  constexpr double kMaxJumps = 8.0;
  ResidualJumpLaw law = make_residual_jump_law(residual, epsilon);
  if (t * law.intensity <= kMaxJumps) return law;
  for (std::size_t i = 1; i < law.cumulative.size(); ++i) {
    if (t * (law.intensity - law.cumulative[i]) <= kMaxJumps) {
      return make_residual_jump_law(residual, std::exp(law.log_radius[i]));
    }
  }
  return law;
}

}  // namespace

SampleMatrix sample_increments(const Driver& driver, double t, std::size_t n, const SeedSpec& seed,
                               int threads) {
  if (!(t > 0.0)) throw std::invalid_argument("sample_increments: t must be positive");
  return std::visit(
      [&](const auto& s) -> SampleMatrix {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, StableSpec>) {
          if (s.d() == 1) {
            return sample_sym_stable_1d(s.alpha(), rot_stable_scale(s, t), n, seed, threads);
          }
          return sample_rot_stable(s, t, n, seed, threads);
        } else if constexpr (std::is_same_v<T, TruncatedStableSpec>) {
          return sample_truncated_stable(s, t, default_epsilon(s, t), n, seed, threads);
        } else if constexpr (std::is_same_v<T, DominatingLevySpec>) {
          SampleMatrix out = sample_increments(Driver(s.stable_floor), t, n, substream(seed, 1), threads);
          const ResidualDensity residual = split_levy_measure(s);
          if (!residual.identically_zero) {
            const double eps = std::max(1e-6, 0.1 * std::pow(t, 1.0 / s.stable_floor.alpha()));
            out += sample_residual(capped_jump_law(residual, t, eps), t, n, substream(seed, 2), threads);
          }
          return out;
        } else {
          if (s.identically_zero) return SampleMatrix::Zero(n, s.d);
          return sample_residual(capped_jump_law(s, t, 1e-3), t, n, seed, threads);
        }
      },
      driver);
}

SampleMatrix sample_ou_convolution(const OUSpec& spec, const OUPathConfig& cfg, std::size_t n,
                                   const SeedSpec& seed, int threads) {
  if (!(cfg.t > 0.0)) throw std::invalid_argument("OU horizon t must be positive");
  if (cfg.n_steps < 0) throw std::invalid_argument("n_steps must be >= 1");
  const int steps = cfg.n_steps == 0 ? default_steps(spec, cfg.t) : cfg.n_steps;
  const double h = cfg.t / steps;
  if (spec.drift_is_zero() && steps == 1) return sample_increments(spec.driver(), cfg.t, n, seed, threads);
  SampleMatrix z = SampleMatrix::Zero(n, spec.d());
  for (int k = 1; k <= steps; ++k) {
    const SampleMatrix dl = sample_increments(spec.driver(), h, n, substream(seed, k), threads);
    if (spec.drift_is_zero()) {
      z += dl;
    } else {
      const Matrix w = matrix_exp(spec.drift(), cfg.t - (k - 1) * h);
      z += dl * w.transpose();
    }
  }
  return z;
}

SampleMatrix sample_ou(const OUSpec& spec, const Vector& x0, const OUPathConfig& cfg, std::size_t n,
                       const SeedSpec& seed, int threads) {
  if (x0.size() != spec.d()) throw std::invalid_argument("sample_ou: x0 dimension mismatch");
  SampleMatrix out = sample_ou_convolution(spec, cfg, n, seed, threads);
  const Eigen::RowVectorXd shift = (matrix_exp(spec.drift(), cfg.t) * x0).transpose();
  out.rowwise() += shift;
  return out;
}

std::pair<double, double> mean_and_std_err(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  if (n == 0) throw std::invalid_argument("mean of an empty sample");
  double mean = 0.0, m2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double delta = v(i) - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v(i) - mean);
  }
  const double var = n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
  return {mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(n))};
}

SemigroupSampler::SemigroupSampler(const OUSpec& spec, double t, std::size_t n, const SeedSpec& seed,
                                   int threads, int n_steps)
    : t_(t), seed_(seed), threads_(threads), flow_(matrix_exp(spec.drift(), t)) {
  if (n == 0) throw std::invalid_argument("semigroup sampler needs n >= 1");
  noise_ = sample_ou_convolution(spec, OUPathConfig{n_steps, t}, n, seed, threads);
}

Eigen::VectorXd SemigroupSampler::values(const TestFunction& f, const Vector& x) const {
  if (x.size() != noise_.cols()) throw std::invalid_argument("starting point dimension mismatch");
  const Eigen::RowVectorXd start = (flow_ * x).transpose();
  const auto n = static_cast<std::size_t>(noise_.rows());
  Eigen::VectorXd out(n);
  const std::size_t chunks = (n + kChunkSize - 1) / kChunkSize;
  parallel_for(chunks, threads_, [&](std::size_t c) {
    const std::size_t end = std::min(n, (c + 1) * kChunkSize);
    Eigen::RowVectorXd z(noise_.cols());
    for (std::size_t i = c * kChunkSize; i < end; ++i) {
      z = start + noise_.row(i);
      out(i) = f(z);
    }
  });
  return out;
}

SemigroupEstimate SemigroupSampler::estimate(const TestFunction& f, const Vector& x) const {
  const auto [mean, se] = mean_and_std_err(values(f, x));
  SemigroupEstimate out;
  out.mean = mean;
  out.std_err = se;
  out.n = size();
  out.t = t_;
  out.x = x;
  out.f_tag = f.tag();
  out.seed = seed_;
  return out;
}

SemigroupEstimate estimate_Ptf(const OUSpec& spec, const TestFunction& f, const Vector& x, double t,
                               std::size_t n, const SeedSpec& seed, int threads, int n_steps) {
  return SemigroupSampler(spec, t, n, seed, threads, n_steps).estimate(f, x);
}

FactorizationReport factorization_check(const OUSpec& spec, double t, const std::vector<Vector>& probe_xis) {
  if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("factorization_check needs t in (0, 1]");
  const StableSpec* floor = nullptr;
  if (const auto* s = std::get_if<StableSpec>(&spec.driver())) floor = s;
  if (const auto* s = std::get_if<DominatingLevySpec>(&spec.driver())) floor = &s->stable_floor;
  if (floor == nullptr) {
    throw std::invalid_argument("factorization_check needs a stable or dominating driver (domination fails otherwise)");
  }
  FactorizationReport out;
  out.t = t;
  out.c0 = compute_c0(spec.drift_norm(), spec.d());
  for (const auto& xi : probe_xis) {
    FactorizationProbe p;
    p.xi = xi;
    const double k = xi.norm();
    const double subtracted = k == 0.0 ? 0.0 : t * out.c0 * floor->c() * std::pow(k, floor->alpha());
    p.mu_hat = compute_mu_hat(spec, xi, t).modulus;
    p.stable_factor = std::exp(-subtracted);
    p.pi_hat = p.mu_hat > 0.0 ? std::exp(std::log(p.mu_hat) + subtracted) : 0.0;
    p.excess = std::max(p.pi_hat - 1.0, 0.0);
    out.max_excess = std::max(out.max_excess, p.excess);
    out.probes.push_back(p);
  }
  out.passed = out.max_excess <= 1e-8;
  return out;
}

}  // namespace harnack
