#include "harnack/sampling.hpp"

#include "harnack/parallel.hpp"
#include "harnack/quadrature.hpp"
#include "harnack/radial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace harnack {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::size_t chunk_count(std::size_t n) { return (n + kChunkSize - 1) / kChunkSize; }

// Calls fill(engine, begin, end) once per fixed-size chunk of [0, n).
template <class Fill>
void for_each_chunk(std::size_t n, const SeedSpec& seed, int threads, Fill&& fill) {
  parallel_for(chunk_count(n), threads, [&](std::size_t chunk) {
    auto engine = make_engine(seed, chunk);
    const std::size_t begin = chunk * kChunkSize;
    fill(engine, begin, std::min(n, begin + kChunkSize));
  });
}

// Uniform on the open interval (0, 1).
double open_uniform(std::mt19937_64& engine) {
  for (;;) {
    const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
    if (u > 0.0) return u;
  }
}

double standard_exponential(std::mt19937_64& engine) { return -std::log(open_uniform(engine)); }

double cms_symmetric(double alpha, std::mt19937_64& engine) {
  const double v = std::numbers::pi * (open_uniform(engine) - 0.5);
  if (alpha == 1.0) return std::tan(v);
  const double w = standard_exponential(engine);
  return std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
         std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
}

// Kanter's representation of a positive stable variable, E exp(-l S) = exp(-l^beta).
double kanter_positive(double beta, std::mt19937_64& engine) {
  const double u = std::numbers::pi * open_uniform(engine);
  const double e = standard_exponential(engine);
  return std::sin(beta * u) / std::pow(std::sin(u), 1.0 / beta) *
         std::pow(std::sin((1.0 - beta) * u) / e, (1.0 - beta) / beta);
}

template <class Row>
void add_uniform_direction(Row&& row, double radius, int d, std::mt19937_64& engine,
                           std::normal_distribution<double>& normal) {
  if (d == 1) {
    row(0) += (engine() >> 63) ? radius : -radius;
    return;
  }
  Eigen::VectorXd g(d);
  double norm = 0.0;
  do {
    for (int k = 0; k < d; ++k) g(k) = normal(engine);
    norm = g.norm();
  } while (norm == 0.0);
  for (int k = 0; k < d; ++k) row(k) += radius * g(k) / norm;
}

}  // namespace

SeedSpec substream(const SeedSpec& parent, std::uint64_t tag) {
  return {parent.master_seed, splitmix64(splitmix64(parent.stream_id) ^ (tag + 0x632be59bd9b4e019ULL))};
}

std::mt19937_64 make_engine(const SeedSpec& seed, std::uint64_t chunk) {
  const std::uint64_t a = splitmix64(seed.master_seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(seed.stream_id + 0x5851f42d4c957f2dULL));
  const std::uint64_t c = splitmix64(b ^ splitmix64(chunk + 0x14057b7ef767814fULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
  return std::mt19937_64(seq);
}

Eigen::VectorXd sample_sym_stable_1d(double alpha, double scale, std::size_t n, const SeedSpec& seed,
                                     int threads) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("alpha must lie in (0, 2)");
  if (!(scale > 0.0)) throw std::invalid_argument("scale must be positive");
  Eigen::VectorXd out(n);
  for_each_chunk(n, seed, threads, [&](std::mt19937_64& engine, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out(i) = scale * cms_symmetric(alpha, engine);
  });
  return out;
}

Eigen::VectorXd sample_positive_stable(double beta, std::size_t n, const SeedSpec& seed, int threads) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
  Eigen::VectorXd out(n);
  for_each_chunk(n, seed, threads, [&](std::mt19937_64& engine, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out(i) = kanter_positive(beta, engine);
  });
  return out;
}

double rot_stable_scale(const StableSpec& spec, double t) {
  return std::pow(t * spec.symbol_coefficient(), 1.0 / spec.alpha());
}

SampleMatrix sample_rot_stable(const StableSpec& spec, double t, std::size_t n, const SeedSpec& seed,
                               int threads) {
  if (!(t > 0.0)) throw std::invalid_argument("sample_rot_stable: t must be positive");
  const int d = spec.d();
  const double beta = 0.5 * spec.alpha();
  const double scale = rot_stable_scale(spec, t);
  SampleMatrix out(n, d);
  for_each_chunk(n, seed, threads, [&](std::mt19937_64& engine, std::size_t begin, std::size_t end) {
    std::normal_distribution<double> normal;
    for (std::size_t i = begin; i < end; ++i) {
      const double radius = scale * std::sqrt(2.0 * kanter_positive(beta, engine));
      for (int k = 0; k < d; ++k) out(i, k) = radius * normal(engine);
    }
  });
  return out;
}

CfEstimate empirical_cf(const SampleMatrix& samples, const Vector& xi) {
  const Eigen::VectorXd phase = samples * xi;
  const Eigen::ArrayXd c = phase.array().cos();
  const double n = static_cast<double>(c.size());
  const double mean = c.mean();
  const double var = n > 1 ? (c - mean).square().sum() / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

CfProbeResult check_rot_stable_calibration(const StableSpec& spec, double t,
                                           const std::vector<Vector>& probes, std::size_t n,
                                           const SeedSpec& seed, int threads) {
  const SampleMatrix samples = sample_rot_stable(spec, t, n, seed, threads);
  CfProbeResult result;
  for (const auto& xi : probes) {
    const CfEstimate est = empirical_cf(samples, xi);
    const double expected = std::exp(-t * symbol(spec, xi));
    const double dev = est.std_err > 0.0 ? std::abs(est.value - expected) / est.std_err
                                         : (est.value == expected ? 0.0 : INFINITY);
    result.max_deviation_in_se = std::max(result.max_deviation_in_se, dev);
  }
  result.passed = result.max_deviation_in_se <= 3.0;
  if (!result.passed) {
    std::ostringstream os;
    os << "rotational stable calibration mismatch: " << result.max_deviation_in_se
       << " standard errors at a probe frequency";
    throw std::runtime_error(os.str());
  }
  return result;
}

JumpDecomposition make_jump_decomposition(const TruncatedStableSpec& spec, double epsilon) {
  if (!(epsilon > 0.0) || !(epsilon < spec.r())) {
    throw std::invalid_argument("small-jump cutoff epsilon must lie in (0, r)");
  }
  const double alpha = spec.alpha();
  const double mass = spec.c() * radial::sphere_area(spec.d());
  JumpDecomposition out;
  out.epsilon = epsilon;
  out.poisson_intensity = mass * (std::pow(epsilon, -alpha) - std::pow(spec.r(), -alpha)) / alpha;
  out.gaussian_sd_per_coord =
      std::sqrt(mass * std::pow(epsilon, 2.0 - alpha) / ((2.0 - alpha) * spec.d()));
  return out;
}

double default_epsilon(const TruncatedStableSpec& spec, double t) {
  return std::min(spec.r() / 10.0, std::pow(t, 1.0 / spec.alpha()) / 10.0);
}

SampleMatrix sample_truncated_stable(const TruncatedStableSpec& spec, double t, double epsilon,
                                     std::size_t n, const SeedSpec& seed, int threads) {
  if (!(t > 0.0)) throw std::invalid_argument("sample_truncated_stable: t must be positive");
  const JumpDecomposition jd = make_jump_decomposition(spec, epsilon);
  const int d = spec.d();
  const double alpha = spec.alpha();
  const double gauss_sd = std::sqrt(t) * jd.gaussian_sd_per_coord;
  const double lo = std::pow(epsilon, -alpha);
  const double span = lo - std::pow(spec.r(), -alpha);
  const double mean_jumps = t * jd.poisson_intensity;
  SampleMatrix out(n, d);
  for_each_chunk(n, seed, threads, [&](std::mt19937_64& engine, std::size_t begin, std::size_t end) {
    std::normal_distribution<double> normal;
    std::poisson_distribution<long> poisson(mean_jumps);
    for (std::size_t i = begin; i < end; ++i) {
      auto row = out.row(i);
      for (int k = 0; k < d; ++k) row(k) = gauss_sd * normal(engine);
      const long jumps = mean_jumps > 0.0 ? poisson(engine) : 0;
      for (long j = 0; j < jumps; ++j) {
        const double u = open_uniform(engine);
        const double radius = std::pow(lo - u * span, -1.0 / alpha);
        add_uniform_direction(row, radius, d, engine, normal);
      }
    }
  });
  return out;
}

ResidualJumpLaw make_residual_jump_law(const ResidualDensity& residual, double epsilon, double r_max) {
  if (!(epsilon > 0.0) || !(r_max > epsilon)) {
    throw std::invalid_argument("residual sampler needs 0 < epsilon < r_max");
  }
  ResidualJumpLaw law;
  law.d = residual.d;
  law.epsilon = epsilon;
  law.r_max = r_max;
  if (residual.identically_zero) return law;

  const int d = residual.d;
  const double area = radial::sphere_area(d);
  const auto& m = residual.density;
  // Jump mass in log-radius: area * m(rho) rho^d.
  auto log_mass = [&](double u) {
    const double rho = std::exp(u);
    return area * m(rho) * std::pow(rho, d);
  };
  constexpr int kNodes = 4097;
  const double a = std::log(epsilon);
  const double b = std::log(r_max);
  const double h = (b - a) / (kNodes - 1);
  law.log_radius.resize(kNodes);
  law.cumulative.assign(kNodes, 0.0);
  double prev = log_mass(a);
  law.log_radius[0] = a;
  for (int i = 1; i < kNodes; ++i) {
    law.log_radius[i] = a + i * h;
    const double cur = log_mass(law.log_radius[i]);
    law.cumulative[i] = law.cumulative[i - 1] + 0.5 * h * (prev + cur);
    prev = cur;
  }
  law.intensity = law.cumulative.back();

  quad::Tolerance tol{1e-300, 1e-10, 4000};
  auto second_moment = [&](double u) {
    const double rho = std::exp(u);
    return area * m(rho) * std::pow(rho, d + 2);
  };
  const double small = quad::gauss_kronrod(second_moment, a - 60.0, a, tol, "residual small jumps").value;
  law.gaussian_sd_per_coord = std::sqrt(std::max(small, 0.0) / d);
  law.neglected_mass = quad::gauss_kronrod(log_mass, b, b + 60.0, tol, "residual tail mass").value;
  const double total = law.intensity + law.neglected_mass;
  if (total > 0.0 && law.neglected_mass > 1e-4 * total) {
    std::ostringstream os;
    os << "residual Levy mass beyond r_max = " << r_max << " is " << law.neglected_mass / total
       << " of the total; increase r_max";
    throw std::runtime_error(os.str());
  }
  return law;
}

SampleMatrix sample_residual(const ResidualJumpLaw& law, double t, std::size_t n, const SeedSpec& seed,
                             int threads, std::vector<long>* jump_counts) {
  if (!(t > 0.0)) throw std::invalid_argument("sample_residual: t must be positive");
  const int d = law.d;
  SampleMatrix out = SampleMatrix::Zero(n, d);
  if (jump_counts) jump_counts->assign(n, 0);
  if (law.intensity == 0.0 && law.gaussian_sd_per_coord == 0.0) return out;
  const double gauss_sd = std::sqrt(t) * law.gaussian_sd_per_coord;
  const double mean_jumps = t * law.intensity;
  const double total = law.cumulative.empty() ? 0.0 : law.cumulative.back();
  for_each_chunk(n, seed, threads, [&](std::mt19937_64& engine, std::size_t begin, std::size_t end) {
    std::normal_distribution<double> normal;
    std::poisson_distribution<long> poisson(mean_jumps > 0.0 ? mean_jumps : 1.0);
    for (std::size_t i = begin; i < end; ++i) {
      auto row = out.row(i);
      if (gauss_sd > 0.0) {
        for (int k = 0; k < d; ++k) row(k) = gauss_sd * normal(engine);
      }
      const long jumps = mean_jumps > 0.0 ? poisson(engine) : 0;
      if (jump_counts) (*jump_counts)[i] = jumps;
      for (long j = 0; j < jumps; ++j) {
        const double v = open_uniform(engine) * total;
        auto it = std::upper_bound(law.cumulative.begin(), law.cumulative.end(), v);
        std::size_t hi = std::min<std::size_t>(it - law.cumulative.begin(), law.cumulative.size() - 1);
        std::size_t lo = hi == 0 ? 0 : hi - 1;
        const double width = law.cumulative[hi] - law.cumulative[lo];
        const double frac = width > 0.0 ? (v - law.cumulative[lo]) / width : 0.0;
        const double radius =
            std::exp(law.log_radius[lo] + frac * (law.log_radius[hi] - law.log_radius[lo]));
        add_uniform_direction(row, radius, d, engine, normal);
      }
    }
  });
  return out;
}

SampleMatrix sample_residual(const ResidualDensity& residual, double t, double epsilon, std::size_t n,
                             const SeedSpec& seed, double r_max, int threads) {
  return sample_residual(make_residual_jump_law(residual, epsilon, r_max), t, n, seed, threads);
}

}  // namespace harnack
