#pragma once

#include "harnack/levy_core.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace harnack {

/// Identifies one reproducible random stream.
///
/// Output is a pure function of (master_seed, stream_id); sample sets are cut
/// into fixed-size chunks, each with its own engine, so results do not depend
/// on the number of worker threads.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;
};

/// Child stream derived from `parent` and a tag (e.g. a time-step index).
SeedSpec substream(const SeedSpec& parent, std::uint64_t tag);

std::mt19937_64 make_engine(const SeedSpec& seed, std::uint64_t chunk);

inline constexpr std::size_t kChunkSize = 4096;

/// Row-major (n x d) sample block.
using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Symmetric stable draws with characteristic function exp(-scale^alpha |xi|^alpha),
/// by the Chambers-Mallows-Stuck transform.
Eigen::VectorXd sample_sym_stable_1d(double alpha, double scale, std::size_t n, const SeedSpec& seed,
                                     int threads = 1);

/// Positive (beta)-stable draws with Laplace transform exp(-lambda^beta), 0 < beta < 1.
Eigen::VectorXd sample_positive_stable(double beta, std::size_t n, const SeedSpec& seed,
                                       int threads = 1);

/// Scale s with X = s * sqrt(2 S) * G having symbol t * sigma * c * |xi|^alpha,
/// where S has Laplace transform exp(-lambda^{alpha/2}) and G is standard normal.
double rot_stable_scale(const StableSpec& spec, double t);

/// Increments at time t of the rotationally invariant stable process, by
/// Gaussian subordination.
SampleMatrix sample_rot_stable(const StableSpec& spec, double t, std::size_t n, const SeedSpec& seed,
                               int threads = 1);

struct CfProbeResult {
  double max_deviation_in_se = 0.0;
  bool passed = true;
};

/// Compares the empirical characteristic function of sample_rot_stable with
/// exp(-t psi(xi)) at the given frequencies; passes within 3 standard errors.
CfProbeResult check_rot_stable_calibration(const StableSpec& spec, double t,
                                           const std::vector<Vector>& probes, std::size_t n,
                                           const SeedSpec& seed, int threads = 1);

/// Compound-Poisson plus small-jump Gaussian split of a truncated stable measure.
struct JumpDecomposition {
  double epsilon = 0.0;
  double poisson_intensity = 0.0;      // nu({epsilon <= |z| <= r})
  double gaussian_sd_per_coord = 0.0;  // sqrt((1/d) int_{|z|<epsilon} |z|^2 nu(dz))
};

JumpDecomposition make_jump_decomposition(const TruncatedStableSpec& spec, double epsilon);

/// min(r / 10, t^{1/alpha} / 10).
double default_epsilon(const TruncatedStableSpec& spec, double t);

SampleMatrix sample_truncated_stable(const TruncatedStableSpec& spec, double t, double epsilon,
                                     std::size_t n, const SeedSpec& seed, int threads = 1);

/// Tabulated jump law of a residual Levy density on [epsilon, r_max].
struct ResidualJumpLaw {
  int d = 1;
  double epsilon = 0.0;
  double r_max = 0.0;
  double intensity = 0.0;
  double gaussian_sd_per_coord = 0.0;
  double neglected_mass = 0.0;  // nu({|z| > r_max})
  std::vector<double> log_radius;
  std::vector<double> cumulative;
};

/// Throws std::runtime_error when the mass beyond r_max exceeds 1e-4 of the total.
ResidualJumpLaw make_residual_jump_law(const ResidualDensity& residual, double epsilon,
                                       double r_max = 1e8);

SampleMatrix sample_residual(const ResidualDensity& residual, double t, double epsilon, std::size_t n,
                             const SeedSpec& seed, double r_max = 1e8, int threads = 1);

/// Same, returning the per-sample Poisson jump counts as well.
SampleMatrix sample_residual(const ResidualJumpLaw& law, double t, std::size_t n, const SeedSpec& seed,
                             int threads = 1, std::vector<long>* jump_counts = nullptr);

struct CfEstimate {
  double value = 0.0;
  double std_err = 0.0;
};

/// Real part of the empirical characteristic function, mean of cos<xi, X_i>.
CfEstimate empirical_cf(const SampleMatrix& samples, const Vector& xi);

}  // namespace harnack
