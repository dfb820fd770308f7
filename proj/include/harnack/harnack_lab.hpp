#pragma once

#include "harnack/density.hpp"
#include "harnack/levy_core.hpp"
#include "harnack/ou_semigroup.hpp"
#include "harnack/sampling.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace harnack {

enum class InequalityId { harnack_stable, harnack_ou, p_harnack, ratio_lemma, truncated_ratio, log_harnack, young, jensen };

const std::vector<std::string>& inequality_ids();
std::string to_string(InequalityId id);
std::optional<InequalityId> parse_inequality_id(std::string_view name);
/// One-line statement of the inequality being checked.
std::string claim_text(InequalityId id);

// Bound formulas. Templated so they can be evaluated in extended precision.

/// (1 + |x-y| / s^{1/alpha})^{d+alpha} with s = t, or s = min(t, 1) when truncate_time.
template <class Scalar>
Scalar harnack_shape(Scalar t, Scalar dist, Scalar alpha, int d, bool truncate_time) {
  using std::pow;
  const Scalar s = truncate_time && t > Scalar(1) ? Scalar(1) : t;
  return pow(Scalar(1) + dist / pow(s, Scalar(1) / alpha), Scalar(d) + alpha);
}

/// (2^{alpha+d} c2 / c1) (1 + |x-y| / t^{1/alpha})^{d+alpha}.
template <class Scalar>
Scalar lemma_ratio_bound(Scalar t, Scalar dist_xy, Scalar alpha, int d, Scalar c1, Scalar c2) {
  using std::pow;
  return pow(Scalar(2), alpha + Scalar(d)) * c2 / c1 * harnack_shape(t, dist_xy, alpha, d, false);
}

double lemma_ratio_bound(double t, const Vector& x, const Vector& y, double alpha, int d, double c1, double c2);

/// C1 t^{-d/alpha} (M/t)^{C2 M} with M = 2 v |x-y| v |y-z|.
template <class Scalar>
Scalar truncated_ratio_bound(Scalar t, Scalar dist_xy, Scalar dist_yz, Scalar C1, Scalar C2, Scalar alpha, int d) {
  using std::pow;
  Scalar m = Scalar(2);
  if (dist_xy > m) m = dist_xy;
  if (dist_yz > m) m = dist_yz;
  return C1 * pow(t, -Scalar(d) / alpha) * pow(m / t, C2 * m);
}

/// (1 + |x-y|) log((2 + |x-y|) / min(t, 1)).
template <class Scalar>
Scalar log_harnack_cost(Scalar t, Scalar dist) {
  using std::log;
  const Scalar s = t > Scalar(1) ? Scalar(1) : t;
  return (Scalar(1) + dist) * log((Scalar(2) + dist) / s);
}

enum class RatioCase { case_i, case_ii, case_iii };
std::string to_string(RatioCase c);

struct CaseBound {
  RatioCase tag = RatioCase::case_i;
  double bound = 0.0;
};

/// Boundaries go to the lower-numbered case: |y-z| <= t^{1/alpha} is (i),
/// then |y-z| >= 2 (t^{1/alpha} v |x-y|) is (ii), the rest (iii).
RatioCase classify_case(double t, double dist_xy, double dist_yz, double alpha);

/// Case tag with the intermediate bound c2/c1, 2^{alpha+d} c2/c1 or (c2/c1)(|y-z|/t^{1/alpha})^{d+alpha}.
CaseBound classify_case(double t, const Vector& x, const Vector& y, const Vector& z, double alpha, int d,
                        double c1, double c2);

/// max over nodes of max(lhs - slack, 0) / rhs_shape.
double fit_constant(const Eigen::Ref<const Eigen::VectorXd>& lhs, const Eigen::Ref<const Eigen::VectorXd>& rhs_shape,
                    const Eigen::Ref<const Eigen::VectorXd>& slack);

struct MarginResult {
  bool holds = true;
  double margin = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
};

/// mu(g h) <= mu(g log g) + log mu(e^h) for a probability vector mu, g >= 0 with mu(g) = 1
/// (inputs are renormalized), h >= 0; 0 log 0 = 0.
MarginResult young_inequality_check(const Eigen::VectorXd& mu, const Eigen::VectorXd& g, const Eigen::VectorXd& h);

/// mu(log f) <= log mu(f) for f > 0.
MarginResult jensen_check(const Eigen::VectorXd& mu, const Eigen::VectorXd& f);

struct NodeResult {
  double t = 0.0;
  Vector x;
  Vector y;
  Vector z;  // empty unless the node carries a third point
  std::string f_tag;
  double p = 1.0;
  double lhs = 0.0;
  double rhs_shape = 0.0;
  double slack = 0.0;
  double ratio = 0.0;   // node constant max(lhs - slack, 0) / rhs_shape, or the raw margin
  double lhs_se = 0.0;  // unpaired standard error of lhs, when Monte Carlo
  bool validation = false;
  bool excluded = false;
  std::string note;
};

struct InequalityReport {
  InequalityId id = InequalityId::harnack_stable;
  std::string claim;
  std::vector<NodeResult> per_node;
  double fitted_C = 0.0;
  double validation_C = 0.0;
  double stability_threshold = 1.25;
  int excluded_nodes = 0;
  std::vector<std::size_t> violations;
  SeedSpec seed;
  std::map<std::string, double> constants;
  std::map<std::string, std::string> meta;
  std::vector<std::string> failures;

  bool passed() const { return violations.empty() && failures.empty(); }
};

/// Grid of (t, x, y) built from base points y, distances and the coordinate axes.
struct PairGrid {
  std::vector<double> t;
  std::vector<double> dist;
  std::vector<Vector> base_points;
  bool both_orderings = true;
};

struct PairNode {
  double t;
  Vector x;
  Vector y;
};

std::vector<PairNode> expand(const PairGrid& grid, int d);
PairGrid default_pair_grid(int d);
PairGrid default_validation_grid(int d);

struct McConfig {
  std::size_t n = 100000;
  SeedSpec seed;
  int threads = 1;
  int n_steps = 0;
};

/// ball_indicator(0, 1), gaussian_bump(0, 1), exp_cap(10).
std::vector<TestFunction> default_harnack_functions(int d);
/// 1 + ball_indicator(0, 1), 1 + gaussian_bump(0, 1), exp_cap(10).
std::vector<TestFunction> default_log_functions(int d);

/// Harnack inequality P_t f(x) <= C P_t f(y) (1 + |x-y| / s^{1/alpha})^{d+alpha}, with
/// s = t for a pure stable driver and A = 0, and s = min(t, 1) otherwise.
InequalityReport verify_harnack(const OUSpec& spec, const std::vector<TestFunction>& f_set, const PairGrid& train,
                                const PairGrid& validation, const McConfig& mc, double stability = 1.25);

/// (P_t f(x))^p <= C P_t f^p(y) shape^p, fitted separately for each p.
InequalityReport verify_p_harnack(const OUSpec& spec, const std::vector<TestFunction>& f_set,
                                  const std::vector<double>& p_list, const PairGrid& train,
                                  const PairGrid& validation, const McConfig& mc, double stability = 1.25);

struct RatioNode {
  double t;
  Vector x;
  Vector y;
  Vector z;
};

/// Default (t, x, y, z) nodes: at least 10^4, z log-spaced around y out to 10 max(1, |x-y|).
/// `offset` in [0, 1) shifts the radii by a fraction of one log step (validation grids).
std::vector<RatioNode> default_ratio_nodes(int d, double offset = 0.0);

/// Largest |w| / t^{1/alpha} over the points x - z and y - z of the nodes.
double max_scaled_distance(const std::vector<RatioNode>& nodes, double alpha);

/// Density ratios p_t(x-z)/p_t(y-z) against the per-case and the global bound.
InequalityReport verify_ratio_lemma(const StableSpec& spec, const BoundConstants& constants,
                                    const std::vector<RatioNode>& nodes,
                                    const std::vector<RatioNode>& validation = {}, int threads = 1,
                                    double stability = 1.25);

/// Bound constants fitted on the scaled radii needed by the nodes, including the extremes of p/phi.
BoundConstants fit_bound_constants_for(const StableSpec& spec, double u_max);

/// Default truncated-ratio nodes at the given times: x - y in {0, 0.5, 1, 2}, z - y in [-4, 4].
std::vector<RatioNode> default_truncated_nodes(const std::vector<double>& times, int d, double offset = 0.0);

/// Fits (C1, C2) of the truncated ratio bound on density estimates by an envelope fit in
/// (M log(M/t), log ratio + (d/alpha) log t).
InequalityReport verify_truncated_ratio(const TruncatedStableSpec& spec, const std::vector<DensityGrid>& estimates,
                                        const std::vector<RatioNode>& nodes,
                                        const std::vector<RatioNode>& validation = {}, double stability = 1.25);

struct LogRatioIntegral {
  double estimate = 0.0;
  double std_err = 0.0;
  double envelope = 0.0;
  int capped = 0;
  bool holds = true;
};

/// Monte Carlo estimate of int log(p_t(x,z)/p_t(y,z)) p_t(x,z) dz using the density estimate
/// for the log ratio, against C (1 + |x-y|) log((2 + |x-y|)/t).
LogRatioIntegral log_ratio_integral_bound(const TruncatedStableSpec& spec, double t, const Vector& x,
                                          const Vector& y, const DensityGrid& estimate, double C, std::size_t n,
                                          const SeedSpec& seed, int threads = 1);

/// P_t(log f)(x) <= log P_t f(y) + C (1 + |x-y|) log((2 + |x-y|)/ min(t, 1)), f >= 1.
InequalityReport verify_log_harnack(const OUSpec& spec, const std::vector<TestFunction>& f_set, const PairGrid& train,
                                    const PairGrid& validation, const McConfig& mc, double stability = 1.25);

/// Randomized Young / Jensen suites (dimension <= 20).
InequalityReport young_suite(std::size_t instances, const SeedSpec& seed);
InequalityReport jensen_suite(std::size_t instances, const SeedSpec& seed);

}  // namespace harnack
