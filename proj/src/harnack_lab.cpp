#include "harnack/harnack_lab.hpp"

#include "harnack/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace harnack {

namespace {

const std::vector<std::pair<InequalityId, std::string>>& id_table() {
  static const std::vector<std::pair<InequalityId, std::string>> table = {
      {InequalityId::harnack_stable, "harnack_stable"}, {InequalityId::harnack_ou, "harnack_ou"},
      {InequalityId::p_harnack, "p_harnack"},           {InequalityId::ratio_lemma, "ratio_lemma"},
      {InequalityId::truncated_ratio, "truncated_ratio"}, {InequalityId::log_harnack, "log_harnack"},
      {InequalityId::young, "young"},                   {InequalityId::jensen, "jensen"}};
  return table;
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

double driver_alpha(const Driver& driver) {
  if (const auto* s = std::get_if<StableSpec>(&driver)) return s->alpha();
  if (const auto* s = std::get_if<TruncatedStableSpec>(&driver)) return s->alpha();
  if (const auto* s = std::get_if<DominatingLevySpec>(&driver)) return s->stable_floor.alpha();
  throw std::invalid_argument("driver has no stability index");
}

bool pure_stable_mode(const OUSpec& spec) {
  return spec.drift_is_zero() && std::holds_alternative<StableSpec>(spec.driver());
}

SeedSpec time_stream(const SeedSpec& seed, double t) { return substream(seed, std::bit_cast<std::uint64_t>(t)); }

// One sampler per time, shared by every node and test function at that time.
class SamplerCache {
 public:
  SamplerCache(const OUSpec& spec, const McConfig& mc) : spec_(spec), mc_(mc) {}

  const SemigroupSampler& at(double t) {
    auto it = cache_.find(t);
    if (it == cache_.end()) {
      it = cache_.emplace(t, std::make_unique<SemigroupSampler>(spec_, t, mc_.n, time_stream(mc_.seed, t),
                                                                 mc_.threads, mc_.n_steps))
               .first;
    }
    return *it->second;
  }

 private:
  const OUSpec& spec_;
  const McConfig& mc_;
  std::map<double, std::unique_ptr<SemigroupSampler>> cache_;
};

struct GroupFit {
  double fitted = 0.0;
  double validation = 0.0;
  bool has_validation = false;
};

// Fits the constant over the non-excluded nodes in `idx`, fills node ratios,
// and records violations and instability.
GroupFit fit_group(InequalityReport& rep, const std::vector<std::size_t>& idx, const std::string& label) {
  std::vector<std::size_t> train, val;
  for (std::size_t i : idx) {
    const auto& node = rep.per_node[i];
    if (node.excluded) continue;
    (node.validation ? val : train).push_back(i);
  }
  GroupFit out;
  auto fit = [&](const std::vector<std::size_t>& set) {
    Eigen::VectorXd lhs(set.size()), rhs(set.size()), slack(set.size());
    for (std::size_t k = 0; k < set.size(); ++k) {
      lhs(k) = rep.per_node[set[k]].lhs;
      rhs(k) = rep.per_node[set[k]].rhs_shape;
      slack(k) = rep.per_node[set[k]].slack;
    }
    return fit_constant(lhs, rhs, slack);
  };
  if (train.empty()) {
    rep.failures.push_back("no usable training nodes for " + label);
    return out;
  }
  out.fitted = fit(train);
  for (std::size_t i : idx) {
    auto& node = rep.per_node[i];
    if (node.excluded) continue;
    node.ratio = std::max(node.lhs - node.slack, 0.0) / node.rhs_shape;
  }
  for (std::size_t i : train) {
    const auto& node = rep.per_node[i];
    if (node.lhs - node.slack > out.fitted * node.rhs_shape * (1.0 + 1e-12)) rep.violations.push_back(i);
  }
  if (!val.empty()) {
    out.has_validation = true;
    out.validation = fit(val);
    if (out.validation > rep.stability_threshold * out.fitted) {
      rep.failures.push_back("validation constant for " + label + " (" + format_number(out.validation) +
                             ") exceeds " + format_number(rep.stability_threshold) + " x fitted (" +
                             format_number(out.fitted) + ")");
    }
  }
  return out;
}

void count_excluded(InequalityReport& rep) {
  rep.excluded_nodes = static_cast<int>(
      std::count_if(rep.per_node.begin(), rep.per_node.end(), [](const NodeResult& n) { return n.excluded; }));
}

std::string describe(const PairGrid& grid) {
  std::ostringstream os;
  os << "t in {";
  for (std::size_t i = 0; i < grid.t.size(); ++i) os << (i ? ", " : "") << grid.t[i];
  os << "}, |x-y| in {";
  for (std::size_t i = 0; i < grid.dist.size(); ++i) os << (i ? ", " : "") << grid.dist[i];
  os << "}, " << grid.base_points.size() << " base points";
  if (grid.both_orderings) os << ", both orderings";
  return os.str();
}

Vector unit(int d, int k) {
  Vector e = Vector::Zero(d);
  e(k) = 1.0;
  return e;
}

}  // namespace

const std::vector<std::string>& inequality_ids() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> out;
    for (const auto& [id, name] : id_table()) out.push_back(name);
    return out;
  }();
  return ids;
}

std::string to_string(InequalityId id) {
  for (const auto& [key, name] : id_table()) {
    if (key == id) return name;
  }
  return "unknown";
}

std::optional<InequalityId> parse_inequality_id(std::string_view name) {
  for (const auto& [key, label] : id_table()) {
    if (label == name) return key;
  }
  return std::nullopt;
}

std::string claim_text(InequalityId id) {
  switch (id) {
    case InequalityId::harnack_stable:
      return "P_t f(x) <= C P_t f(y) (1 + |x-y|/t^{1/alpha})^{d+alpha} for the stable semigroup";
    case InequalityId::harnack_ou:
      return "P_t f(x) <= C P_t f(y) (1 + |x-y|/min(t,1)^{1/alpha})^{d+alpha} for the OU semigroup";
    case InequalityId::p_harnack:
      return "(P_t f(x))^p <= C P_t f^p(y) (1 + |x-y|/min(t,1)^{1/alpha})^{p(d+alpha)}";
    case InequalityId::ratio_lemma:
      return "p_t(x,z)/p_t(y,z) <= 2^{alpha+d} (c2/c1) (1 + |x-y|/t^{1/alpha})^{d+alpha}";
    case InequalityId::truncated_ratio:
      return "p_t(x,z)/p_t(y,z) <= C1 t^{-d/alpha} (M/t)^{C2 M}, M = 2 v |x-y| v |y-z|, t in (0,1]";
    case InequalityId::log_harnack:
      return "P_t(log f)(x) <= log P_t f(y) + C (1+|x-y|) log((2+|x-y|)/min(t,1)), f >= 1";
    case InequalityId::young:
      return "mu(g h) <= mu(g log g) + log mu(e^h) for mu(g) = 1";
    case InequalityId::jensen:
      return "mu(log f) <= log mu(f)";
  }
  return "";
}

double lemma_ratio_bound(double t, const Vector& x, const Vector& y, double alpha, int d, double c1, double c2) {
  return lemma_ratio_bound(t, (x - y).norm(), alpha, d, c1, c2);
}

std::string to_string(RatioCase c) {
  switch (c) {
    case RatioCase::case_i: return "case_i";
    case RatioCase::case_ii: return "case_ii";
    case RatioCase::case_iii: return "case_iii";
  }
  return "unknown";
}

RatioCase classify_case(double t, double dist_xy, double dist_yz, double alpha) {
  if (!(t > 0.0)) throw std::invalid_argument("classify_case: t must be positive");
  const double scale = std::pow(t, 1.0 / alpha);
  if (dist_yz <= scale) return RatioCase::case_i;
  if (dist_yz >= 2.0 * std::max(scale, dist_xy)) return RatioCase::case_ii;
  return RatioCase::case_iii;
}

CaseBound classify_case(double t, const Vector& x, const Vector& y, const Vector& z, double alpha, int d,
                        double c1, double c2) {
  const double dist_yz = (y - z).norm();
  CaseBound out;
  out.tag = classify_case(t, (x - y).norm(), dist_yz, alpha);
  switch (out.tag) {
    case RatioCase::case_i:
      out.bound = c2 / c1;
      break;
    case RatioCase::case_ii:
      out.bound = std::pow(2.0, alpha + d) * c2 / c1;
      break;
    case RatioCase::case_iii:
      out.bound = c2 / c1 * std::pow(dist_yz / std::pow(t, 1.0 / alpha), d + alpha);
      break;
  }
  return out;
}

double fit_constant(const Eigen::Ref<const Eigen::VectorXd>& lhs, const Eigen::Ref<const Eigen::VectorXd>& rhs_shape,
                    const Eigen::Ref<const Eigen::VectorXd>& slack) {
  if (lhs.size() == 0) throw std::invalid_argument("fit_constant: empty node set");
  if (rhs_shape.size() != lhs.size() || slack.size() != lhs.size()) {
    throw std::invalid_argument("fit_constant: size mismatch");
  }
  double c = 0.0;
  for (Eigen::Index i = 0; i < lhs.size(); ++i) {
    if (!(rhs_shape(i) > 0.0)) throw std::invalid_argument("fit_constant: rhs_shape must be positive");
    c = std::max(c, std::max(lhs(i) - slack(i), 0.0) / rhs_shape(i));
  }
  return c;
}

MarginResult young_inequality_check(const Eigen::VectorXd& mu, const Eigen::VectorXd& g, const Eigen::VectorXd& h) {
  if (mu.size() == 0 || mu.size() != g.size() || mu.size() != h.size()) {
    throw std::invalid_argument("young_inequality_check: size mismatch");
  }
  if ((mu.array() < 0.0).any() || (g.array() < 0.0).any() || (h.array() < 0.0).any()) {
    throw std::invalid_argument("young_inequality_check: inputs must be nonnegative");
  }
  const Eigen::VectorXd m = mu / mu.sum();
  const double mass = m.dot(g);
  if (!(mass > 0.0)) throw std::invalid_argument("young_inequality_check: mu(g) must be positive");
  const Eigen::VectorXd gn = g / mass;
  if (std::abs(m.dot(gn) - 1.0) > 1e-12) throw std::runtime_error("young_inequality_check: mu(g) != 1 after renormalization");
  double entropy = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (gn(i) > 0.0) entropy += m(i) * gn(i) * std::log(gn(i));
  }
  // log sum mu_i e^{h_i}, skipping zero weights.
  double top = -INFINITY;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (m(i) > 0.0) top = std::max(top, h(i));
  }
  double s = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (m(i) > 0.0) s += m(i) * std::exp(h(i) - top);
  }
  MarginResult out;
  out.lhs = m.dot(gn.cwiseProduct(h));
  out.rhs = entropy + top + std::log(s);
  out.margin = out.rhs - out.lhs;
  out.holds = out.margin >= -1e-12;
  return out;
}

MarginResult jensen_check(const Eigen::VectorXd& mu, const Eigen::VectorXd& f) {
  if (mu.size() == 0 || mu.size() != f.size()) throw std::invalid_argument("jensen_check: size mismatch");
  if ((mu.array() < 0.0).any()) throw std::invalid_argument("jensen_check: mu must be nonnegative");
  if ((f.array() <= 0.0).any()) throw std::invalid_argument("jensen_check: f must be positive");
  const Eigen::VectorXd m = mu / mu.sum();
  MarginResult out;
  out.lhs = m.dot(f.array().log().matrix());
  out.rhs = std::log(m.dot(f));
  out.margin = out.rhs - out.lhs;
  out.holds = out.margin >= -1e-12;
  return out;
}

std::vector<PairNode> expand(const PairGrid& grid, int d) {
  std::vector<PairNode> out;
  for (double t : grid.t) {
    for (const auto& y : grid.base_points) {
      if (y.size() != d) throw std::invalid_argument("grid base point dimension mismatch");
      for (double dist : grid.dist) {
        if (dist == 0.0) {
          out.push_back({t, y, y});
          continue;
        }
        for (int k = 0; k < d; ++k) {
          const Vector x = y + dist * unit(d, k);
          out.push_back({t, x, y});
          if (grid.both_orderings) out.push_back({t, y, x});
        }
      }
    }
  }
  return out;
}

PairGrid default_pair_grid(int d) {
  return {{0.1, 0.25, 0.5, 1.0, 2.0}, {0.0, 0.5, 1.0, 2.0, 4.0}, {Vector::Zero(d), unit(d, 0)}, true};
}

PairGrid default_validation_grid(int d) {
  return {{0.15, 0.4, 0.75, 1.5}, {0.25, 0.75, 1.5, 3.0}, {Vector::Zero(d), 0.5 * unit(d, 0)}, true};
}

std::vector<TestFunction> default_harnack_functions(int d) {
  return {TestFunction::ball_indicator(Vector::Zero(d), 1.0), TestFunction::gaussian_bump(Vector::Zero(d), 1.0),
          TestFunction::exp_cap(10.0)};
}

std::vector<TestFunction> default_log_functions(int d) {
  return {TestFunction::ball_indicator(Vector::Zero(d), 1.0, 1.0),
          TestFunction::gaussian_bump(Vector::Zero(d), 1.0, 1.0), TestFunction::exp_cap(10.0)};
}

InequalityReport verify_p_harnack(const OUSpec& spec, const std::vector<TestFunction>& f_set,
                                  const std::vector<double>& p_list, const PairGrid& train,
                                  const PairGrid& validation, const McConfig& mc, double stability) {
  if (f_set.empty() || p_list.empty()) throw std::invalid_argument("p-Harnack needs test functions and exponents");
  if (std::holds_alternative<TruncatedStableSpec>(spec.driver())) {
    throw std::invalid_argument("Harnack verification needs a driver dominating a stable measure");
  }
  const int d = spec.d();
  const double alpha = driver_alpha(spec.driver());
  const bool stable_mode = pure_stable_mode(spec);

  InequalityReport rep;
  rep.stability_threshold = stability;
  rep.seed = mc.seed;
  SamplerCache samplers(spec, mc);

  std::map<double, std::vector<std::size_t>> groups;  // by p
  std::map<std::string, std::vector<std::size_t>> by_f;
  int jensen_failures = 0;

  auto run = [&](const std::vector<PairNode>& nodes, bool is_validation) {
    for (const auto& node : nodes) {
      const auto& sampler = samplers.at(node.t);
      const double shape = harnack_shape(node.t, (node.x - node.y).norm(), alpha, d, !stable_mode);
      for (const auto& f : f_set) {
        const Eigen::VectorXd vx = sampler.values(f, node.x);
        const auto [mx, sex] = mean_and_std_err(vx);
        for (double p : p_list) {
          const TestFunction fp = f.power(p);
          const Eigen::VectorXd vyp = p == 1.0 ? sampler.values(f, node.y) : sampler.values(fp, node.y);
          const auto [myp, seyp] = mean_and_std_err(vyp);
          NodeResult r;
          r.t = node.t;
          r.x = node.x;
          r.y = node.y;
          r.f_tag = f.tag();
          r.p = p;
          r.validation = is_validation;
          r.lhs = std::pow(mx, p);
          r.lhs_se = p * std::pow(mx, p - 1.0) * sex;
          r.rhs_shape = myp * std::pow(shape, p);
          if (!(myp > 0.0) || myp < 3.0 * seyp) {
            r.excluded = true;
            r.note = "P_t f(y) not significantly positive";
          } else {
            // Paired delta-method error of mx^p - rho * P f^p(y) at rho = mx^p / myp.
            const double rho = r.lhs / myp;
            const Eigen::VectorXd diff = p * std::pow(mx, p - 1.0) * vx - rho * vyp;
            r.slack = 3.0 * mean_and_std_err(diff).second;
          }
          if (p != 1.0) {
            // Jensen sanity: (P f(x))^p <= P f^p(x).
            const auto [mxp, sexp] = mean_and_std_err(sampler.values(fp, node.x));
            if (r.lhs > mxp + 3.0 * sexp) ++jensen_failures;
          }
          rep.per_node.push_back(std::move(r));
          groups[p].push_back(rep.per_node.size() - 1);
          by_f[f.tag()].push_back(rep.per_node.size() - 1);
        }
      }
    }
  };
  run(expand(train, d), false);
  run(expand(validation, d), true);

  double fitted = 0.0, validated = 0.0;
  for (const auto& [p, idx] : groups) {
    const std::string label = "p=" + format_number(p);
    const GroupFit g = fit_group(rep, idx, label);
    rep.constants["C[" + label + "]"] = g.fitted;
    if (g.has_validation) rep.constants["validation_C[" + label + "]"] = g.validation;
    fitted = std::max(fitted, g.fitted);
    validated = std::max(validated, g.validation);
  }
  if (p_list.size() == 1) {
    for (const auto& [tag, idx] : by_f) {
      std::vector<std::size_t> train_idx;
      for (std::size_t i : idx) {
        if (!rep.per_node[i].excluded && !rep.per_node[i].validation) train_idx.push_back(i);
      }
      if (train_idx.empty()) continue;
      double c = 0.0;
      for (std::size_t i : train_idx) c = std::max(c, rep.per_node[i].ratio);
      rep.constants["C[" + tag + "]"] = c;
    }
  }
  rep.fitted_C = fitted;
  rep.validation_C = validated;
  if (jensen_failures > 0) rep.failures.push_back(std::to_string(jensen_failures) + " nodes fail the Jensen sanity check");
  count_excluded(rep);
  rep.meta["mode"] = stable_mode ? "pure stable, shape uses t" : "shape uses min(t, 1)";
  rep.meta["train_grid"] = describe(train);
  rep.meta["validation_grid"] = describe(validation);
  rep.meta["samples_per_node"] = std::to_string(mc.n);
  rep.meta["slack"] = "3 x paired standard error (delta method)";
  return rep;
}

InequalityReport verify_harnack(const OUSpec& spec, const std::vector<TestFunction>& f_set, const PairGrid& train,
                                const PairGrid& validation, const McConfig& mc, double stability) {
  InequalityReport rep = verify_p_harnack(spec, f_set, {1.0}, train, validation, mc, stability);
  rep.id = pure_stable_mode(spec) ? InequalityId::harnack_stable : InequalityId::harnack_ou;
  rep.claim = claim_text(rep.id);
  rep.constants.erase("C[p=1]");
  rep.constants.erase("validation_C[p=1]");
  bool has_diagonal = false;
  for (const auto& n : rep.per_node) {
    if (!n.validation && !n.excluded && n.x == n.y) has_diagonal = true;
  }
  if (has_diagonal && rep.fitted_C < 1.0) rep.failures.push_back("fitted constant below 1 on a grid with x = y nodes");
  return rep;
}

std::vector<RatioNode> default_ratio_nodes(int d, double offset) {
  const std::vector<double> times{0.1, 0.25, 0.5, 1.0, 2.0};
  const std::vector<double> dists{0.0, 0.5, 1.0, 2.0, 4.0};
  std::vector<Vector> dirs;
  if (d == 1) {
    dirs = {unit(1, 0), -unit(1, 0)};
  } else {
    for (double angle : {0.0, std::numbers::pi / 3, 2 * std::numbers::pi / 3, std::numbers::pi}) {
      dirs.push_back(std::cos(angle) * unit(d, 0) + std::sin(angle) * unit(d, 1));
    }
  }
  const int radii = static_cast<int>((400 + dirs.size() - 1) / dirs.size());
  std::vector<RatioNode> out;
  for (double t : times) {
    for (double dist : dists) {
      const Vector y = Vector::Zero(d);
      const Vector x = dist * unit(d, 0);
      if (offset == 0.0) out.push_back({t, x, y, y});
      const double lo = std::log(1e-3);
      const double hi = std::log(10.0 * std::max(1.0, dist));
      const double step = (hi - lo) / (radii - 1);
      for (const auto& dir : dirs) {
        for (int k = 0; k < radii; ++k) {
          const double pos = k + offset;
          if (pos > radii - 1) continue;
          out.push_back({t, x, y, y + std::exp(lo + pos * step) * dir});
        }
      }
    }
  }
  return out;
}

double max_scaled_distance(const std::vector<RatioNode>& nodes, double alpha) {
  double u = 0.0;
  for (const auto& n : nodes) {
    const double scale = std::pow(n.t, 1.0 / alpha);
    u = std::max({u, (n.x - n.z).norm() / scale, (n.y - n.z).norm() / scale});
  }
  return u;
}

BoundConstants fit_bound_constants_for(const StableSpec& spec, double u_max) {
  std::vector<double> u = bound_ratio_extrema(spec, u_max);
  constexpr int kGrid = 200;
  for (int i = 0; i < kGrid; ++i) u.push_back(std::exp(std::log(1e-3) + (std::log(u_max) - std::log(1e-3)) * i / (kGrid - 1)));
  std::vector<Vector> xs;
  for (double v : u) {
    Vector x = Vector::Zero(spec.d());
    x(0) = v;
    xs.push_back(x);
  }
  return estimate_bound_constants(spec, {1.0}, xs);
}

InequalityReport verify_ratio_lemma(const StableSpec& spec, const BoundConstants& constants,
                                    const std::vector<RatioNode>& nodes, const std::vector<RatioNode>& validation,
                                    int threads, double stability) {
  const int d = spec.d();
  const double alpha = spec.alpha();
  const double c1 = constants.c1_hat, c2 = constants.c2_hat;
  if (!(c1 > 0.0 && c2 >= c1)) throw std::invalid_argument("density ratio bound needs 0 < c1 <= c2");

  // Densities are radial: evaluate each distinct (t, radius) once.
  std::map<std::pair<double, double>, double> density;
  for (const auto* set : {&nodes, &validation}) {
    for (const auto& n : *set) {
      density[{n.t, (n.x - n.z).norm()}] = 0.0;
      density[{n.t, (n.y - n.z).norm()}] = 0.0;
    }
  }
  std::vector<std::pair<double, double>> keys;
  for (const auto& kv : density) keys.push_back(kv.first);
  std::vector<double> values(keys.size());
  parallel_for(keys.size(), threads,
               [&](std::size_t i) { values[i] = stable_density_radial(spec, keys[i].first, keys[i].second); });
  for (std::size_t i = 0; i < keys.size(); ++i) density[keys[i]] = values[i];

  InequalityReport rep;
  rep.id = InequalityId::ratio_lemma;
  rep.claim = claim_text(rep.id);
  rep.stability_threshold = stability;
  const double lemma_constant = std::pow(2.0, alpha + d) * c2 / c1;
  std::map<RatioCase, int> case_count, case_violations;
  int global_violations = 0;
  auto run = [&](const std::vector<RatioNode>& set, bool is_validation) {
    for (const auto& n : set) {
      NodeResult r;
      r.t = n.t;
      r.x = n.x;
      r.y = n.y;
      r.z = n.z;
      r.validation = is_validation;
      const double py = density.at({n.t, (n.y - n.z).norm()});
      const double px = density.at({n.t, (n.x - n.z).norm()});
      const CaseBound cb = classify_case(n.t, n.x, n.y, n.z, alpha, d, c1, c2);
      r.note = to_string(cb.tag);
      r.rhs_shape = harnack_shape(n.t, (n.x - n.y).norm(), alpha, d, false);
      if (py < 1e-300) {
        r.excluded = true;
        r.note += ", denominator underflow";
        rep.per_node.push_back(std::move(r));
        continue;
      }
      r.lhs = px / py;
      r.ratio = r.lhs / r.rhs_shape;
      ++case_count[cb.tag];
      bool bad = false;
      if (r.lhs > cb.bound * (1.0 + 1e-6)) {
        ++case_violations[cb.tag];
        bad = true;
      }
      if (r.lhs > lemma_constant * r.rhs_shape * (1.0 + 1e-6)) {
        ++global_violations;
        bad = true;
      }
      rep.per_node.push_back(std::move(r));
      if (bad) rep.violations.push_back(rep.per_node.size() - 1);
    }
  };
  run(nodes, false);
  run(validation, true);
  count_excluded(rep);

  double fitted = 0.0, validated = 0.0;
  for (const auto& n : rep.per_node) {
    if (n.excluded) continue;
    (n.validation ? validated : fitted) = std::max(n.validation ? validated : fitted, n.ratio);
  }
  rep.fitted_C = fitted;
  rep.validation_C = validated;
  if (!validation.empty() && validated > stability * fitted) {
    rep.failures.push_back("validation constant exceeds " + format_number(stability) + " x fitted");
  }
  rep.constants["c1_hat"] = c1;
  rep.constants["c2_hat"] = c2;
  rep.constants["lemma_constant"] = lemma_constant;
  rep.constants["global_violations"] = global_violations;
  for (RatioCase c : {RatioCase::case_i, RatioCase::case_ii, RatioCase::case_iii}) {
    rep.constants["nodes[" + to_string(c) + "]"] = case_count[c];
    rep.constants["violations[" + to_string(c) + "]"] = case_violations[c];
  }
  rep.meta["bound_constants_grid"] = constants.grid_meta;
  rep.meta["nodes"] = std::to_string(nodes.size()) + " training, " + std::to_string(validation.size()) + " validation";
  rep.meta["slack"] = "1e-6 relative";
  return rep;
}

std::vector<RatioNode> default_truncated_nodes(const std::vector<double>& times, int d, double offset) {
  std::vector<RatioNode> out;
  const Vector y = Vector::Zero(d);
  for (double t : times) {
    for (double dist : {0.0, 0.5, 1.0, 2.0}) {
      const Vector x = dist * unit(d, 0);
      for (int k = 0; k <= 160; ++k) {
        const double s = -4.0 + 0.05 * (k + offset);
        if (s > 4.0) continue;
        out.push_back({t, x, y, y + s * unit(d, 0)});
      }
    }
  }
  return out;
}

namespace {

double grid_density(const DensityGrid& est, const Vector& w) { return est.d == 1 ? est.value_at(w(0)) : est.value_at(w.norm()); }

const DensityGrid& estimate_at(const std::vector<DensityGrid>& estimates, double t) {
  for (const auto& e : estimates) {
    if (e.t == t) return e;
  }
  throw std::invalid_argument("no density estimate at t = " + format_number(t));
}

}  // namespace

InequalityReport verify_truncated_ratio(const TruncatedStableSpec& spec, const std::vector<DensityGrid>& estimates,
                                        const std::vector<RatioNode>& nodes, const std::vector<RatioNode>& validation,
                                        double stability) {
  const int d = spec.d();
  const double alpha = spec.alpha();
  InequalityReport rep;
  rep.id = InequalityId::truncated_ratio;
  rep.claim = claim_text(rep.id);
  rep.stability_threshold = stability;
  std::vector<double> w, v;
  auto run = [&](const std::vector<RatioNode>& set, bool is_validation) {
    for (const auto& n : set) {
      if (!(n.t > 0.0 && n.t <= 1.0)) throw std::invalid_argument("truncated ratio bound needs t in (0, 1]");
      const DensityGrid& est = estimate_at(estimates, n.t);
      NodeResult r;
      r.t = n.t;
      r.x = n.x;
      r.y = n.y;
      r.z = n.z;
      r.validation = is_validation;
      const double px = grid_density(est, n.x - n.z);
      const double py = grid_density(est, n.y - n.z);
      if (!(px > 0.0) || !(py > 0.0)) {
        r.excluded = true;
        r.note = "outside the estimated support";
      } else {
        r.lhs = px / py;
        if (!is_validation) {
          const double m = std::max({2.0, (n.x - n.y).norm(), (n.y - n.z).norm()});
          w.push_back(m * std::log(m / n.t));
          v.push_back(std::log(r.lhs) + d / alpha * std::log(n.t));
        }
      }
      rep.per_node.push_back(std::move(r));
    }
  };
  run(nodes, false);
  run(validation, true);
  count_excluded(rep);
  if (w.empty()) {
    rep.failures.push_back("no usable training nodes");
    return rep;
  }
  const Envelope env = fit_envelope(w, v, true);
  const double c2 = env.slope;
  for (auto& r : rep.per_node) {
    if (r.excluded) continue;
    r.rhs_shape = truncated_ratio_bound(r.t, (r.x - r.y).norm(), (r.y - r.z).norm(), 1.0, c2, alpha, d);
  }
  std::vector<std::size_t> all(rep.per_node.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const GroupFit g = fit_group(rep, all, "C1");
  rep.fitted_C = g.fitted;
  rep.validation_C = g.validation;
  rep.constants["C1"] = g.fitted;
  rep.constants["C2"] = c2;
  rep.constants["C1_envelope"] = std::exp(env.intercept);
  rep.meta["estimates"] = std::to_string(estimates.size()) + " density estimates";
  rep.meta["fit"] = "upper envelope of log ratio + (d/alpha) log t against M log(M/t), slope >= 1e-9";
  return rep;
}

LogRatioIntegral log_ratio_integral_bound(const TruncatedStableSpec& spec, double t, const Vector& x, const Vector& y,
                                          const DensityGrid& estimate, double C, std::size_t n, const SeedSpec& seed,
                                          int threads) {
  if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("log ratio integral needs t in (0, 1]");
  constexpr double kFloor = 1e-12;
  LogRatioIntegral out;
  const double dist = (x - y).norm();
  out.envelope = C * (1.0 + dist) * std::log((2.0 + dist) / t);
  if (dist == 0.0) return out;
  const SampleMatrix z = sample_truncated_stable(spec, t, default_epsilon(spec, t), n, seed, threads);
  Eigen::VectorXd terms(z.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const Vector offset = z.row(i).transpose();  // z_i - x
    double px = grid_density(estimate, offset);
    double py = grid_density(estimate, offset + x - y);
    if (!(py > 0.0)) {
      ++out.capped;
      py = kFloor;
    }
    px = std::max(px, kFloor);
    terms(i) = std::log(px / py);
  }
  const auto [mean, se] = mean_and_std_err(terms);
  out.estimate = mean;
  out.std_err = se;
  out.holds = out.estimate <= out.envelope + 3.0 * se;
  return out;
}

InequalityReport verify_log_harnack(const OUSpec& spec, const std::vector<TestFunction>& f_set, const PairGrid& train,
                                    const PairGrid& validation, const McConfig& mc, double stability) {
  if (!std::holds_alternative<TruncatedStableSpec>(spec.driver())) {
    throw std::invalid_argument("log-Harnack verification needs a truncated stable driver");
  }
  for (const auto& f : f_set) {
    if (!(f.infimum() >= 1.0)) throw std::invalid_argument("log-Harnack test functions must satisfy f >= 1");
  }
  const int d = spec.d();
  InequalityReport rep;
  rep.id = InequalityId::log_harnack;
  rep.claim = claim_text(rep.id);
  rep.stability_threshold = stability;
  rep.seed = mc.seed;
  SamplerCache samplers(spec, mc);
  double proof_form = 0.0;
  int diagonal_failures = 0;
  auto run = [&](const std::vector<PairNode>& nodes, bool is_validation) {
    for (const auto& node : nodes) {
      const auto& sampler = samplers.at(node.t);
      const double dist = (node.x - node.y).norm();
      for (const auto& f : f_set) {
        const Eigen::VectorXd lx = sampler.values(f.log(), node.x);
        const Eigen::VectorXd fy = sampler.values(f, node.y);
        const auto [mlx, selx] = mean_and_std_err(lx);
        const auto [my, sey] = mean_and_std_err(fy);
        NodeResult r;
        r.t = node.t;
        r.x = node.x;
        r.y = node.y;
        r.f_tag = f.tag();
        r.validation = is_validation;
        r.lhs = mlx - std::log(my);
        r.lhs_se = selx;
        r.rhs_shape = log_harnack_cost(node.t, dist);
        const Eigen::VectorXd diff = lx - fy / my;
        r.slack = 3.0 * mean_and_std_err(diff).second;
        if (dist == 0.0 && r.lhs > 1e-12) ++diagonal_failures;
        if (!is_validation) proof_form = std::max(proof_form, mlx / (std::log(my) + r.rhs_shape));
        rep.per_node.push_back(std::move(r));
      }
    }
  };
  run(expand(train, d), false);
  run(expand(validation, d), true);
  std::vector<std::size_t> all(rep.per_node.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const GroupFit g = fit_group(rep, all, "C");
  rep.fitted_C = g.fitted;
  rep.validation_C = g.validation;
  count_excluded(rep);
  double diagonal_c = 0.0;
  for (const auto& n : rep.per_node) {
    if (n.x == n.y && !n.excluded) diagonal_c = std::max(diagonal_c, n.ratio);
  }
  rep.constants["C_diagonal"] = diagonal_c;
  rep.constants["proof_form_C"] = proof_form;
  if (diagonal_failures > 0) {
    rep.failures.push_back(std::to_string(diagonal_failures) + " x = y nodes exceed the Jensen bound");
  }
  if (!std::isfinite(rep.fitted_C)) rep.failures.push_back("fitted constant is not finite");
  rep.meta["train_grid"] = describe(train);
  rep.meta["validation_grid"] = describe(validation);
  rep.meta["samples_per_node"] = std::to_string(mc.n);
  rep.meta["slack"] = "3 x paired standard error of log f(x+Z) - f(y+Z)/P_t f(y)";
  rep.meta["proof_form"] = "P_t(log f)(x) <= C' (log P_t f(y) + (1+|x-y|) log((2+|x-y|)/min(t,1)))";
  return rep;
}

namespace {

template <class Check, class Draw>
InequalityReport margin_suite(InequalityId id, std::size_t instances, const SeedSpec& seed, Draw&& draw, Check&& check) {
  InequalityReport rep;
  rep.id = id;
  rep.claim = claim_text(id);
  rep.seed = seed;
  double min_margin = INFINITY;
  for (std::size_t i = 0; i < instances; ++i) {
    auto engine = make_engine(seed, i);
    const MarginResult m = draw(engine, check);
    NodeResult r;
    r.lhs = m.lhs;
    r.rhs_shape = m.rhs;
    r.ratio = m.margin;
    r.note = "instance " + std::to_string(i);
    rep.per_node.push_back(std::move(r));
    min_margin = std::min(min_margin, m.margin);
    if (!m.holds) rep.violations.push_back(i);
  }
  rep.fitted_C = 1.0;
  rep.validation_C = 1.0;
  rep.constants["min_margin"] = min_margin;
  rep.meta["instances"] = std::to_string(instances);
  rep.meta["tolerance"] = "margin >= -1e-12";
  return rep;
}

}  // namespace

InequalityReport young_suite(std::size_t instances, const SeedSpec& seed) {
  auto draw = [](std::mt19937_64& engine, auto&& check) {
    std::uniform_int_distribution<int> dim(1, 20);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int n = dim(engine);
    Eigen::VectorXd mu(n), g(n), h(n);
    const double h_scale = std::log(1e6) * unif(engine);
    for (int i = 0; i < n; ++i) {
      mu(i) = -std::log(1.0 - unif(engine));
      g(i) = unif(engine) < 0.3 ? 0.0 : -std::log(1.0 - unif(engine));
      h(i) = h_scale * unif(engine);
    }
    if (g.sum() == 0.0) g.setOnes();
    return check(mu, g, h);
  };
  return margin_suite(InequalityId::young, instances, seed, draw,
                      [](const auto& mu, const auto& g, const auto& h) { return young_inequality_check(mu, g, h); });
}

InequalityReport jensen_suite(std::size_t instances, const SeedSpec& seed) {
  auto draw = [](std::mt19937_64& engine, auto&& check) {
    std::uniform_int_distribution<int> dim(1, 20);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal;
    const int n = dim(engine);
    Eigen::VectorXd mu(n), f(n);
    for (int i = 0; i < n; ++i) {
      mu(i) = -std::log(1.0 - unif(engine));
      f(i) = std::exp(2.0 * normal(engine));
    }
    return check(mu, f);
  };
  return margin_suite(InequalityId::jensen, instances, seed, draw,
                      [](const auto& mu, const auto& f) { return jensen_check(mu, f); });
}

}  // namespace harnack
