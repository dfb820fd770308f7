// harnack_cli: density tables, raw samples, semigroup estimates and inequality verification.
#include "harnack/density.hpp"
#include "harnack/harnack_lab.hpp"
#include "harnack/ou_semigroup.hpp"
#include "harnack/report_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <bit>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace harnack;

namespace {

struct Options {
  std::string spec_path;
  std::string grid_path;
  std::string out_dir = ".";
  std::string format = "json";
  std::uint64_t seed = 0;
  int threads = 1;
  std::string inequality = "all";
  std::vector<double> t;
  std::size_t n = 0;
};

struct Context {
  Options opt;
  json spec_doc;
  json grid_doc = json::object();
  std::string generated_at;

  OUSpec spec() const { return spec_from_json(spec_doc); }
  int d() const { return spec_doc.at("d").get<int>(); }
  std::string driver() const { return spec_doc.value("driver", "stable"); }
  bool wants_json() const { return opt.format != "csv"; }
  bool wants_csv() const { return opt.format != "json"; }
  SeedSpec seed(std::uint64_t stream = 0) const { return {opt.seed, stream}; }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

template <class T>
T grid_value(const Context& ctx, const char* key, T fallback) {
  if (!ctx.grid_doc.contains(key)) return fallback;
  try {
    return ctx.grid_doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("/") + key, "wrong type");
  }
}

std::vector<double> times(const Context& ctx, std::vector<double> fallback) {
  if (!ctx.opt.t.empty()) return ctx.opt.t;
  return grid_value(ctx, "times", fallback);
}

std::size_t sample_count(const Context& ctx, std::size_t fallback) {
  if (ctx.opt.n > 0) return ctx.opt.n;
  return grid_value<std::size_t>(ctx, "n", fallback);
}

std::vector<Vector> points(const Context& ctx, std::vector<Vector> fallback) {
  if (!ctx.grid_doc.contains("x")) return fallback;
  const json& a = ctx.grid_doc.at("x");
  if (!a.is_array() || a.empty()) throw ConfigError("/x", "expected a nonempty array of points");
  std::vector<Vector> out;
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(vector_from_json(a[i], ctx.d(), "/x/" + std::to_string(i)));
  return out;
}

Vector axis_point(int d, double s) {
  Vector v = Vector::Zero(d);
  v(0) = s;
  return v;
}

json run_meta(const Context& ctx) {
  return {{"spec", ctx.spec_doc}, {"seed", seed_to_json(ctx.seed())}, {"tool_version", kToolVersion},
          {"generated_at", ctx.generated_at}};
}

int cmd_density(const Context& ctx) {
  const OUSpec spec = ctx.spec();
  const int d = ctx.d();
  std::vector<DensityGrid> grids;
  if (ctx.driver() == "stable") {
    if (!spec.drift_is_zero()) throw std::invalid_argument("density tables need A = 0");
    const StableSpec s = std::get<StableSpec>(spec.driver());
    std::vector<Vector> xs;
    const double lo = d == 1 ? -10.0 : 0.0;
    for (int k = 0; lo + 0.1 * k <= 10.0 + 1e-12; ++k) xs.push_back(axis_point(d, lo + 0.1 * k));
    xs = points(ctx, xs);
    for (double t : times(ctx, {1.0})) {
      DensityGrid g;
      g.t = t;
      g.d = d;
      g.points.resize(static_cast<Eigen::Index>(xs.size()), d);
      g.values.resize(static_cast<Eigen::Index>(xs.size()));
      for (std::size_t k = 0; k < xs.size(); ++k) {
        g.points.row(k) = xs[k].transpose();
        g.values(k) = stable_density(s, t, xs[k]);
      }
      grids.push_back(std::move(g));
    }
  } else if (ctx.driver() == "truncated") {
    if (!spec.drift_is_zero()) throw std::invalid_argument("density tables need A = 0");
    const auto& s = std::get<TruncatedStableSpec>(spec.driver());
    for (double t : times(ctx, {0.5})) {
      grids.push_back(truncated_density_estimate(s, t, sample_count(ctx, 1000000),
                                                 substream(ctx.seed(), std::bit_cast<std::uint64_t>(t)), 0.0,
                                                 ctx.opt.threads));
    }
  } else {
    throw std::invalid_argument("density tables are available for stable and truncated drivers");
  }
  const fs::path out(ctx.opt.out_dir);
  if (ctx.wants_json()) {
    json doc = run_meta(ctx);
    doc["grids"] = json::array();
    for (const auto& g : grids) doc["grids"].push_back(density_grid_json(g));
    write_json(out / "density.json", doc);
  }
  if (ctx.wants_csv()) {
    std::string text;
    for (std::size_t i = 0; i < grids.size(); ++i) {
      std::string csv = density_grid_csv(grids[i]);
      if (i > 0) csv = csv.substr(csv.find('\n') + 1);
      text += csv;
    }
    write_text(out / "density.csv", text);
  }
  return 0;
}

int cmd_sample(const Context& ctx) {
  const OUSpec spec = ctx.spec();
  const std::vector<double> ts = times(ctx, {1.0});
  if (ts.size() != 1) throw std::invalid_argument("sample takes a single --t");
  const std::size_t n = sample_count(ctx, 100000);
  const SampleMatrix x = sample_ou(spec, Vector::Zero(ctx.d()), {0, ts[0]}, n, ctx.seed(), ctx.opt.threads);
  write_sample_dump(fs::path(ctx.opt.out_dir) / "samples.bin", x, ts[0], ctx.spec_doc, ctx.seed());
  return 0;
}

int cmd_estimate(const Context& ctx) {
  const OUSpec spec = ctx.spec();
  const int d = ctx.d();
  const std::size_t n = sample_count(ctx, 100000);
  const auto xs = points(ctx, {axis_point(d, 0.0), axis_point(d, 1.0), axis_point(d, 2.0)});
  const auto fs_set = default_harnack_functions(d);
  json rows = json::array();
  std::ostringstream csv;
  csv << "t";
  for (int i = 1; i <= d; ++i) csv << ",x_" << i;
  csv << ",f,mean,std_err\n";
  csv.precision(17);
  for (double t : times(ctx, {1.0})) {
    const SemigroupSampler sampler(spec, t, n, substream(ctx.seed(), std::bit_cast<std::uint64_t>(t)),
                                   ctx.opt.threads);
    for (const auto& x : xs) {
      for (const auto& f : fs_set) {
        const SemigroupEstimate e = sampler.estimate(f, x);
        rows.push_back({{"t", t}, {"x", vector_to_json(x)}, {"f", f.tag()}, {"mean", e.mean}, {"std_err", e.std_err}});
        csv << t;
        for (int i = 0; i < d; ++i) csv << ',' << x(i);
        csv << ',' << f.tag() << ',' << e.mean << ',' << e.std_err << '\n';
      }
    }
  }
  const fs::path out(ctx.opt.out_dir);
  if (ctx.wants_json()) {
    json doc = run_meta(ctx);
    doc["n"] = n;
    doc["estimates"] = rows;
    write_json(out / "estimate.json", doc);
  }
  if (ctx.wants_csv()) write_text(out / "estimate.csv", csv.str());
  return 0;
}

std::vector<InequalityId> applicable(const Context& ctx, const OUSpec& spec) {
  std::vector<InequalityId> out;
  const std::string driver = ctx.driver();
  if (driver == "truncated") {
    out = {InequalityId::truncated_ratio, InequalityId::log_harnack};
  } else {
    out.push_back(spec.drift_is_zero() && driver == "stable" ? InequalityId::harnack_stable : InequalityId::harnack_ou);
    out.push_back(InequalityId::p_harnack);
    if (driver == "stable") out.push_back(InequalityId::ratio_lemma);
  }
  out.push_back(InequalityId::young);
  out.push_back(InequalityId::jensen);
  return out;
}

struct Verified {
  InequalityReport report;
  json grid;
};

Verified run_inequality(const Context& ctx, const OUSpec& spec, InequalityId id) {
  const int d = ctx.d();
  const SeedSpec seed = substream(ctx.seed(), static_cast<std::uint64_t>(id) + 1);
  const double stability = grid_value(ctx, "stability", 1.25);
  const PairGrid train =
      ctx.grid_doc.contains("train") ? pair_grid_from_json(ctx.grid_doc.at("train"), d, "/train") : default_pair_grid(d);
  const PairGrid validation = ctx.grid_doc.contains("validation")
                                  ? pair_grid_from_json(ctx.grid_doc.at("validation"), d, "/validation")
                                  : default_validation_grid(d);
  McConfig mc;
  mc.n = sample_count(ctx, 100000);
  mc.seed = seed;
  mc.threads = ctx.opt.threads;
  mc.n_steps = grid_value(ctx, "n_steps", 0);
  const json pair_grids = {{"train", pair_grid_to_json(train)}, {"validation", pair_grid_to_json(validation)},
                           {"n", mc.n}};
  const std::string driver = ctx.driver();
  const bool stable_a0 = driver == "stable" && spec.drift_is_zero();

  switch (id) {
    case InequalityId::harnack_stable:
    case InequalityId::harnack_ou: {
      if (driver == "truncated") throw std::invalid_argument(to_string(id) + " needs a stable or dominating driver");
      if ((id == InequalityId::harnack_stable) != stable_a0) {
        throw std::invalid_argument(id == InequalityId::harnack_stable
                                        ? "harnack_stable needs a stable driver with A = 0; use harnack_ou"
                                        : "harnack_ou needs A != 0 or a dominating driver; use harnack_stable");
      }
      return {verify_harnack(spec, default_harnack_functions(d), train, validation, mc, stability), pair_grids};
    }
    case InequalityId::p_harnack: {
      if (driver == "truncated") throw std::invalid_argument("p_harnack needs a stable or dominating driver");
      const auto p = grid_value<std::vector<double>>(ctx, "p", {1.001, 1.5, 2.0, 4.0});
      json g = pair_grids;
      g["p"] = p;
      InequalityReport r = verify_p_harnack(spec, default_harnack_functions(d), p, train, validation, mc, stability);
      r.id = InequalityId::p_harnack;
      r.claim = claim_text(r.id);
      return {std::move(r), g};
    }
    case InequalityId::ratio_lemma: {
      if (driver != "stable") throw std::invalid_argument("ratio_lemma needs a stable driver");
      const StableSpec s = std::get<StableSpec>(spec.driver());
      const auto nodes = default_ratio_nodes(d, 0.0);
      const auto val = default_ratio_nodes(d, 0.5);
      const double u = std::max(max_scaled_distance(nodes, s.alpha()), max_scaled_distance(val, s.alpha()));
      const BoundConstants bc = fit_bound_constants_for(s, u);
      json g = {{"t", {0.1, 0.25, 0.5, 1.0, 2.0}},
                {"dist", {0.0, 0.5, 1.0, 2.0, 4.0}},
                {"z", "log-spaced radii from 1e-3 to 10 max(1, |x-y|), validation shifted by half a step"},
                {"nodes", nodes.size()},
                {"validation_nodes", val.size()}};
      return {verify_ratio_lemma(s, bc, nodes, val, ctx.opt.threads, stability), g};
    }
    case InequalityId::truncated_ratio: {
      if (driver != "truncated") throw std::invalid_argument("truncated_ratio needs a truncated driver");
      const auto& s = std::get<TruncatedStableSpec>(spec.driver());
      const auto ts = times(ctx, {0.25, 0.5, 1.0});
      const auto kde_n = grid_value<std::size_t>(ctx, "kde_n", 1000000);
      std::vector<DensityGrid> estimates;
      for (double t : ts) {
        estimates.push_back(truncated_density_estimate(s, t, kde_n, substream(seed, std::bit_cast<std::uint64_t>(t)),
                                                       0.0, ctx.opt.threads));
      }
      json g = {{"times", ts}, {"kde_n", kde_n}, {"dist", {0.0, 0.5, 1.0, 2.0}},
                {"z", "z - y on [-4, 4] in steps of 0.05, validation shifted by half a step"}};
      InequalityReport r = verify_truncated_ratio(s, estimates, default_truncated_nodes(ts, d, 0.0),
                                                  default_truncated_nodes(ts, d, 0.5), stability);
      std::vector<DensityGrid> bounded;
      for (const auto& e : estimates) {
        if (e.t <= 1.0) bounded.push_back(e);
      }
      if (!bounded.empty()) {
        const TruncatedBoundConstants tb = check_truncated_bounds(s, bounded);
        const double c[] = {tb.c1, tb.c2, tb.c3, tb.c4, tb.c5, tb.c6, tb.c7};
        for (int k = 0; k < 7; ++k) r.constants["density_c" + std::to_string(k + 1)] = c[k];
        r.constants["density_violations"] = tb.near_violations + tb.tail_violations + tb.global_violations;
        if (tb.near_violations + tb.tail_violations + tb.global_violations > 0) {
          r.failures.push_back("density bounds violated at their own fit");
        }
        for (const auto& cv : tb.convexity) {
          if (!cv.passed) r.failures.push_back("tail convexity of -log p / |x| fails");
        }
        if (!tb.tail_reliable) r.meta["density_tail"] = "fewer than 100 samples beyond |x| = 1";
      }
      return {std::move(r), g};
    }
    case InequalityId::log_harnack: {
      if (driver != "truncated") throw std::invalid_argument("log_harnack needs a truncated driver");
      return {verify_log_harnack(spec, default_log_functions(d), train, validation, mc, stability), pair_grids};
    }
    case InequalityId::young:
    case InequalityId::jensen: {
      const auto instances = grid_value<std::size_t>(ctx, "instances", 1000);
      InequalityReport r = id == InequalityId::young ? young_suite(instances, seed) : jensen_suite(instances, seed);
      return {std::move(r), json{{"instances", instances}, {"max_dimension", 20}}};
    }
  }
  throw std::logic_error("unhandled inequality");
}

int cmd_verify(const Context& ctx) {
  const OUSpec spec = ctx.spec();
  std::vector<InequalityId> ids;
  if (ctx.opt.inequality == "all") {
    ids = applicable(ctx, spec);
  } else {
    const auto id = parse_inequality_id(ctx.opt.inequality);
    if (!id) {
      std::string valid;
      for (const auto& s : inequality_ids()) valid += " " + s;
      throw std::invalid_argument("unknown inequality id '" + ctx.opt.inequality + "'; valid ids: all" + valid);
    }
    ids = {*id};
  }
  const fs::path out(ctx.opt.out_dir);
  bool all_passed = true;
  for (InequalityId id : ids) {
    Verified v = run_inequality(ctx, spec, id);
    const std::string name = to_string(id);
    if (ctx.wants_json()) write_json(out / ("report_" + name + ".json"), report_to_json(v.report, ctx.spec_doc, v.grid, ctx.generated_at));
    if (ctx.wants_csv()) write_text(out / ("report_" + name + ".csv"), report_to_csv(v.report, ctx.d()));
    const bool ok = v.report.passed();
    std::cout << name << ": " << (ok ? "pass" : "FAIL") << "  fitted_C=" << v.report.fitted_C
              << "  validation_C=" << v.report.validation_C << "  excluded=" << v.report.excluded_nodes << '\n';
    for (const auto& f : v.report.failures) std::cout << "  " << f << '\n';
    if (!ok) {
      write_json(out / ("violations_" + name + ".json"), violations_to_json(v.report));
      all_passed = false;
    }
  }
  return all_passed ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stable and truncated stable densities, OU semigroups and Harnack-type inequality checks"};
  app.require_subcommand(1);
  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--spec", opt.spec_path, "process spec JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "master seed");
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--format", opt.format, "json, csv or both")->check(CLI::IsMember({"json", "csv", "both"}));
    sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--grid", opt.grid_path, "grid override JSON")->check(CLI::ExistingFile);
    sub->add_option("--t", opt.t, "time(s)");
    sub->add_option("--n", opt.n, "Monte Carlo sample count");
  };
  auto* density = app.add_subcommand("density", "density table on a grid");
  auto* sample = app.add_subcommand("sample", "raw sample dump of X_t started at 0");
  auto* estimate = app.add_subcommand("estimate", "Monte Carlo semigroup values P_t f(x)");
  auto* verify = app.add_subcommand("verify", "inequality verification reports");
  for (auto* sub : {density, sample, estimate, verify}) add_common(sub);
  verify->add_option("--inequality", opt.inequality, "inequality id or 'all'");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    Context ctx;
    ctx.opt = opt;
    ctx.spec_doc = read_json_file(opt.spec_path);
    (void)ctx.spec();
    if (!opt.grid_path.empty()) {
      ctx.grid_doc = read_json_file(opt.grid_path);
      if (!ctx.grid_doc.is_object()) throw ConfigError("/", "grid document must be an object");
      static const std::set<std::string> known{"train", "validation", "n",      "p",       "instances",
                                               "times", "kde_n",      "n_steps", "stability", "x"};
      for (const auto& [key, value] : ctx.grid_doc.items()) {
        if (!known.contains(key)) throw ConfigError("/" + key, "unknown grid field");
      }
    }
    ctx.generated_at = utc_timestamp();
    fs::create_directories(opt.out_dir);
    if (density->parsed()) return cmd_density(ctx);
    if (sample->parsed()) return cmd_sample(ctx);
    if (estimate->parsed()) return cmd_estimate(ctx);
    return cmd_verify(ctx);
  } catch (const ConfigError& e) {
    std::cerr << "config error at " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
