#include "harnack/report_io.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace harnack {

using nlohmann::json;

namespace {

const json& require(const json& doc, const std::string& key, const std::string& prefix = "") {
  if (!doc.contains(key)) throw ConfigError(prefix + "/" + key, "missing required field");
  return doc.at(key);
}

double positive_number(const json& doc, const std::string& key, const std::string& prefix = "") {
  const json& v = require(doc, key, prefix);
  if (!v.is_number()) throw ConfigError(prefix + "/" + key, "expected a number");
  const double x = v.get<double>();
  if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(prefix + "/" + key, "must be a positive finite number");
  return x;
}

double alpha_field(const json& doc, const std::string& prefix = "") {
  const double a = positive_number(doc, "alpha", prefix);
  if (!(a < 2.0)) throw ConfigError(prefix + "/alpha", "must lie in (0, 2)");
  return a;
}

int dimension_field(const json& doc) {
  const json& v = require(doc, "d");
  if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 64) {
    throw ConfigError("/d", "expected an integer in [1, 64]");
  }
  return v.get<int>();
}

std::string driver_field(const json& doc) {
  if (!doc.contains("driver")) return "stable";
  const json& v = doc.at("driver");
  if (!v.is_string()) throw ConfigError("/driver", "expected a string");
  const std::string s = v.get<std::string>();
  if (s != "stable" && s != "truncated" && s != "dominating") {
    throw ConfigError("/driver", "expected one of stable, truncated, dominating");
  }
  return s;
}

void reject_unknown(const json& doc, std::initializer_list<const char*> allowed, const std::string& prefix = "") {
  if (!doc.is_object()) throw ConfigError(prefix.empty() ? "/" : prefix, "expected an object");
  for (const auto& [key, value] : doc.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(prefix + "/" + key, "unknown field");
  }
}

Matrix drift_field(const json& doc, int d) {
  if (!doc.contains("A")) return Matrix::Zero(d, d);
  const json& a = doc.at("A");
  if (!a.is_array() || a.size() != static_cast<std::size_t>(d * d)) {
    throw ConfigError("/A", "expected a row-major array of d*d numbers");
  }
  Matrix m(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const json& v = a.at(i * d + j);
      if (!v.is_number()) throw ConfigError("/A/" + std::to_string(i * d + j), "expected a number");
      m(i, j) = v.get<double>();
    }
  }
  return m;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string csv_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

StableSpec stable_from_json(const json& doc) {
  return StableSpec(dimension_field(doc), alpha_field(doc), positive_number(doc, "c"));
}

TruncatedStableSpec truncated_from_json(const json& doc) {
  return TruncatedStableSpec(dimension_field(doc), alpha_field(doc), positive_number(doc, "c"),
                             positive_number(doc, "r"));
}

OUSpec spec_from_json(const json& doc) {
  reject_unknown(doc, {"d", "alpha", "c", "r", "A", "driver", "extra", "name"});
  const int d = dimension_field(doc);
  const std::string kind = driver_field(doc);
  const Matrix drift = drift_field(doc, d);
  if (kind == "truncated") return OUSpec(drift, truncated_from_json(doc));
  if (doc.contains("r")) throw ConfigError("/r", "only truncated drivers take a truncation radius");
  const StableSpec floor = stable_from_json(doc);
  if (kind == "stable") {
    if (doc.contains("extra")) throw ConfigError("/extra", "only dominating drivers take an extra component");
    return OUSpec(drift, floor);
  }
  const json& extra = require(doc, "extra");
  reject_unknown(extra, {"c", "alpha", "r"}, "/extra");
  const double ec = positive_number(extra, "c", "/extra");
  const double ea = alpha_field(extra, "/extra");
  const double er = positive_number(extra, "r", "/extra");
  const double fc = floor.c(), fa = floor.alpha();
  DominatingLevySpec spec{[=](double rho) {
                            double m = fc * std::pow(rho, -(d + fa));
                            if (rho <= er) m += ec * std::pow(rho, -(d + ea));
                            return m;
                          },
                          floor, ""};
  std::ostringstream os;
  os << "stable floor plus " << ec << " |z|^{-d-" << ea << "} on |z| <= " << er;
  spec.description = os.str();
  return OUSpec(drift, spec);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), e.what());
  }
}

json seed_to_json(const SeedSpec& seed) { return {{"master_seed", seed.master_seed}, {"stream_id", seed.stream_id}}; }

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const json& j, int d, const std::string& field) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(d)) {
    throw ConfigError(field, "expected an array of " + std::to_string(d) + " numbers");
  }
  Vector v(d);
  for (int i = 0; i < d; ++i) {
    if (!j.at(i).is_number()) throw ConfigError(field + "/" + std::to_string(i), "expected a number");
    v(i) = j.at(i).get<double>();
  }
  return v;
}

PairGrid pair_grid_from_json(const json& j, int d, const std::string& field) {
  reject_unknown(j, {"t", "dist", "base_points", "both_orderings"}, field);
  PairGrid grid = default_pair_grid(d);
  auto numbers = [&](const char* key, bool allow_zero) {
    const json& a = j.at(key);
    if (!a.is_array() || a.empty()) throw ConfigError(field + "/" + key, "expected a nonempty array");
    std::vector<double> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string where = field + "/" + key + "/" + std::to_string(i);
      if (!a[i].is_number()) throw ConfigError(where, "expected a number");
      const double v = a[i].get<double>();
      if (!(allow_zero ? v >= 0.0 : v > 0.0) || !std::isfinite(v)) throw ConfigError(where, "out of range");
      out.push_back(v);
    }
    return out;
  };
  if (j.contains("t")) grid.t = numbers("t", false);
  if (j.contains("dist")) grid.dist = numbers("dist", true);
  if (j.contains("base_points")) {
    const json& a = j.at("base_points");
    if (!a.is_array() || a.empty()) throw ConfigError(field + "/base_points", "expected a nonempty array");
    grid.base_points.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
      grid.base_points.push_back(vector_from_json(a[i], d, field + "/base_points/" + std::to_string(i)));
    }
  }
  if (j.contains("both_orderings")) {
    if (!j.at("both_orderings").is_boolean()) throw ConfigError(field + "/both_orderings", "expected a boolean");
    grid.both_orderings = j.at("both_orderings").get<bool>();
  }
  return grid;
}

json pair_grid_to_json(const PairGrid& grid) {
  json bases = json::array();
  for (const auto& b : grid.base_points) bases.push_back(vector_to_json(b));
  return {{"t", grid.t}, {"dist", grid.dist}, {"base_points", bases}, {"both_orderings", grid.both_orderings}};
}

json report_to_json(const InequalityReport& report, const json& spec, const json& grid,
                    const std::string& generated_at) {
  json nodes = json::array();
  for (const auto& n : report.per_node) {
    json node = {{"t", n.t},
                 {"lhs", number_or_null(n.lhs)},
                 {"rhs_shape", number_or_null(n.rhs_shape)},
                 {"slack", number_or_null(n.slack)},
                 {"ratio", number_or_null(n.ratio)},
                 {"validation", n.validation},
                 {"excluded", n.excluded}};
    if (n.x.size() > 0) node["x"] = vector_to_json(n.x);
    if (n.y.size() > 0) node["y"] = vector_to_json(n.y);
    if (n.z.size() > 0) node["z"] = vector_to_json(n.z);
    if (!n.f_tag.empty()) node["f"] = n.f_tag;
    if (n.p != 1.0) node["p"] = n.p;
    if (n.lhs_se != 0.0) node["lhs_se"] = n.lhs_se;
    if (!n.note.empty()) node["note"] = n.note;
    nodes.push_back(std::move(node));
  }
  json constants = json::object();
  for (const auto& [k, v] : report.constants) constants[k] = number_or_null(v);
  return {{"inequality_id", to_string(report.id)},
          {"claim", report.claim},
          {"spec", spec},
          {"grid", grid},
          {"per_node", nodes},
          {"fitted_C", number_or_null(report.fitted_C)},
          {"validation_C", number_or_null(report.validation_C)},
          {"stability_threshold", report.stability_threshold},
          {"excluded_nodes", report.excluded_nodes},
          {"violations", report.violations},
          {"constants", constants},
          {"meta", report.meta},
          {"failures", report.failures},
          {"passed", report.passed()},
          {"seed", seed_to_json(report.seed)},
          {"tool_version", kToolVersion},
          {"generated_at", generated_at}};
}

std::string report_to_csv(const InequalityReport& report, int d) {
  std::ostringstream os;
  os << "index,t";
  for (const char* p : {"x", "y", "z"}) {
    for (int i = 1; i <= d; ++i) os << ',' << p << '_' << i;
  }
  os << ",f,p,lhs,rhs_shape,slack,ratio,lhs_se,validation,excluded,note\n";
  for (std::size_t k = 0; k < report.per_node.size(); ++k) {
    const auto& n = report.per_node[k];
    os << k << ',' << csv_number(n.t);
    for (const Vector* v : {&n.x, &n.y, &n.z}) {
      for (int i = 0; i < d; ++i) os << ',' << (v->size() == d ? csv_number((*v)(i)) : "");
    }
    os << ',' << csv_escape(n.f_tag) << ',' << csv_number(n.p) << ',' << csv_number(n.lhs) << ','
       << csv_number(n.rhs_shape) << ',' << csv_number(n.slack) << ',' << csv_number(n.ratio) << ','
       << csv_number(n.lhs_se) << ',' << n.validation << ',' << n.excluded << ',' << csv_escape(n.note) << '\n';
  }
  return os.str();
}

json violations_to_json(const InequalityReport& report) {
  json nodes = json::array();
  for (std::size_t i : report.violations) {
    const auto& n = report.per_node.at(i);
    nodes.push_back({{"index", i}, {"t", n.t}, {"lhs", n.lhs}, {"rhs_shape", n.rhs_shape}, {"note", n.note}});
  }
  return {{"inequality_id", to_string(report.id)},
          {"violations", nodes},
          {"failures", report.failures},
          {"fitted_C", number_or_null(report.fitted_C)},
          {"validation_C", number_or_null(report.validation_C)}};
}

json canonical(json report) {
  if (report.is_object()) {
    report.erase("generated_at");
    if (report.contains("reports") && report["reports"].is_array()) {
      for (auto& r : report["reports"]) r.erase("generated_at");
    }
  }
  return report;
}

std::string density_grid_csv(const DensityGrid& grid) {
  std::ostringstream os;
  os << "t";
  for (int i = 1; i <= grid.points.cols(); ++i) os << ",x_" << i;
  os << ",value";
  const bool se = grid.std_err.size() == grid.values.size();
  if (se) os << ",std_err";
  os << '\n';
  for (Eigen::Index k = 0; k < grid.points.rows(); ++k) {
    os << csv_number(grid.t);
    for (Eigen::Index i = 0; i < grid.points.cols(); ++i) os << ',' << csv_number(grid.points(k, i));
    os << ',' << csv_number(grid.values(k));
    if (se) os << ',' << csv_number(grid.std_err(k));
    os << '\n';
  }
  return os.str();
}

json density_grid_json(const DensityGrid& grid) {
  json points = json::array();
  for (Eigen::Index k = 0; k < grid.points.rows(); ++k) {
    json p = json::array();
    for (Eigen::Index i = 0; i < grid.points.cols(); ++i) p.push_back(grid.points(k, i));
    points.push_back(std::move(p));
  }
  json out = {{"t", grid.t}, {"d", grid.d}, {"points", points}, {"values", std::vector<double>(grid.values.begin(), grid.values.end())}};
  if (grid.std_err.size() == grid.values.size()) {
    out["std_err"] = std::vector<double>(grid.std_err.begin(), grid.std_err.end());
  }
  if (grid.n_samples > 0) {
    out["bandwidth"] = grid.bandwidth;
    out["n_samples"] = grid.n_samples;
    out["samples_beyond_one"] = grid.samples_beyond_one;
    out["mass"] = grid.mass;
  }
  return out;
}

void write_sample_dump(const std::filesystem::path& bin, const SampleMatrix& samples, double t, const json& spec,
                       const SeedSpec& seed) {
  std::ofstream out(bin, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + bin.string());
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(samples.data()[i]);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
    out.write(bytes, 8);
  }
  json sidecar = {{"n", samples.rows()}, {"d", samples.cols()}, {"t", t}, {"spec", spec}, {"seed", seed_to_json(seed)},
                  {"format", "little-endian float64, row-major"}, {"tool_version", kToolVersion}};
  std::filesystem::path side = bin;
  side.replace_extension(".json");
  std::ofstream js(side);
  js << sidecar.dump(2) << '\n';
}

SampleMatrix read_sample_dump(const std::filesystem::path& bin, std::size_t n, int d) {
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + bin.string());
  SampleMatrix out(n, d);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw std::runtime_error("sample dump too short");
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
    out.data()[i] = std::bit_cast<double>(bits);
  }
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace harnack
