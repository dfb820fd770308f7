#include "harnack/report_io.hpp"

#include <doctest.h>

#include <filesystem>

using namespace harnack;
using nlohmann::json;

TEST_SUITE("report_io") {

TEST_CASE("spec parsing") {
  const OUSpec s = spec_from_json(json::parse(R"({"d": 2, "alpha": 1.5, "c": 0.5, "A": [-1, 0, 0.5, -1]})"));
  CHECK(s.d() == 2);
  CHECK(s.drift()(1, 0) == 0.5);
  CHECK(std::holds_alternative<StableSpec>(s.driver()));
  const OUSpec t = spec_from_json(json::parse(R"({"d": 1, "alpha": 1, "c": 1, "r": 2, "driver": "truncated"})"));
  CHECK(std::get<TruncatedStableSpec>(t.driver()).r() == 2.0);
  const OUSpec dom = spec_from_json(
      json::parse(R"({"d": 1, "alpha": 1, "c": 1, "driver": "dominating", "extra": {"c": 0.5, "alpha": 1.5, "r": 1}})"));
  const auto& dl = std::get<DominatingLevySpec>(dom.driver());
  CHECK(dl.radial_density(0.5) == doctest::Approx(4.0 + 0.5 * std::pow(0.5, -2.5)));
  CHECK(dl.radial_density(2.0) == doctest::Approx(0.25));
}

TEST_CASE("spec errors name the field") {
  auto field_of = [](const char* text) {
    try {
      spec_from_json(json::parse(text));
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("none");
  };
  CHECK(field_of(R"({"alpha": 1, "c": 1})") == "/d");
  CHECK(field_of(R"({"d": 1, "alpha": 2.5, "c": 1})") == "/alpha");
  CHECK(field_of(R"({"d": 1, "alpha": 1, "c": -1})") == "/c");
  CHECK(field_of(R"({"d": 1, "alpha": 1, "c": 1, "driver": "truncated"})") == "/r");
  CHECK(field_of(R"({"d": 2, "alpha": 1, "c": 1, "A": [1, 2, 3]})") == "/A");
  CHECK(field_of(R"({"d": 1, "alpha": 1, "c": 1, "driver": "gaussian"})") == "/driver");
  CHECK(field_of(R"({"d": 1, "alpha": 1, "c": 1, "colour": 3})") == "/colour");
  CHECK(field_of(R"({"d": 1, "alpha": 1, "c": 1, "driver": "dominating", "extra": {"c": 1, "alpha": 1}})") == "/extra/r");
}

TEST_CASE("pair grid round trip") {
  const PairGrid g = pair_grid_from_json(json::parse(R"({"t": [0.5], "dist": [0, 1], "base_points": [[1, 2]]})"), 2, "/train");
  CHECK(g.t == std::vector<double>{0.5});
  CHECK(g.base_points[0](1) == 2.0);
  const PairGrid back = pair_grid_from_json(pair_grid_to_json(g), 2, "");
  CHECK(back.dist == g.dist);
  CHECK_THROWS_AS(pair_grid_from_json(json::parse(R"({"t": [-1]})"), 1, "/train"), ConfigError);
}

TEST_CASE("report JSON and canonical form") {
  InequalityReport rep;
  rep.id = InequalityId::young;
  rep.claim = claim_text(rep.id);
  NodeResult n;
  n.t = 1.0;
  n.x = Vector::Constant(1, 0.5);
  n.y = Vector::Constant(1, 0.0);
  n.lhs = 1.0;
  n.rhs_shape = 2.0;
  n.ratio = 0.5;
  rep.per_node.push_back(n);
  rep.fitted_C = 0.5;
  const json spec = {{"d", 1}, {"alpha", 1.0}, {"c", 1.0}};
  const json a = report_to_json(rep, spec, json::object(), "2026-01-01T00:00:00Z");
  const json b = report_to_json(rep, spec, json::object(), "2027-01-01T00:00:00Z");
  CHECK(a != b);
  CHECK(canonical(a) == canonical(b));
  CHECK(a.at("inequality_id") == "young");
  CHECK(a.at("passed") == true);
  CHECK(a.at("tool_version") == kToolVersion);
  CHECK(a.at("per_node")[0].at("x")[0] == 0.5);
  const std::string csv = report_to_csv(rep, 1);
  CHECK(csv.rfind("index,t,x_1,y_1,z_1,f,p,", 0) == 0);
}

TEST_CASE("sample dump round trip") {
  SampleMatrix m(3, 2);
  m << 1.0, -2.5, 3.25, 1e-300, -0.0, 7.0;
  const auto dir = std::filesystem::temp_directory_path() / "harnack_dump_test";
  std::filesystem::create_directories(dir);
  write_sample_dump(dir / "s.bin", m, 0.5, json{{"d", 2}}, {3, 1});
  CHECK(std::filesystem::file_size(dir / "s.bin") == 48);
  CHECK(read_sample_dump(dir / "s.bin", 3, 2) == m);
  const json side = read_json_file(dir / "s.json");
  CHECK(side.at("n") == 3);
  CHECK(side.at("seed").at("master_seed") == 3);
  std::filesystem::remove_all(dir);
}

TEST_CASE("density grid CSV") {
  DensityGrid g;
  g.t = 0.5;
  g.d = 1;
  g.points = Eigen::MatrixXd::Constant(2, 1, 0.25);
  g.values = Eigen::VectorXd::Constant(2, 0.1);
  const std::string csv = density_grid_csv(g);
  CHECK(csv.rfind("t,x_1,value\n0.5,0.25,0.10000000000000001\n", 0) == 0);
}

}
