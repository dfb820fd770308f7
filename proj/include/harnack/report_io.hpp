#pragma once

#include "harnack/density.hpp"
#include "harnack/harnack_lab.hpp"
#include "harnack/levy_core.hpp"
#include "harnack/ou_semigroup.hpp"
#include "harnack/sampling.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace harnack {

inline constexpr const char* kToolVersion = "0.3.0";

/// Invalid configuration document; `field` is a JSON pointer to the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Process spec document:
///   {"d", "alpha", "c", "r"?, "A"? (row-major d*d), "driver": "stable" | "truncated" | "dominating",
///    "extra"? {"c", "alpha", "r"} for dominating drivers}
/// A dominating driver has Levy density c|z|^{-d-alpha} + extra.c |z|^{-d-extra.alpha} 1{|z| <= extra.r}.
OUSpec spec_from_json(const nlohmann::json& doc);
StableSpec stable_from_json(const nlohmann::json& doc);
TruncatedStableSpec truncated_from_json(const nlohmann::json& doc);
nlohmann::json read_json_file(const std::filesystem::path& path);

nlohmann::json seed_to_json(const SeedSpec& seed);
nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j, int d, const std::string& field);

/// Pair grid document {"t", "dist", "base_points"?, "both_orderings"?}.
PairGrid pair_grid_from_json(const nlohmann::json& j, int d, const std::string& field);
nlohmann::json pair_grid_to_json(const PairGrid& grid);

nlohmann::json report_to_json(const InequalityReport& report, const nlohmann::json& spec, const nlohmann::json& grid,
                              const std::string& generated_at);
/// Columns: index, t, x_1..x_d, y_1..y_d, z_1..z_d, f, p, lhs, rhs_shape, slack, ratio, lhs_se, validation, excluded, note.
std::string report_to_csv(const InequalityReport& report, int d);
/// Violating and failing entries of a report, written next to it on exit status 2.
nlohmann::json violations_to_json(const InequalityReport& report);

/// Copy with run-dependent fields (generated_at) removed.
nlohmann::json canonical(nlohmann::json report);

/// Columns t, x_1..x_d, value (and std_err for estimates).
std::string density_grid_csv(const DensityGrid& grid);
nlohmann::json density_grid_json(const DensityGrid& grid);

/// Little-endian float64, row-major (n x d), plus a JSON sidecar {n, d, t, spec, seed}.
void write_sample_dump(const std::filesystem::path& bin, const SampleMatrix& samples, double t,
                       const nlohmann::json& spec, const SeedSpec& seed);
SampleMatrix read_sample_dump(const std::filesystem::path& bin, std::size_t n, int d);

std::string utc_timestamp();

}  // namespace harnack
