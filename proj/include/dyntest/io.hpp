#ifndef DYNTEST_IO_HPP
#define DYNTEST_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dyntest/harness.hpp"

namespace dyntest {

inline constexpr const char* kVersion = "0.1.0";

// curves.csv schema; column order and names are stable.
inline constexpr const char* kCurvesHeader =
    "t,mean_alpha,mean_lambda,mean_gamma,approx_alpha,se_alpha";

// Floating point rendered with 6 significant digits ("%.6g"); full-precision
// values live in summary.json.
std::string format_csv_value(double value);

void write_curves_csv(const std::filesystem::path& file, const EnsembleResult& ensemble);

void write_compare_csv(const std::filesystem::path& file,
                       const std::vector<PolicyComparison>& table);

nlohmann::json summary_json(const SimConfig& config, const EnsembleResult& ensemble);

nlohmann::json manifest_json(const std::string& command, const SimConfig& config, int workers,
                             double wall_seconds);

// Config <-> JSON, one key per CLI flag: policy, n, p, q, tests, horizon,
// iterations, seed. Unknown keys are rejected.
nlohmann::json config_to_json(const SimConfig& config);
SimConfig config_from_json(const nlohmann::json& doc, const SimConfig& defaults);

}  // namespace dyntest

#endif
