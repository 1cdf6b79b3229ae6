#include "dyntest/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace dyntest {

namespace {

std::ofstream open_output(const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);  // LF endings everywhere
    if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
    return out;
}

void finish_output(std::ofstream& out, const std::filesystem::path& file) {
    out.flush();
    if (!out) throw std::runtime_error("error while writing " + file.string());
}

nlohmann::json optional_json(const std::optional<double>& value) {
    if (value) return *value;
    return nullptr;
}

}  // namespace

std::string format_csv_value(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.6g", value);
    return buffer;
}

void write_curves_csv(const std::filesystem::path& file, const EnsembleResult& ensemble) {
    auto out = open_output(file);
    out << kCurvesHeader << '\n';
    for (std::size_t t = 0; t < ensemble.mean_susceptible.size(); ++t) {
        out << t << ',' << format_csv_value(ensemble.mean_susceptible[t]) << ','
            << format_csv_value(ensemble.mean_infected[t]) << ','
            << format_csv_value(ensemble.mean_isolated[t]) << ','
            << format_csv_value(ensemble.mean_approx_susceptible[t]) << ','
            << format_csv_value(ensemble.se_susceptible[t]) << '\n';
    }
    finish_output(out, file);
}

void write_compare_csv(const std::filesystem::path& file,
                       const std::vector<PolicyComparison>& table) {
    auto out = open_output(file);
    out << "policy,steady_alpha,se_steady_alpha,mean_control_time,mean_gamma_at_control,"
           "uncontrolled_paths,mean_gamma_at_horizon_uncontrolled\n";
    for (const PolicyComparison& row : table) {
        out << to_string(row.policy) << ',' << format_csv_value(row.steady_susceptible) << ','
            << format_csv_value(row.se_steady_susceptible) << ',';
        if (row.mean_control_time) out << format_csv_value(*row.mean_control_time);
        out << ',';
        if (row.mean_isolated_at_control) out << format_csv_value(*row.mean_isolated_at_control);
        out << ',' << row.uncontrolled_paths << ',';
        if (row.mean_isolated_uncontrolled)
            out << format_csv_value(*row.mean_isolated_uncontrolled);
        out << '\n';
    }
    finish_output(out, file);
}

nlohmann::json summary_json(const SimConfig& config, const EnsembleResult& ensemble) {
    const int horizon = config.horizon;
    nlohmann::json doc;
    doc["policy"] = to_string(config.policy);
    doc["params"] = {{"n", config.params.population},
                     {"p", config.params.initial_infection},
                     {"q", config.params.spread},
                     {"tests", config.params.tests_per_step}};
    doc["horizon"] = horizon;
    doc["iterations"] = config.iterations;
    doc["seed"] = config.master_seed;

    doc["steady_state"] = {{"mean_alpha", ensemble.mean_susceptible.back()},
                           {"mean_lambda", ensemble.mean_infected.back()},
                           {"mean_gamma", ensemble.mean_isolated.back()},
                           {"approx_alpha", ensemble.mean_approx_susceptible.back()}};
    doc["control"] = {{"mean_control_time", optional_json(ensemble.mean_control_time)},
                      {"controlled_paths", ensemble.controlled_paths},
                      {"uncontrolled_paths", ensemble.uncontrolled_paths},
                      {"mean_gamma_at_control", optional_json(ensemble.mean_isolated_at_control)},
                      {"mean_gamma_at_horizon_uncontrolled",
                       optional_json(ensemble.mean_isolated_uncontrolled)}};

    nlohmann::json se;
    se["t"] = nlohmann::json::array();
    se["alpha"] = nlohmann::json::array();
    se["lambda"] = nlohmann::json::array();
    se["gamma"] = nlohmann::json::array();
    for (int t : {0, 10, 50, 100, 500}) {
        if (t > horizon) continue;
        se["t"].push_back(t);
        se["alpha"].push_back(ensemble.se_susceptible[static_cast<std::size_t>(t)]);
        se["lambda"].push_back(ensemble.se_infected[static_cast<std::size_t>(t)]);
        se["gamma"].push_back(ensemble.se_isolated[static_cast<std::size_t>(t)]);
    }
    doc["standard_errors"] = se;

    // Steady-state theory for the policy's family: the weak variants carry
    // their own closed form, which also lower-bounds the original policies.
    const bool dorfman_family = requires_even_tests(config.policy);
    const bool applicable =
        dorfman_family ? config.params.tests_per_step / 2 <= config.params.population
                       : config.params.tests_per_step <= config.params.population;
    if (applicable) {
        const SteadyStateResult theory = dorfman_family
                                             ? steady_state_weak_dorfman(config.params)
                                             : steady_state_weak_individual(config.params);
        doc["theory"] = {{"variant", dorfman_family ? "weak-dorfman" : "weak-individual"},
                         {"growth_factor", theory.growth_factor},
                         {"convergent", theory.convergent},
                         {"limit_alpha", theory.limit_alpha},
                         {"bound_kind", "lower bound for the original policy"}};
    } else {
        doc["theory"] = nullptr;
    }
    return doc;
}

nlohmann::json manifest_json(const std::string& command, const SimConfig& config, int workers,
                             double wall_seconds) {
    nlohmann::json doc;
    doc["version"] = kVersion;
    doc["command"] = command;
    doc["config"] = config_to_json(config);
    doc["master_seed"] = config.master_seed;
    doc["workers"] = workers;
    doc["wall_clock_seconds"] = wall_seconds;
    doc["censoring"] =
        "paths with lambda > 0 at the horizon are excluded from mean_control_time and "
        "mean_gamma_at_control and reported separately";
    doc["determinism"] =
        "output files depend only on the config (worker count and wall clock do not affect them)";
    return doc;
}

nlohmann::json config_to_json(const SimConfig& config) {
    return {{"policy", to_string(config.policy)},
            {"n", config.params.population},
            {"p", config.params.initial_infection},
            {"q", config.params.spread},
            {"tests", config.params.tests_per_step},
            {"horizon", config.horizon},
            {"iterations", config.iterations},
            {"seed", config.master_seed}};
}

SimConfig config_from_json(const nlohmann::json& doc, const SimConfig& defaults) {
    if (!doc.is_object()) throw std::invalid_argument("config: expected a JSON object");
    SimConfig config = defaults;
    for (const auto& [key, value] : doc.items()) {
        if (key == "policy") {
            const auto kind = parse_policy(value.get<std::string>());
            if (!kind)
                throw std::invalid_argument("config: unknown policy \"" +
                                            value.get<std::string>() + "\"");
            config.policy = *kind;
        } else if (key == "n") {
            config.params.population = value.get<int>();
        } else if (key == "p") {
            config.params.initial_infection = value.get<double>();
        } else if (key == "q") {
            config.params.spread = value.get<double>();
        } else if (key == "tests") {
            config.params.tests_per_step = value.get<int>();
        } else if (key == "horizon") {
            config.horizon = value.get<int>();
        } else if (key == "iterations") {
            config.iterations = value.get<int>();
        } else if (key == "seed") {
            config.master_seed = value.get<std::uint64_t>();
        } else {
            throw std::invalid_argument("config: unknown key \"" + key + "\"");
        }
    }
    return config;
}

}  // namespace dyntest
