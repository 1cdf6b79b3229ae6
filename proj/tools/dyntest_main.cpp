#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dyntest/analytics.hpp"
#include "dyntest/harness.hpp"
#include "dyntest/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunFlags {
    std::string policy;
    int n = 0;
    double p = 0.0;
    double q = 0.0;
    int tests = 0;
    int horizon = 0;
    int iterations = 0;
    std::uint64_t seed = 0;
    std::string config_file;
    std::string out_dir = ".";
    int workers = 0;
};

// Registers the shared simulation flags on a subcommand; returns the option
// pointers so explicit flags can be told apart from config-file values.
struct RunOptions {
    CLI::Option* policy = nullptr;
    CLI::Option* n = nullptr;
    CLI::Option* p = nullptr;
    CLI::Option* q = nullptr;
    CLI::Option* tests = nullptr;
    CLI::Option* horizon = nullptr;
    CLI::Option* iterations = nullptr;
    CLI::Option* seed = nullptr;
};

RunOptions add_run_options(CLI::App* cmd, RunFlags& flags, bool with_policy) {
    RunOptions opts;
    if (with_policy)
        opts.policy = cmd->add_option("--policy", flags.policy,
                                      "individual | dorfman | weak-individual | weak-dorfman");
    opts.n = cmd->add_option("--n", flags.n, "population size");
    opts.p = cmd->add_option("--p", flags.p, "initial infection probability");
    opts.q = cmd->add_option("--q", flags.q, "per-pair spread probability");
    opts.tests = cmd->add_option("--tests", flags.tests, "test budget per time instance");
    opts.horizon = cmd->add_option("--horizon", flags.horizon, "time instances (default 500)");
    opts.iterations =
        cmd->add_option("--iterations", flags.iterations, "sample paths (default 1000)");
    opts.seed = cmd->add_option("--seed", flags.seed, "master seed (default 0)");
    cmd->add_option("--config", flags.config_file,
                    "JSON config with the same keys; explicit flags override it");
    cmd->add_option("--out", flags.out_dir, "output directory (default .)");
    cmd->add_option("--workers", flags.workers,
                    "worker threads, 0 = all available; never affects the output files");
    return opts;
}

dyntest::SimConfig build_config(const RunFlags& flags, const RunOptions& opts) {
    dyntest::SimConfig config;  // horizon 500, iterations 1000, seed 0
    if (!flags.config_file.empty()) {
        std::ifstream in(flags.config_file);
        if (!in) throw std::invalid_argument("cannot read config file " + flags.config_file);
        json doc = json::parse(in);
        config = dyntest::config_from_json(doc, config);
    }
    if (opts.policy && opts.policy->count() > 0) {
        const auto kind = dyntest::parse_policy(flags.policy);
        if (!kind) throw std::invalid_argument("unknown policy \"" + flags.policy + "\"");
        config.policy = *kind;
    }
    if (opts.n->count() > 0) config.params.population = flags.n;
    if (opts.p->count() > 0) config.params.initial_infection = flags.p;
    if (opts.q->count() > 0) config.params.spread = flags.q;
    if (opts.tests->count() > 0) config.params.tests_per_step = flags.tests;
    if (opts.horizon->count() > 0) config.horizon = flags.horizon;
    if (opts.iterations->count() > 0) config.iterations = flags.iterations;
    if (opts.seed->count() > 0) config.master_seed = flags.seed;
    return config;
}

// Tracks files created during one invocation so a failure leaves no
// partial output behind.
class OutputSet {
public:
    void write_text(const fs::path& file, const std::string& text) {
        std::ofstream out(file, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
        created_.push_back(file);
        out << text;
        out.flush();
        if (!out) throw std::runtime_error("error while writing " + file.string());
    }
    template <typename Writer>
    void write_with(const fs::path& file, Writer&& writer) {
        created_.push_back(file);
        writer(file);
    }
    void discard_all() noexcept {
        for (const fs::path& file : created_) {
            std::error_code ec;
            fs::remove(file, ec);
        }
    }

private:
    std::vector<fs::path> created_;
};

std::string json_text(const json& doc) { return doc.dump(2) + "\n"; }

int run_simulate(const RunFlags& flags, const RunOptions& opts) {
    const dyntest::SimConfig config = build_config(flags, opts);
    config.validate();
    fs::create_directories(flags.out_dir);

    const auto start = std::chrono::steady_clock::now();
    const dyntest::EnsembleResult ensemble = dyntest::run_ensemble(config, flags.workers);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    OutputSet outputs;
    try {
        const fs::path dir(flags.out_dir);
        outputs.write_with(dir / "curves.csv",
                           [&](const fs::path& f) { dyntest::write_curves_csv(f, ensemble); });
        outputs.write_text(dir / "summary.json",
                           json_text(dyntest::summary_json(config, ensemble)));
        outputs.write_text(
            dir / "manifest.json",
            json_text(dyntest::manifest_json("simulate", config, flags.workers, seconds)));
    } catch (...) {
        outputs.discard_all();
        throw;
    }
    return 0;
}

int run_compare(const RunFlags& flags, const RunOptions& opts) {
    const dyntest::SimConfig base = build_config(flags, opts);
    std::vector<dyntest::SimConfig> configs;
    for (const auto kind :
         {dyntest::PolicyKind::Individual, dyntest::PolicyKind::Dorfman,
          dyntest::PolicyKind::WeakIndividual, dyntest::PolicyKind::WeakDorfman}) {
        dyntest::SimConfig config = base;
        config.policy = kind;
        config.validate();
        configs.push_back(config);
    }
    fs::create_directories(flags.out_dir);

    const auto start = std::chrono::steady_clock::now();
    std::vector<dyntest::EnsembleResult> ensembles;
    const auto table = dyntest::compare_policies(configs, flags.workers, &ensembles);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    OutputSet outputs;
    try {
        const fs::path dir(flags.out_dir);
        outputs.write_with(dir / "compare.csv",
                           [&](const fs::path& f) { dyntest::write_compare_csv(f, table); });
        for (std::size_t i = 0; i < configs.size(); ++i) {
            const std::string name =
                std::string("curves_") + dyntest::to_string(configs[i].policy) + ".csv";
            outputs.write_with(dir / name, [&](const fs::path& f) {
                dyntest::write_curves_csv(f, ensembles[i]);
            });
        }
        outputs.write_text(
            dir / "manifest.json",
            json_text(dyntest::manifest_json("compare", base, flags.workers, seconds)));
    } catch (...) {
        outputs.discard_all();
        throw;
    }
    return 0;
}

json steady_state_json(const std::string& variant, const dyntest::ModelParams& params) {
    dyntest::SteadyStateResult result;
    if (variant == "weak-individual") {
        result = dyntest::steady_state_weak_individual(params);
    } else if (variant == "weak-dorfman") {
        result = dyntest::steady_state_weak_dorfman(params);
    } else {
        throw std::invalid_argument("steady-state variant must be weak-individual or "
                                    "weak-dorfman");
    }
    return {{"variant", variant},
            {"n", params.population},
            {"p", params.initial_infection},
            {"q", params.spread},
            {"tests", params.tests_per_step},
            {"growth_factor", result.growth_factor},
            {"convergent", result.convergent},
            {"limit", result.limit_alpha}};
}

json detections_json(const std::string& variant, int alpha, int lambda, int tests) {
    const dyntest::PhaseSnapshot snapshot{alpha, lambda, 0};
    json doc = {{"variant", variant}, {"alpha", alpha}, {"lambda", lambda}, {"tests", tests}};
    if (variant == "individual") {
        doc["expected_detections"] = dyntest::expected_detections_individual(snapshot, tests);
    } else if (variant == "dorfman") {
        const auto result = dyntest::expected_detections_dorfman(snapshot, tests);
        doc["expected_detections"] = result.detections;
        doc["conditioned_branch"] = result.conditioned_branch;
        doc["lower_bound"] = result.lower_bound;
        doc["approximate"] = result.approximate;
        doc["group_size"] = result.group_size;
    } else {
        throw std::invalid_argument("detections variant must be individual or dorfman");
    }
    return doc;
}

json advantage_json(int alpha, int lambda, int tests) {
    const dyntest::PhaseSnapshot snapshot{alpha, lambda, 0};
    const double group_size = 2.0 * snapshot.non_isolated() / tests;
    const double ratio = dyntest::binomial_avoidance_ratio(
        alpha, lambda, static_cast<int>(std::floor(group_size)));
    const auto dorfman = dyntest::expected_detections_dorfman(snapshot, tests);
    return {{"alpha", alpha},
            {"lambda", lambda},
            {"tests", tests},
            {"group_size", group_size},
            {"ratio", ratio},
            {"dorfman_advantage", dyntest::dorfman_advantage(snapshot, tests)},
            {"expected_individual", dyntest::expected_detections_individual(snapshot, tests)},
            {"expected_dorfman", dorfman.detections},
            {"approximate", dorfman.approximate}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic simulator and analytics for capacity-limited infection testing"};
    app.require_subcommand(1);

    RunFlags sim_flags;
    auto* simulate = app.add_subcommand(
        "simulate", "run a Monte Carlo ensemble for one policy and write CSV/JSON results");
    const RunOptions sim_opts = add_run_options(simulate, sim_flags, true);

    RunFlags cmp_flags;
    auto* compare = app.add_subcommand(
        "compare", "run all four policies with common random numbers and tabulate metrics");
    const RunOptions cmp_opts = add_run_options(compare, cmp_flags, false);

    auto* analytics = app.add_subcommand("analytics", "closed-form evaluators");
    analytics->require_subcommand(1);

    std::string ss_variant;
    dyntest::ModelParams ss_params;
    auto* steady = analytics->add_subcommand("steady-state",
                                             "steady-state susceptible approximation");
    steady->add_option("--variant", ss_variant, "weak-individual | weak-dorfman")->required();
    steady->add_option("--n", ss_params.population)->required();
    steady->add_option("--p", ss_params.initial_infection)->required();
    steady->add_option("--q", ss_params.spread)->required();
    steady->add_option("--tests", ss_params.tests_per_step)->required();

    std::string det_variant;
    int det_alpha = 0, det_lambda = 0, det_tests = 0;
    auto* detections = analytics->add_subcommand(
        "detections", "expected detections for a post-spread state");
    detections->add_option("--variant", det_variant, "individual | dorfman")->required();
    detections->add_option("--alpha", det_alpha, "susceptible count after spread")->required();
    detections->add_option("--lambda", det_lambda, "infected count after spread")->required();
    detections->add_option("--tests", det_tests)->required();

    int adv_alpha = 0, adv_lambda = 0, adv_tests = 0;
    auto* advantage = analytics->add_subcommand(
        "advantage", "does pooled testing beat individual testing here?");
    advantage->add_option("--alpha", adv_alpha)->required();
    advantage->add_option("--lambda", adv_lambda)->required();
    advantage->add_option("--tests", adv_tests)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (simulate->parsed()) return run_simulate(sim_flags, sim_opts);
        if (compare->parsed()) return run_compare(cmp_flags, cmp_opts);
        if (steady->parsed()) {
            std::cout << json_text(steady_state_json(ss_variant, ss_params));
            return 0;
        }
        if (detections->parsed()) {
            std::cout << json_text(detections_json(det_variant, det_alpha, det_lambda,
                                                   det_tests));
            return 0;
        }
        if (advantage->parsed()) {
            std::cout << json_text(advantage_json(adv_alpha, adv_lambda, adv_tests));
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
