#ifndef DYNTEST_HARNESS_HPP
#define DYNTEST_HARNESS_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "dyntest/analytics.hpp"
#include "dyntest/model.hpp"
#include "dyntest/policies.hpp"

namespace dyntest {

struct SimConfig {
    ModelParams params;
    PolicyKind policy = PolicyKind::Individual;
    int horizon = 500;
    int iterations = 1000;
    std::uint64_t master_seed = 0;
    bool record_snapshots = false;

    void validate() const;
};

// One realization of the process. Count sequences have horizon+1 entries
// (index 0 is the post-initialization state); detections and p' estimates
// have one entry per time instance 1..horizon.
struct SamplePath {
    std::vector<int> susceptible;  // alpha(t)
    std::vector<int> infected;     // lambda(t)
    std::vector<int> isolated;     // gamma(t)
    std::vector<int> detections;
    std::vector<double> p_prime_estimates;
    std::vector<PhaseSnapshot> snapshots;  // filled when record_snapshots
    std::optional<int> control_time;       // first t with lambda(t) = 0
};

struct EnsembleResult {
    std::vector<double> mean_susceptible;
    std::vector<double> mean_infected;
    std::vector<double> mean_isolated;
    // Pointwise average of the per-path expected_alpha_curve built from each
    // path's own p' estimates.
    std::vector<double> mean_approx_susceptible;
    std::vector<double> se_susceptible;
    std::vector<double> se_infected;
    std::vector<double> se_isolated;

    int controlled_paths = 0;
    int uncontrolled_paths = 0;
    std::optional<double> mean_control_time;          // over controlled paths
    std::optional<double> mean_isolated_at_control;   // gamma(t-bar), controlled paths
    std::optional<double> mean_isolated_uncontrolled; // gamma(horizon), uncontrolled paths
};

// Simulates one path: initialize at t=0, then spread / snapshot / test /
// isolate for t = 1..horizon. Once no non-isolated infection remains the
// statuses are frozen and the phases are skipped, but recording continues.
// Deterministic in (master_seed, path_index) alone.
SamplePath run_path(const SimConfig& config, std::uint64_t path_index);

// Runs `iterations` independent paths (distributed over `workers` threads;
// 0 means all hardware threads) and aggregates. Aggregation is a fixed
// path-order reduction, so the result is identical for any worker count.
EnsembleResult run_ensemble(const SimConfig& config, int workers = 0);

struct PolicyComparison {
    PolicyKind policy = PolicyKind::Individual;
    double steady_susceptible = 0.0;     // mean alpha at the horizon
    double se_steady_susceptible = 0.0;
    std::optional<double> mean_control_time;
    std::optional<double> mean_isolated_at_control;
    std::optional<double> mean_isolated_uncontrolled;
    int uncontrolled_paths = 0;
};

// Runs every config (which must differ only in policy, sharing params, seed,
// horizon and iterations: common random numbers) and tabulates the
// performance metrics. When `ensembles` is given the full curves are stored
// there, one entry per config.
std::vector<PolicyComparison> compare_policies(const std::vector<SimConfig>& configs,
                                               int workers = 0,
                                               std::vector<EnsembleResult>* ensembles = nullptr);

}  // namespace dyntest

#endif
