#include "dyntest/harness.hpp"

#include <atomic>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace dyntest {

void SimConfig::validate() const {
    params.validate();
    if (horizon < 1) throw std::invalid_argument("config: horizon must be at least 1");
    if (iterations < 1) throw std::invalid_argument("config: iterations must be at least 1");
    if (requires_even_tests(policy) && params.tests_per_step % 2 != 0)
        throw std::invalid_argument(std::string(to_string(policy)) +
                                    " testing requires an even test budget");
    if (policy == PolicyKind::WeakIndividual && params.tests_per_step > params.population)
        throw std::invalid_argument("weak-individual testing needs T <= n");
    if (policy == PolicyKind::WeakDorfman && params.tests_per_step / 2 > params.population)
        throw std::invalid_argument("weak-dorfman testing needs T/2 <= n");
}

SamplePath run_path(const SimConfig& config, std::uint64_t path_index) {
    config.validate();
    auto spread_rng = RngStream::for_path(config.master_seed, path_index, kSpreadStream);
    auto policy_rng = RngStream::for_path(config.master_seed, path_index, kPolicyStream);

    PopulationState state = initialize(config.params, spread_rng);
    const int n = config.params.population;
    const int horizon = config.horizon;

    SamplePath path;
    path.susceptible.reserve(static_cast<std::size_t>(horizon) + 1);
    path.infected.reserve(static_cast<std::size_t>(horizon) + 1);
    path.isolated.reserve(static_cast<std::size_t>(horizon) + 1);
    path.detections.reserve(static_cast<std::size_t>(horizon));
    path.p_prime_estimates.reserve(static_cast<std::size_t>(horizon));

    auto record = [&](const Counts& c) {
        assert(c.susceptible + c.infected + c.isolated == n);
        path.susceptible.push_back(c.susceptible);
        path.infected.push_back(c.infected);
        path.isolated.push_back(c.isolated);
    };
    record(state.counts());

    for (int t = 1; t <= horizon; ++t) {
        Counts c = state.counts();
        if (c.infected == 0) {
            // Controlled: both phases are no-ops; keep recording to the
            // horizon with the state-conditional p' of the frozen state.
            state.advance_time();
            const PhaseSnapshot frozen{c.susceptible, 0, c.isolated};
            path.detections.push_back(0);
            path.p_prime_estimates.push_back(
                state_conditional_p_prime(config.policy, frozen, config.params.tests_per_step));
            if (config.record_snapshots) path.snapshots.push_back(frozen);
            record(c);
            continue;
        }

        spread_step(state, config.params, spread_rng);
        StepReport report = policy_step(config.policy, state, config.params, policy_rng);
        isolate(state, report.detected);

        path.detections.push_back(static_cast<int>(report.detected.size()));
        path.p_prime_estimates.push_back(state_conditional_p_prime(
            config.policy, report.snapshot, config.params.tests_per_step));
        if (config.record_snapshots) path.snapshots.push_back(report.snapshot);
        record(state.counts());
    }

    for (int t = 0; t <= horizon; ++t) {
        if (path.infected[static_cast<std::size_t>(t)] == 0) {
            path.control_time = t;
            break;
        }
    }
    return path;
}

namespace {

struct PathSummary {
    std::vector<int> susceptible, infected, isolated;
    std::vector<double> approx;
    std::optional<int> control_time;
    int isolated_at_control = 0;
    int isolated_at_horizon = 0;
};

double standard_error(double sum, double sum_sq, int count) {
    if (count < 2) return 0.0;
    const double mean = sum / count;
    double variance = (sum_sq - count * mean * mean) / (count - 1);
    if (variance < 0.0) variance = 0.0;  // rounding guard
    return std::sqrt(variance / count);
}

}  // namespace

EnsembleResult run_ensemble(const SimConfig& config, int workers) {
    config.validate();
    if (workers <= 0)
        workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<int>(workers, config.iterations);

    const int horizon = config.horizon;
    const std::size_t points = static_cast<std::size_t>(horizon) + 1;
    std::vector<PathSummary> summaries(static_cast<std::size_t>(config.iterations));

    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int index = next.fetch_add(1);
            if (index >= config.iterations) return;
            SamplePath path = run_path(config, static_cast<std::uint64_t>(index));
            PathSummary& s = summaries[static_cast<std::size_t>(index)];
            s.approx = expected_alpha_curve(config.params, path.p_prime_estimates, horizon);
            s.control_time = path.control_time;
            if (path.control_time)
                s.isolated_at_control =
                    path.isolated[static_cast<std::size_t>(*path.control_time)];
            s.isolated_at_horizon = path.isolated.back();
            s.susceptible = std::move(path.susceptible);
            s.infected = std::move(path.infected);
            s.isolated = std::move(path.isolated);
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    // Deterministic reduction in path-index order.
    EnsembleResult result;
    std::vector<double> sum_a(points), sum_l(points), sum_g(points), sum_x(points);
    std::vector<double> sq_a(points), sq_l(points), sq_g(points);
    double control_sum = 0.0, gamma_control_sum = 0.0, gamma_horizon_sum = 0.0;
    for (const PathSummary& s : summaries) {
        for (std::size_t t = 0; t < points; ++t) {
            const double a = s.susceptible[t], l = s.infected[t], g = s.isolated[t];
            sum_a[t] += a; sq_a[t] += a * a;
            sum_l[t] += l; sq_l[t] += l * l;
            sum_g[t] += g; sq_g[t] += g * g;
            sum_x[t] += s.approx[t];
        }
        if (s.control_time) {
            ++result.controlled_paths;
            control_sum += *s.control_time;
            gamma_control_sum += s.isolated_at_control;
        } else {
            ++result.uncontrolled_paths;
            gamma_horizon_sum += s.isolated_at_horizon;
        }
    }

    const int iters = config.iterations;
    result.mean_susceptible.resize(points);
    result.mean_infected.resize(points);
    result.mean_isolated.resize(points);
    result.mean_approx_susceptible.resize(points);
    result.se_susceptible.resize(points);
    result.se_infected.resize(points);
    result.se_isolated.resize(points);
    for (std::size_t t = 0; t < points; ++t) {
        result.mean_susceptible[t] = sum_a[t] / iters;
        result.mean_infected[t] = sum_l[t] / iters;
        result.mean_isolated[t] = sum_g[t] / iters;
        result.mean_approx_susceptible[t] = sum_x[t] / iters;
        result.se_susceptible[t] = standard_error(sum_a[t], sq_a[t], iters);
        result.se_infected[t] = standard_error(sum_l[t], sq_l[t], iters);
        result.se_isolated[t] = standard_error(sum_g[t], sq_g[t], iters);
    }
    if (result.controlled_paths > 0) {
        result.mean_control_time = control_sum / result.controlled_paths;
        result.mean_isolated_at_control = gamma_control_sum / result.controlled_paths;
    }
    if (result.uncontrolled_paths > 0)
        result.mean_isolated_uncontrolled = gamma_horizon_sum / result.uncontrolled_paths;
    return result;
}

std::vector<PolicyComparison> compare_policies(const std::vector<SimConfig>& configs,
                                               int workers,
                                               std::vector<EnsembleResult>* ensembles) {
    if (configs.empty()) throw std::invalid_argument("compare: no configurations");
    const SimConfig& first = configs.front();
    for (const SimConfig& c : configs) {
        const bool same = c.params.population == first.params.population &&
                          c.params.initial_infection == first.params.initial_infection &&
                          c.params.spread == first.params.spread &&
                          c.params.tests_per_step == first.params.tests_per_step &&
                          c.horizon == first.horizon && c.iterations == first.iterations &&
                          c.master_seed == first.master_seed;
        if (!same)
            throw std::invalid_argument(
                "compare: configurations must differ only in the testing policy");
    }

    std::vector<PolicyComparison> table;
    table.reserve(configs.size());
    for (const SimConfig& config : configs) {
        EnsembleResult ensemble = run_ensemble(config, workers);
        PolicyComparison row;
        row.policy = config.policy;
        row.steady_susceptible = ensemble.mean_susceptible.back();
        row.se_steady_susceptible = ensemble.se_susceptible.back();
        row.mean_control_time = ensemble.mean_control_time;
        row.mean_isolated_at_control = ensemble.mean_isolated_at_control;
        row.mean_isolated_uncontrolled = ensemble.mean_isolated_uncontrolled;
        row.uncontrolled_paths = ensemble.uncontrolled_paths;
        table.push_back(row);
        if (ensembles) ensembles->push_back(std::move(ensemble));
    }
    return table;
}

}  // namespace dyntest
