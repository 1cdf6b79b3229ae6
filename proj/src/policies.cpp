#include "dyntest/policies.hpp"

#include <cassert>
#include <stdexcept>
#include <string>

namespace dyntest {

namespace {

PhaseSnapshot snapshot_of(const PopulationState& state) {
    const Counts c = state.counts();
    return PhaseSnapshot{c.susceptible, c.infected, c.isolated};
}

std::vector<int> non_isolated_indices(const PopulationState& state) {
    std::vector<int> indices;
    indices.reserve(static_cast<std::size_t>(state.population()));
    for (int i = 0; i < state.population(); ++i)
        if (state.status(i) != InfectionStatus::Isolated) indices.push_back(i);
    return indices;
}

std::vector<int> all_indices(int n) {
    std::vector<int> indices(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) indices[static_cast<std::size_t>(i)] = i;
    return indices;
}

// One-hot tests on `chosen`; returns those found infected and records the
// tested set in the report.
void run_individual_tests(const PopulationState& state, std::span<const int> chosen,
                          StepReport& report) {
    TestMatrix matrix(state.population());
    for (int individual : chosen) matrix.add_singleton_row(individual);
    const TestResults results = run_tests(matrix, state);
    for (int r = 0; r < matrix.rows(); ++r) {
        report.individually_tested.push_back(chosen[static_cast<std::size_t>(r)]);
        if (results[static_cast<std::size_t>(r)])
            report.detected.push_back(chosen[static_cast<std::size_t>(r)]);
    }
    report.individual_tests_used += static_cast<int>(chosen.size());
}

void require_even_tests(const ModelParams& params, const char* policy) {
    if (params.tests_per_step % 2 != 0)
        throw std::invalid_argument(std::string(policy) +
                                    " testing requires an even test budget, got " +
                                    std::to_string(params.tests_per_step));
}

}  // namespace

const char* to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::Individual: return "individual";
        case PolicyKind::Dorfman: return "dorfman";
        case PolicyKind::WeakIndividual: return "weak-individual";
        case PolicyKind::WeakDorfman: return "weak-dorfman";
    }
    return "?";
}

std::optional<PolicyKind> parse_policy(std::string_view name) {
    if (name == "individual") return PolicyKind::Individual;
    if (name == "dorfman") return PolicyKind::Dorfman;
    if (name == "weak-individual") return PolicyKind::WeakIndividual;
    if (name == "weak-dorfman") return PolicyKind::WeakDorfman;
    return std::nullopt;
}

StepReport individual_step(const PopulationState& state, const ModelParams& params,
                           RngStream& rng) {
    params.validate();
    StepReport report;
    report.snapshot = snapshot_of(state);

    std::vector<int> pool = non_isolated_indices(state);
    const int k = std::min<int>(params.tests_per_step, static_cast<int>(pool.size()));
    rng.shuffle_prefix(pool, static_cast<std::size_t>(k));
    run_individual_tests(state, std::span<const int>(pool.data(), static_cast<std::size_t>(k)),
                         report);
    report.tests_used = report.individual_tests_used;
    return report;
}

StepReport dorfman_step(const PopulationState& state, const ModelParams& params,
                        RngStream& rng) {
    params.validate();
    require_even_tests(params, "dorfman");

    StepReport report;
    report.snapshot = snapshot_of(state);

    std::vector<int> pool = non_isolated_indices(state);
    const int m = static_cast<int>(pool.size());
    if (m == 0) return report;

    // Uniform partition into T/2 disjoint groups: shuffle, then chunk into
    // blocks of ceil(m / (T/2)); a remainder leaves one smaller final block
    // (and empty trailing groups when m < T/2, which are simply not tested).
    const int max_groups = params.tests_per_step / 2;
    const int group_size = (m + max_groups - 1) / max_groups;
    const int num_groups = (m + group_size - 1) / group_size;
    rng.shuffle_prefix(pool, pool.size());

    TestMatrix group_matrix(state.population());
    report.group_offsets.reserve(static_cast<std::size_t>(num_groups) + 1);
    for (int g = 0; g < num_groups; ++g) {
        const int begin = g * group_size;
        const int end = std::min(m, begin + group_size);
        report.group_offsets.push_back(begin);
        group_matrix.add_row(std::span<const int>(pool.data() + begin,
                                                  static_cast<std::size_t>(end - begin)));
    }
    report.group_offsets.push_back(m);
    report.group_members = pool;
    report.group_results = run_tests(group_matrix, state);
    report.group_tests_used = num_groups;

    std::vector<int> positive_groups;
    for (int g = 0; g < num_groups; ++g)
        if (report.group_results[static_cast<std::size_t>(g)]) positive_groups.push_back(g);

    if (!positive_groups.empty()) {
        // Visit positive groups in uniform order until the individual-test
        // budget of T/2 is spent; a group that does not fit entirely
        // contributes a uniform subset of its members.
        rng.shuffle_prefix(positive_groups, positive_groups.size());
        int budget = params.tests_per_step / 2;
        std::vector<int> chosen;
        std::vector<int> partial;
        for (int g : positive_groups) {
            if (budget == 0) break;
            const int begin = report.group_offsets[static_cast<std::size_t>(g)];
            const int end = report.group_offsets[static_cast<std::size_t>(g) + 1];
            const int size = end - begin;
            if (size <= budget) {
                chosen.insert(chosen.end(), pool.begin() + begin, pool.begin() + end);
                budget -= size;
            } else {
                partial.assign(pool.begin() + begin, pool.begin() + end);
                rng.shuffle_prefix(partial, static_cast<std::size_t>(budget));
                chosen.insert(chosen.end(), partial.begin(), partial.begin() + budget);
                budget = 0;
            }
        }
        run_individual_tests(state, chosen, report);
    }

    report.tests_used = report.group_tests_used + report.individual_tests_used;
    assert(report.tests_used <= params.tests_per_step);
    return report;
}

StepReport weak_individual_step(const PopulationState& state, const ModelParams& params,
                                RngStream& rng) {
    params.validate();
    if (params.tests_per_step > state.population())
        throw std::invalid_argument("weak-individual testing needs T <= n");

    StepReport report;
    report.snapshot = snapshot_of(state);

    std::vector<int> pool = all_indices(state.population());
    rng.shuffle_prefix(pool, static_cast<std::size_t>(params.tests_per_step));
    run_individual_tests(
        state, std::span<const int>(pool.data(), static_cast<std::size_t>(params.tests_per_step)),
        report);
    report.tests_used = report.individual_tests_used;
    return report;
}

StepReport weak_dorfman_step(const PopulationState& state, const ModelParams& params,
                             RngStream& rng) {
    params.validate();
    require_even_tests(params, "weak-dorfman");
    const int half = params.tests_per_step / 2;
    if (half > state.population())
        throw std::invalid_argument("weak-dorfman testing needs T/2 <= n");

    StepReport report;
    report.snapshot = snapshot_of(state);

    std::vector<int> pool = all_indices(state.population());
    rng.shuffle_prefix(pool, static_cast<std::size_t>(half));
    run_individual_tests(state, std::span<const int>(pool.data(), static_cast<std::size_t>(half)),
                         report);
    // The discarded stage-one pools are still charged against the budget.
    report.group_tests_used = half;
    report.tests_used = report.group_tests_used + report.individual_tests_used;
    return report;
}

StepReport policy_step(PolicyKind kind, const PopulationState& state, const ModelParams& params,
                       RngStream& rng) {
    switch (kind) {
        case PolicyKind::Individual: return individual_step(state, params, rng);
        case PolicyKind::Dorfman: return dorfman_step(state, params, rng);
        case PolicyKind::WeakIndividual: return weak_individual_step(state, params, rng);
        case PolicyKind::WeakDorfman: return weak_dorfman_step(state, params, rng);
    }
    throw std::invalid_argument("unknown policy kind");
}

}  // namespace dyntest
