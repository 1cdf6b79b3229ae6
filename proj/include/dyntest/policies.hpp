#ifndef DYNTEST_POLICIES_HPP
#define DYNTEST_POLICIES_HPP

#include <optional>
#include <string_view>
#include <vector>

#include "dyntest/model.hpp"
#include "dyntest/rng.hpp"

namespace dyntest {

enum class PolicyKind {
    Individual,
    Dorfman,
    WeakIndividual,
    WeakDorfman,
};

// Exact CLI / config spellings: "individual", "dorfman", "weak-individual",
// "weak-dorfman".
const char* to_string(PolicyKind kind);
std::optional<PolicyKind> parse_policy(std::string_view name);

inline bool requires_even_tests(PolicyKind kind) {
    return kind == PolicyKind::Dorfman || kind == PolicyKind::WeakDorfman;
}

// Outcome of one testing phase. `detected` holds indices that were
// individually tested and found infected; every one of them was Infected in
// `snapshot`.
struct StepReport {
    int tests_used = 0;
    int group_tests_used = 0;
    int individual_tests_used = 0;
    std::vector<int> detected;
    std::vector<int> individually_tested;
    PhaseSnapshot snapshot;

    // Dorfman stage-one layout, for inspection: group g holds
    // group_members[group_offsets[g] .. group_offsets[g+1]).
    std::vector<int> group_members;
    std::vector<int> group_offsets;
    TestResults group_results;
};

// Uniformly tests min(T, n - gamma) distinct non-isolated individuals, one
// test each.
StepReport individual_step(const PopulationState& state, const ModelParams& params,
                           RngStream& rng);

// Two-stage Dorfman scheme: the non-isolated individuals are uniformly
// partitioned into T/2 disjoint groups and pool-tested; then up to T/2
// members of uniformly selected positive groups are tested individually.
StepReport dorfman_step(const PopulationState& state, const ModelParams& params,
                        RngStream& rng);

// Individual testing of T individuals drawn uniformly from the whole
// population, isolated ones included (their tests come back negative).
StepReport weak_individual_step(const PopulationState& state, const ModelParams& params,
                                RngStream& rng);

// Group results are discarded, leaving uniformly random individual testing
// of T/2 individuals drawn from the whole population; the T/2 discarded
// group tests still count against the budget.
StepReport weak_dorfman_step(const PopulationState& state, const ModelParams& params,
                             RngStream& rng);

StepReport policy_step(PolicyKind kind, const PopulationState& state,
                       const ModelParams& params, RngStream& rng);

}  // namespace dyntest

#endif
