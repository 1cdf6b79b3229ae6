#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "dyntest/policies.hpp"
#include "oracles.hpp"

using namespace dyntest;

namespace {

// Every policy invariant that must hold for a single step on `state`.
void check_step_invariants(const StepReport& report, const PopulationState& state,
                           const ModelParams& params) {
    CHECK(report.tests_used <= params.tests_per_step);
    CHECK(report.tests_used == report.group_tests_used + report.individual_tests_used);
    std::set<int> tested(report.individually_tested.begin(), report.individually_tested.end());
    CHECK(tested.size() == report.individually_tested.size());  // distinct individuals
    for (int i : report.detected) {
        CHECK(state.status(i) == InfectionStatus::Infected);  // soundness
        CHECK(tested.count(i) == 1);
    }
}

// Dorfman targeting: every individually tested person belongs to a group
// whose pooled test was positive.
void check_dorfman_targeting(const StepReport& report) {
    const int groups = static_cast<int>(report.group_results.size());
    for (int individual : report.individually_tested) {
        bool in_positive_group = false;
        for (int g = 0; g < groups && !in_positive_group; ++g) {
            if (!report.group_results[static_cast<std::size_t>(g)]) continue;
            const auto begin = report.group_offsets[static_cast<std::size_t>(g)];
            const auto end = report.group_offsets[static_cast<std::size_t>(g) + 1];
            for (int k = begin; k < end; ++k) {
                if (report.group_members[static_cast<std::size_t>(k)] == individual) {
                    in_positive_group = true;
                    break;
                }
            }
        }
        CHECK(in_positive_group);
    }
}

}  // namespace

TEST_CASE("policy name round-trip") {
    for (auto kind : {PolicyKind::Individual, PolicyKind::Dorfman, PolicyKind::WeakIndividual,
                      PolicyKind::WeakDorfman})
        CHECK(parse_policy(to_string(kind)) == kind);
    CHECK_FALSE(parse_policy("pooled").has_value());
}

TEST_CASE("individual step with nothing to find") {
    auto state = oracles::make_state(6, 0, 2, 3);
    RngStream rng(1);
    const auto report = individual_step(state, ModelParams{8, 0.0, 0.0, 3}, rng);
    CHECK(report.detected.empty());
    CHECK(report.tests_used == 3);
    CHECK(report.snapshot.infected == 0);
}

TEST_CASE("individual step with full coverage detects everything") {
    auto state = oracles::make_state(4, 3, 1, 9);
    RngStream rng(2);
    const auto report = individual_step(state, ModelParams{8, 0.0, 0.0, 8}, rng);
    CHECK(report.tests_used == 7);  // min(T, n - gamma)
    CHECK(report.detected.size() == 3);
}

TEST_CASE("individual step mean detections: 9 susceptible, 1 infected, 5 tests") {
    const double exact = oracles::individual_expectation(9, 1, 5);
    CHECK(exact == doctest::Approx(0.5).epsilon(1e-12));

    const auto base = oracles::make_state(9, 1, 0, 14);
    const ModelParams params{10, 0.0, 0.0, 5};
    const auto estimate = oracles::mc_mean(100000, [&](int trial) {
        auto rng = RngStream::for_path(2024, static_cast<std::uint64_t>(trial), 1);
        return static_cast<double>(individual_step(base, params, rng).detected.size());
    });
    CHECK(std::abs(estimate.mean - exact) <= 0.005);
    CHECK(oracles::within_three_se(estimate, exact));
}

TEST_CASE("weak individual step samples the whole population") {
    auto everyone_isolated = oracles::make_state(0, 4, 0, 4);
    isolate(everyone_isolated, std::vector<int>{0, 1, 2, 3});
    RngStream rng(4);
    const auto report =
        weak_individual_step(everyone_isolated, ModelParams{4, 0.0, 0.0, 2}, rng);
    CHECK(report.detected.empty());
    CHECK(report.tests_used == 2);

    CHECK_THROWS_AS(weak_individual_step(everyone_isolated, ModelParams{4, 0.0, 0.0, 5}, rng),
                    std::invalid_argument);
}

TEST_CASE("weak individual per-infected detection probability is T/n") {
    const auto base = oracles::make_state(9, 1, 0, 18);
    int infected_index = -1;
    for (int i = 0; i < 10; ++i)
        if (base.status(i) == InfectionStatus::Infected) infected_index = i;

    const ModelParams params{10, 0.0, 0.0, 4};
    const auto estimate = oracles::mc_mean(100000, [&](int trial) {
        auto rng = RngStream::for_path(3033, static_cast<std::uint64_t>(trial), 1);
        const auto report = weak_individual_step(base, params, rng);
        return std::count(report.detected.begin(), report.detected.end(), infected_index) ? 1.0
                                                                                          : 0.0;
    });
    CHECK(std::abs(estimate.mean - 0.4) <= 0.005);
}

TEST_CASE("weak individual never beats the original on the same state") {
    const auto base = oracles::make_state(9, 3, 4, 23);
    const ModelParams params{16, 0.0, 0.0, 6};
    double weak_sum = 0.0, original_sum = 0.0;
    const int trials = 10000;
    for (int trial = 0; trial < trials; ++trial) {
        auto rng_w = RngStream::for_path(51, static_cast<std::uint64_t>(trial), 1);
        auto rng_o = RngStream::for_path(51, static_cast<std::uint64_t>(trial), 2);
        weak_sum += static_cast<double>(weak_individual_step(base, params, rng_w).detected.size());
        original_sum += static_cast<double>(individual_step(base, params, rng_o).detected.size());
    }
    // T lambda/n = 1.125 vs T lambda/(n-gamma) = 1.5; allow 3 SE of each mean.
    CHECK(weak_sum / trials <= original_sum / trials + 3.0 * std::sqrt(2.0 * 1.5 / trials));
}

TEST_CASE("weak dorfman is uniform testing of T/2 with the full budget charged") {
    auto state = oracles::make_state(8, 0, 2, 5);
    RngStream rng(6);
    const auto report = weak_dorfman_step(state, ModelParams{10, 0.0, 0.0, 6}, rng);
    CHECK(report.detected.empty());
    CHECK(report.tests_used == 6);  // always the full budget
    CHECK(report.group_tests_used == 3);
    CHECK(report.individual_tests_used == 3);

    CHECK_THROWS_AS(weak_dorfman_step(state, ModelParams{10, 0.0, 0.0, 5}, rng),
                    std::invalid_argument);
}

TEST_CASE("weak dorfman per-infected detection probability is T/(2n)") {
    const auto base = oracles::make_state(9, 1, 0, 28);
    int infected_index = -1;
    for (int i = 0; i < 10; ++i)
        if (base.status(i) == InfectionStatus::Infected) infected_index = i;

    const ModelParams params{10, 0.0, 0.0, 4};
    const auto estimate = oracles::mc_mean(100000, [&](int trial) {
        auto rng = RngStream::for_path(4044, static_cast<std::uint64_t>(trial), 1);
        const auto report = weak_dorfman_step(base, params, rng);
        return std::count(report.detected.begin(), report.detected.end(), infected_index) ? 1.0
                                                                                          : 0.0;
    });
    CHECK(std::abs(estimate.mean - 0.2) <= 0.005);
}

TEST_CASE("dorfman step with no infections performs no individual tests") {
    auto state = oracles::make_state(7, 0, 1, 7);
    RngStream rng(8);
    const auto report = dorfman_step(state, ModelParams{8, 0.0, 0.0, 4}, rng);
    CHECK(report.detected.empty());
    CHECK(report.individual_tests_used == 0);
    CHECK(report.group_tests_used == 2);

    CHECK_THROWS_AS(dorfman_step(state, ModelParams{8, 0.0, 0.0, 3}, rng),
                    std::invalid_argument);
}

TEST_CASE("dorfman partition with 3 non-isolated and 4 tests") {
    // ceil(3/2) = 2: groups of sizes {2, 1}; both pooled tests are charged.
    const auto base = oracles::make_state(1, 2, 3, 31);
    const ModelParams params{6, 0.0, 0.0, 4};
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto rng = RngStream::for_path(71, seed, 1);
        const auto report = dorfman_step(base, params, rng);
        CHECK(report.group_tests_used == 2);
        std::multiset<int> sizes;
        for (std::size_t g = 0; g + 1 < report.group_offsets.size(); ++g)
            sizes.insert(report.group_offsets[g + 1] - report.group_offsets[g]);
        CHECK(sizes == std::multiset<int>{1, 2});
        CHECK(report.tests_used <= 4);
        check_step_invariants(report, base, params);
        check_dorfman_targeting(report);
    }
}

TEST_CASE("dorfman mean detections match the exact protocol expectation") {
    // 14 susceptible + 2 infected, T=4: exact enumeration of partitions and
    // selection orders gives 11/30; the conditioned-group closed form
    // (15/46 ~ 0.3261) deliberately undershoots it.
    const double exact = oracles::dorfman_protocol_expectation(14, 2, 4);
    CHECK(exact == doctest::Approx(11.0 / 30.0).epsilon(1e-12));

    const auto base = oracles::make_state(14, 2, 0, 40);
    const ModelParams params{16, 0.0, 0.0, 4};
    const auto estimate = oracles::mc_mean(100000, [&](int trial) {
        auto rng = RngStream::for_path(6065, static_cast<std::uint64_t>(trial), 1);
        return static_cast<double>(dorfman_step(base, params, rng).detected.size());
    });
    CHECK(oracles::within_three_se(estimate, exact));
}

TEST_CASE("dorfman spillover covers several positive groups exactly once") {
    // 6 non-isolated in 3 groups of 2, budget 3: a positive selected group is
    // exhausted and the remaining budget moves to other positive groups.
    const auto base = oracles::make_state(2, 4, 0, 44);
    const ModelParams params{6, 0.0, 0.0, 6};
    const double exact = oracles::dorfman_protocol_expectation(2, 4, 6);
    const auto estimate = oracles::mc_mean(100000, [&](int trial) {
        auto rng = RngStream::for_path(7076, static_cast<std::uint64_t>(trial), 1);
        const auto report = dorfman_step(base, params, rng);
        check_dorfman_targeting(report);
        return static_cast<double>(report.detected.size());
    });
    CHECK(oracles::within_three_se(estimate, exact));
}

TEST_CASE("policy_step dispatch is draw-for-draw identical") {
    const auto base = oracles::make_state(6, 2, 2, 50);
    const ModelParams params{10, 0.0, 0.0, 4};
    for (auto kind : {PolicyKind::Individual, PolicyKind::Dorfman, PolicyKind::WeakIndividual,
                      PolicyKind::WeakDorfman}) {
        RngStream a(909), b(909);
        StepReport direct;
        switch (kind) {
            case PolicyKind::Individual: direct = individual_step(base, params, a); break;
            case PolicyKind::Dorfman: direct = dorfman_step(base, params, a); break;
            case PolicyKind::WeakIndividual: direct = weak_individual_step(base, params, a); break;
            case PolicyKind::WeakDorfman: direct = weak_dorfman_step(base, params, a); break;
        }
        const auto dispatched = policy_step(kind, base, params, b);
        CHECK(direct.detected == dispatched.detected);
        CHECK(direct.individually_tested == dispatched.individually_tested);
        CHECK(direct.tests_used == dispatched.tests_used);
        CHECK(a.next_u64() == b.next_u64());
    }
}

TEST_CASE("all four policies find nothing in a clean population") {
    const auto base = oracles::make_state(8, 0, 2, 52);
    const ModelParams params{10, 0.0, 0.0, 4};
    for (auto kind : {PolicyKind::Individual, PolicyKind::Dorfman, PolicyKind::WeakIndividual,
                      PolicyKind::WeakDorfman}) {
        RngStream rng(19);
        CHECK(policy_step(kind, base, params, rng).detected.empty());
    }
}

TEST_CASE("budget, soundness and targeting over random states") {
    RngStream meta(8181);
    for (int round = 0; round < 300; ++round) {
        const int n = 2 + static_cast<int>(meta.uniform_below(30));
        const int infected = static_cast<int>(meta.uniform_below(static_cast<std::uint64_t>(n) + 1));
        const int isolated =
            static_cast<int>(meta.uniform_below(static_cast<std::uint64_t>(n - infected) + 1));
        const auto state = oracles::make_state(n - infected - isolated, infected, isolated,
                                               meta.next_u64());
        const int tests = 2 * (1 + static_cast<int>(meta.uniform_below(8)));
        ModelParams params{n, 0.0, 0.0, tests};

        for (auto kind : {PolicyKind::Individual, PolicyKind::Dorfman,
                          PolicyKind::WeakIndividual, PolicyKind::WeakDorfman}) {
            if (kind == PolicyKind::WeakIndividual && tests > n) continue;
            if (kind == PolicyKind::WeakDorfman && tests / 2 > n) continue;
            RngStream rng(meta.next_u64());
            const auto report = policy_step(kind, state, params, rng);
            check_step_invariants(report, state, params);
            if (kind == PolicyKind::Dorfman) check_dorfman_targeting(report);
        }
    }
}

TEST_CASE("per-individual status marginals are symmetric under every policy") {
    // n=20, p=0.3, q=0.01, T=4, five steps, 1e4 seeded runs: each
    // individual's status frequencies must agree with the population mean to
    // within three binomial standard errors.
    const ModelParams params{20, 0.3, 0.01, 4};
    const int runs = 10000, steps = 5;
    for (auto kind : {PolicyKind::Individual, PolicyKind::Dorfman, PolicyKind::WeakIndividual,
                      PolicyKind::WeakDorfman}) {
        std::vector<std::array<int, 3>> counts(20, {0, 0, 0});
        for (int run = 0; run < runs; ++run) {
            auto spread_rng = RngStream::for_path(987, static_cast<std::uint64_t>(run), 0);
            auto policy_rng = RngStream::for_path(987, static_cast<std::uint64_t>(run), 1);
            auto state = initialize(params, spread_rng);
            for (int t = 1; t <= steps; ++t) {
                if (state.counts().infected > 0) {
                    spread_step(state, params, spread_rng);
                    const auto report = policy_step(kind, state, params, policy_rng);
                    isolate(state, report.detected);
                }
            }
            for (int i = 0; i < 20; ++i)
                ++counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(state.status(i))];
        }
        for (int status = 0; status < 3; ++status) {
            double mean = 0.0;
            for (const auto& c : counts) mean += c[static_cast<std::size_t>(status)];
            mean /= 20.0 * runs;
            const double se = std::sqrt(mean * (1.0 - mean) / runs);
            for (const auto& c : counts) {
                const double frequency = c[static_cast<std::size_t>(status)] / double(runs);
                CHECK(std::abs(frequency - mean) <= 3.0 * se + 1e-9);
            }
        }
    }
}

TEST_CASE("original policies detect at least as much as their weak variants") {
    const auto base = oracles::make_state(30, 6, 4, 60);
    const ModelParams params{40, 0.0, 0.0, 8};
    const int trials = 20000;

    double ind = 0, weak_ind = 0, dorf = 0, weak_dorf = 0;
    for (int trial = 0; trial < trials; ++trial) {
        const auto seed = static_cast<std::uint64_t>(trial);
        auto r1 = RngStream::for_path(303, seed, 1);
        auto r2 = RngStream::for_path(303, seed, 2);
        auto r3 = RngStream::for_path(303, seed, 3);
        auto r4 = RngStream::for_path(303, seed, 4);
        ind += static_cast<double>(individual_step(base, params, r1).detected.size());
        weak_ind += static_cast<double>(weak_individual_step(base, params, r2).detected.size());
        dorf += static_cast<double>(dorfman_step(base, params, r3).detected.size());
        weak_dorf += static_cast<double>(weak_dorfman_step(base, params, r4).detected.size());
    }
    const double slack = 3.0 * std::sqrt(2.0 * 6.0 / trials);  // crude 3 SE bound
    CHECK(weak_ind / trials <= ind / trials + slack);
    CHECK(weak_dorf / trials <= dorf / trials + slack);
}
