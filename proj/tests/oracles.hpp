// Brute-force oracles used by the test suites. Everything here is
// independent of the library's evaluation paths: plain enumeration over
// subsets, partitions and selection orders, with exact integer weights.
#ifndef DYNTEST_TESTS_ORACLES_HPP
#define DYNTEST_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dyntest/model.hpp"
#include "dyntest/rng.hpp"

namespace oracles {

inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double value = 1.0;
    for (int i = 0; i < k; ++i) value = value * (n - i) / (i + 1);
    return value;
}

// Visits every k-subset of {0..n-1}.
template <typename Visit>
void for_each_subset(int n, int k, Visit&& visit) {
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (;;) {
        visit(const_cast<const std::vector<int>&>(idx));
        int i = k - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
        if (i < 0) return;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j)
            idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
}

// Mean infected count over all uniform min(T, m)-subsets of a population of
// `alpha` susceptible and `lambda` infected individuals (infected occupy
// indices 0..lambda-1).
inline double individual_expectation(int alpha, int lambda, int tests) {
    const int m = alpha + lambda;
    const int k = std::min(tests, m);
    std::uint64_t subsets = 0, infected_total = 0;
    for_each_subset(m, k, [&](const std::vector<int>& subset) {
        ++subsets;
        for (int i : subset)
            if (i < lambda) ++infected_total;
    });
    return static_cast<double>(infected_total) / static_cast<double>(subsets);
}

// Conditioned-group model behind the pooled-testing detection formula: a
// uniformly composed group of size C = 2m/T, conditioned on containing at
// least one infection, with min(T/2, C) members tested uniformly. Exact
// enumeration over group compositions.
inline double dorfman_conditioned_expectation(int alpha, int lambda, int tests) {
    const int m = alpha + lambda;
    if ((2 * m) % tests != 0) throw std::invalid_argument("oracle: group size not integral");
    const int group = 2 * m / tests;
    const int picks = std::min(tests / 2, group);
    std::uint64_t positive_subsets = 0, infected_total = 0;
    for_each_subset(m, group, [&](const std::vector<int>& subset) {
        int infected = 0;
        for (int i : subset)
            if (i < lambda) ++infected;
        if (infected > 0) {
            ++positive_subsets;
            infected_total += static_cast<std::uint64_t>(infected);
        }
    });
    // E[detections | positive] = picks / group * E[infected | positive]
    return static_cast<double>(picks) * static_cast<double>(infected_total) /
           (static_cast<double>(group) * static_cast<double>(positive_subsets));
}

namespace detail {

// Average detections over all uniform orders of the positive groups, with the
// T/2 individual-test budget walked through whole groups and a uniform subset
// of the last partially covered one.
inline double spillover_mean(std::vector<int> positives_sizes, std::vector<int> positives_inf,
                             int budget) {
    const int count = static_cast<int>(positives_sizes.size());
    std::vector<int> order(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end());
    double total = 0.0;
    std::uint64_t permutations = 0;
    do {
        ++permutations;
        int left = budget;
        double detected = 0.0;
        for (int g : order) {
            if (left == 0) break;
            const int size = positives_sizes[static_cast<std::size_t>(g)];
            const int inf = positives_inf[static_cast<std::size_t>(g)];
            if (size <= left) {
                detected += inf;
                left -= size;
            } else {
                detected += static_cast<double>(left) * inf / size;
                left = 0;
            }
        }
        total += detected;
    } while (std::next_permutation(order.begin(), order.end()));
    return total / static_cast<double>(permutations);
}

inline double protocol_recurse(const std::vector<int>& sizes, std::size_t g, int infected_left,
                               std::vector<int>& placement, double weight, int budget,
                               double& expectation) {
    if (g == sizes.size()) {
        if (infected_left != 0) return 0.0;
        std::vector<int> pos_sizes, pos_inf;
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            if (placement[i] > 0) {
                pos_sizes.push_back(sizes[i]);
                pos_inf.push_back(placement[i]);
            }
        }
        const double mean =
            pos_sizes.empty() ? 0.0 : spillover_mean(pos_sizes, pos_inf, budget);
        expectation += weight * mean;
        return weight;
    }
    int capacity_rest = 0;
    for (std::size_t i = g + 1; i < sizes.size(); ++i) capacity_rest += sizes[i];
    double mass = 0.0;
    const int low = std::max(0, infected_left - capacity_rest);
    const int high = std::min(infected_left, sizes[g]);
    for (int j = low; j <= high; ++j) {
        placement[g] = j;
        mass += protocol_recurse(sizes, g + 1, infected_left - j, placement,
                                 weight * binomial(sizes[g], j), budget, expectation);
    }
    placement[g] = 0;
    return mass;
}

}  // namespace detail

// Exact expected detections of the full two-stage protocol: uniform partition
// of the m non-isolated individuals into T/2 groups (blocks of ceil(m/(T/2)),
// remainder in the final block), pooled tests, then uniform positive-group
// order with the T/2 individual-test budget.
inline double dorfman_protocol_expectation(int alpha, int lambda, int tests) {
    const int m = alpha + lambda;
    if (m == 0 || lambda == 0) return 0.0;
    const int max_groups = tests / 2;
    const int group_size = (m + max_groups - 1) / max_groups;
    const int num_groups = (m + group_size - 1) / group_size;
    std::vector<int> sizes;
    for (int g = 0; g < num_groups; ++g)
        sizes.push_back(std::min(m, (g + 1) * group_size) - g * group_size);

    std::vector<int> placement(sizes.size(), 0);
    double expectation = 0.0;
    const double mass = detail::protocol_recurse(sizes, 0, lambda, placement, 1.0, tests / 2,
                                                 expectation);
    return expectation / mass;  // mass == C(m, lambda)
}

// Builds a state with the given composition; the arrangement is shuffled so
// tests never rely on a particular layout.
inline dyntest::PopulationState make_state(int susceptible, int infected, int isolated,
                                           std::uint64_t seed) {
    const int n = susceptible + infected + isolated;
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    dyntest::RngStream rng(seed);
    rng.shuffle_prefix(order, order.size());

    dyntest::PopulationState state(n);
    for (int i = 0; i < infected + isolated; ++i)
        state.infect(order[static_cast<std::size_t>(i)]);
    for (int i = infected; i < infected + isolated; ++i)
        state.isolate_individual(order[static_cast<std::size_t>(i)]);
    return state;
}

// Monte Carlo mean and standard error of a per-trial statistic.
struct McEstimate {
    double mean = 0.0;
    double se = 0.0;
};

template <typename Trial>
McEstimate mc_mean(int trials, Trial&& trial) {
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < trials; ++i) {
        const double x = trial(i);
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / trials;
    double variance = (sum_sq - trials * mean * mean) / (trials - 1);
    if (variance < 0.0) variance = 0.0;
    return {mean, std::sqrt(variance / trials)};
}

// |mc - exact| <= 3 SE, with equality required when the statistic is
// degenerate.
inline bool within_three_se(const McEstimate& estimate, double exact) {
    const double tolerance = 3.0 * estimate.se;
    return std::abs(estimate.mean - exact) <= tolerance + 1e-12;
}

}  // namespace oracles

#endif
