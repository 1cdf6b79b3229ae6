#include "dyntest/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dyntest {

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

double growth_base(const ModelParams& p) {
    return 1.0 + p.population * p.spread * (1.0 - p.initial_infection);
}

// (1-q)^exponent with the q = 0 / q = 1 edges handled explicitly.
double one_minus_q_pow(double q, double exponent) {
    if (exponent == 0.0) return 1.0;
    if (q <= 0.0) return 1.0;
    if (q >= 1.0) return 0.0;
    return std::exp(exponent * std::log1p(-q));
}

SteadyStateResult steady_state_common(const ModelParams& params, double test_fraction) {
    SteadyStateResult result;
    result.growth_factor = (1.0 - test_fraction) * growth_base(params);
    result.convergent = result.growth_factor < 1.0;
    if (result.convergent) {
        const double exponent = params.population * params.initial_infection /
                                (1.0 - result.growth_factor);
        result.limit_alpha = params.population * (1.0 - params.initial_infection) *
                             one_minus_q_pow(params.spread, exponent);
    }
    return result;
}

}  // namespace

SteadyStateResult steady_state_weak_individual(const ModelParams& params) {
    params.validate();
    if (params.tests_per_step > params.population)
        throw std::invalid_argument("steady state (weak-individual): T must not exceed n");
    return steady_state_common(params, static_cast<double>(params.tests_per_step) /
                                           params.population);
}

SteadyStateResult steady_state_weak_dorfman(const ModelParams& params) {
    params.validate();
    if (params.tests_per_step % 2 != 0)
        throw std::invalid_argument("steady state (weak-dorfman): T must be even");
    if (params.tests_per_step / 2 > params.population)
        throw std::invalid_argument("steady state (weak-dorfman): T/2 must not exceed n");
    return steady_state_common(params, params.tests_per_step / (2.0 * params.population));
}

double binomial_avoidance_ratio(int susceptible, int infected, int subset_size) {
    if (subset_size < 0 || susceptible < 0 || infected < 0)
        throw std::invalid_argument("binomial ratio: negative argument");
    if (subset_size == 0) return 1.0;
    if (subset_size > susceptible) return 0.0;

    // Running product of exact small-integer quotients; renormalize through
    // the exponent so n = 10^3..10^6 scale binomials stay in range.
    double mantissa = 1.0;
    int exponent = 0;
    const int total = susceptible + infected;
    for (int i = 0; i < subset_size; ++i) {
        mantissa *= static_cast<double>(susceptible - i) / static_cast<double>(total - i);
        int shift = 0;
        mantissa = std::frexp(mantissa, &shift);
        exponent += shift;
    }
    return std::ldexp(mantissa, exponent);
}

double expected_detections_individual(const PhaseSnapshot& snapshot, int tests) {
    if (tests < 1) throw std::invalid_argument("expected detections: tests must be positive");
    const int m = snapshot.non_isolated();
    if (m < 1)
        throw std::invalid_argument("expected detections: no non-isolated individuals");
    const double value = static_cast<double>(tests) * snapshot.infected / m;
    return std::clamp(value, 0.0, static_cast<double>(snapshot.infected));
}

DorfmanExpectation expected_detections_dorfman(const PhaseSnapshot& snapshot, int tests) {
    if (tests < 2 || tests % 2 != 0)
        throw std::invalid_argument("expected detections (dorfman): tests must be even");
    const int m = snapshot.non_isolated();
    if (m < 1)
        throw std::invalid_argument("expected detections (dorfman): no non-isolated individuals");

    DorfmanExpectation result;
    result.group_size = 2.0 * m / tests;
    result.lower_bound = m < static_cast<double>(tests) * tests / 4.0;
    result.approximate = (2 * m) % tests != 0;
    if (snapshot.infected == 0) return result;

    const double unconditioned = static_cast<double>(tests) * snapshot.infected / (2.0 * m);
    if (snapshot.susceptible >= result.group_size) {
        const int c = static_cast<int>(std::floor(result.group_size));
        const double ratio = binomial_avoidance_ratio(snapshot.susceptible, snapshot.infected, c);
        result.conditioned_branch = true;
        result.detections = unconditioned / (1.0 - ratio);
    } else {
        // Fewer susceptibles than one group: every group is positive and the
        // conditioning is vacuous.
        result.detections = unconditioned;
    }

    result.detections = std::clamp(result.detections, 0.0,
                                   static_cast<double>(snapshot.infected));
    return result;
}

bool dorfman_advantage(const PhaseSnapshot& snapshot, int tests) {
    if (tests < 2 || tests % 2 != 0)
        throw std::invalid_argument("dorfman advantage: tests must be even");
    const int m = snapshot.non_isolated();
    if (m < 1) throw std::invalid_argument("dorfman advantage: no non-isolated individuals");
    if (snapshot.infected == 0) return false;
    // Full individual coverage already detects every infection on average;
    // nothing can strictly exceed it.
    if (tests >= m) return false;

    const double group_size = 2.0 * m / tests;
    if (snapshot.susceptible < group_size) return false;
    const double ratio = binomial_avoidance_ratio(snapshot.susceptible, snapshot.infected,
                                                  static_cast<int>(std::floor(group_size)));
    return ratio > 0.5;
}

double state_conditional_p_prime(PolicyKind kind, const PhaseSnapshot& snapshot, int tests) {
    if (tests < 1) throw std::invalid_argument("p': tests must be positive");
    const int n = snapshot.population();
    const int m = snapshot.non_isolated();
    switch (kind) {
        case PolicyKind::WeakIndividual:
            return clamp01(1.0 - std::min(1.0, static_cast<double>(tests) / n));
        case PolicyKind::WeakDorfman:
            return clamp01(1.0 - std::min(1.0, tests / (2.0 * n)));
        case PolicyKind::Individual:
            if (m == 0) return 1.0;
            return clamp01(1.0 - std::min(1.0, static_cast<double>(tests) / m));
        case PolicyKind::Dorfman: {
            if (m == 0) return 1.0;
            PhaseSnapshot effective = snapshot;
            if (effective.infected == 0) {
                effective.infected = 1;
                effective.susceptible = m - 1;
            }
            const double detections = expected_detections_dorfman(effective, tests).detections;
            return clamp01(1.0 - detections / effective.infected);
        }
    }
    throw std::invalid_argument("p': unknown policy kind");
}

std::vector<double> infected_probability_curve(const ModelParams& params,
                                               std::span<const double> p_prime, int horizon) {
    params.validate();
    if (horizon < 0) throw std::invalid_argument("curve: horizon must be non-negative");
    if (static_cast<int>(p_prime.size()) < horizon)
        throw std::invalid_argument("curve: p' sequence shorter than horizon");

    std::vector<double> curve(static_cast<std::size_t>(horizon) + 1);
    const double base = growth_base(params);
    double term = params.initial_infection;
    curve[0] = clamp01(term);
    for (int t = 1; t <= horizon; ++t) {
        term *= base * p_prime[static_cast<std::size_t>(t - 1)];
        curve[static_cast<std::size_t>(t)] = clamp01(term);
    }
    return curve;
}

std::vector<double> susceptible_probability_curve(const ModelParams& params,
                                                  std::span<const double> p_infected,
                                                  int horizon) {
    params.validate();
    if (horizon < 0) throw std::invalid_argument("curve: horizon must be non-negative");
    if (static_cast<int>(p_infected.size()) < horizon)
        throw std::invalid_argument("curve: infected-probability sequence shorter than horizon");

    std::vector<double> curve(static_cast<std::size_t>(horizon) + 1);
    const double never_infected = 1.0 - params.initial_infection;
    double pressure = 0.0;  // sum of P(infected at j), j < t
    curve[0] = clamp01(never_infected);
    for (int t = 1; t <= horizon; ++t) {
        pressure += p_infected[static_cast<std::size_t>(t - 1)];
        curve[static_cast<std::size_t>(t)] =
            clamp01(never_infected *
                    one_minus_q_pow(params.spread, params.population * pressure));
    }
    return curve;
}

std::vector<double> expected_alpha_curve(const ModelParams& params,
                                         std::span<const double> p_prime, int horizon) {
    params.validate();
    if (horizon < 0) throw std::invalid_argument("curve: horizon must be non-negative");
    if (static_cast<int>(p_prime.size()) < horizon)
        throw std::invalid_argument("curve: p' sequence shorter than horizon");

    const double n = params.population;
    const double p = params.initial_infection;
    const double base = growth_base(params);

    std::vector<double> curve(static_cast<std::size_t>(horizon) + 1);
    double term = 1.0;      // (1+nq(1-p))^i prod_{j<=i} p'(j)
    double exponent = 0.0;  // running sum of terms, i < t
    curve[0] = std::clamp(n * (1.0 - p), 0.0, n);
    for (int t = 1; t <= horizon; ++t) {
        exponent += term;
        term *= base * p_prime[static_cast<std::size_t>(t - 1)];
        curve[static_cast<std::size_t>(t)] =
            std::clamp(n * (1.0 - p) * one_minus_q_pow(params.spread, n * p * exponent), 0.0, n);
    }
    return curve;
}

}  // namespace dyntest
