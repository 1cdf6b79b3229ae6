#ifndef DYNTEST_ANALYTICS_HPP
#define DYNTEST_ANALYTICS_HPP

#include <span>
#include <vector>

#include "dyntest/model.hpp"
#include "dyntest/policies.hpp"

namespace dyntest {

// Steady-state approximation for the weak policies. The limit is
// n(1-p)(1-q)^(np / (1 - growth_factor)) when the growth factor
// (1 - T/n)(1 + nq(1-p)) -- respectively with T/2 -- is below one, and 0
// otherwise (the non-isolated infection count then fails to contract).
struct SteadyStateResult {
    double growth_factor = 0.0;
    bool convergent = false;
    double limit_alpha = 0.0;
};

SteadyStateResult steady_state_weak_individual(const ModelParams& params);
SteadyStateResult steady_state_weak_dorfman(const ModelParams& params);

// C(susceptible, c) / C(susceptible + infected, c), the probability that a
// uniform c-subset of the non-isolated individuals avoids every infection.
// Evaluated as the running product of (susceptible - i) / (m - i) with
// exponent renormalization, so huge binomials never overflow or underflow.
double binomial_avoidance_ratio(int susceptible, int infected, int subset_size);

// Mean number of detections when min(T, m) of the m non-isolated individuals
// are tested individually: T * lambda~ / m, clamped to [0, lambda~].
double expected_detections_individual(const PhaseSnapshot& snapshot, int tests);

struct DorfmanExpectation {
    double detections = 0.0;
    // True when alpha~ >= C and the conditioned-group formula
    // (T lambda~ / 2m) / (1 - ratio) applied; otherwise every possible group
    // is positive and the unconditioned value T lambda~ / 2m is exact.
    bool conditioned_branch = false;
    // m < T^2/4: the individual-test budget spills over several positive
    // groups and the value is only a lower bound on the true mean.
    bool lower_bound = false;
    // Group size C = 2m/T was not integral; the ratio used floor(C) factors.
    bool approximate = false;
    double group_size = 0.0;  // C
};

// Mean detections per step for the two-stage pooled scheme, from the
// conditioned-group model: T/2 uniform picks inside a uniformly composed
// size-C group given that it contains an infection. Clamped to [0, lambda~].
DorfmanExpectation expected_detections_dorfman(const PhaseSnapshot& snapshot, int tests);

// True when the pooled scheme's expected detections exceed individual
// testing's on this snapshot: alpha~ >= C and avoidance ratio > 1/2.
bool dorfman_advantage(const PhaseSnapshot& snapshot, int tests);

// Probability that a (possibly hypothetical) infected individual escapes the
// testing phase, given the post-spread snapshot. When the snapshot carries no
// infection the value is evaluated for a single hypothetical infected among
// the non-isolated individuals, which keeps the trajectory reconstruction
// finite after the process is controlled; with nobody left to test it is 1.
double state_conditional_p_prime(PolicyKind kind, const PhaseSnapshot& snapshot, int tests);

// P(individual infected at t) = p (1 + nq(1-p))^t prod_{j<=t} p'(j), clamped
// to [0,1], for t = 0..horizon. p_prime[j-1] holds p'(j).
std::vector<double> infected_probability_curve(const ModelParams& params,
                                               std::span<const double> p_prime, int horizon);

// P(individual susceptible at t) = (1-p)(1-q)^(n sum_{j<t} p_infected[j])
// for t = 0..horizon.
std::vector<double> susceptible_probability_curve(const ModelParams& params,
                                                  std::span<const double> p_infected,
                                                  int horizon);

// Expected susceptible count,
//   n(1-p)(1-q)^(np sum_{i<t} (1+nq(1-p))^i prod_{j<=i} p'(j)),
// clamped to [0,n]; equals n * susceptible_probability_curve applied to
// infected_probability_curve whenever no clamp engages.
std::vector<double> expected_alpha_curve(const ModelParams& params,
                                         std::span<const double> p_prime, int horizon);

}  // namespace dyntest

#endif
