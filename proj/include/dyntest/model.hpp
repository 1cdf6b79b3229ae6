#ifndef DYNTEST_MODEL_HPP
#define DYNTEST_MODEL_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "dyntest/rng.hpp"

namespace dyntest {

enum class InfectionStatus : std::uint8_t {
    Susceptible = 0,
    Infected = 1,
    Isolated = 2,  // absorbing: never leaves once entered
};

struct ModelParams {
    int population = 0;          // n
    double initial_infection = 0.0;  // p, probability of infection at t = 0
    double spread = 0.0;             // q, per (infected, susceptible) pair per step
    int tests_per_step = 0;          // T, test budget per time instance

    // Throws std::invalid_argument when out of range.
    void validate() const;
};

struct Counts {
    int susceptible = 0;  // alpha
    int infected = 0;     // lambda (non-isolated infections)
    int isolated = 0;     // gamma
};

// Counts captured after the spread phase, just before the testing phase.
struct PhaseSnapshot {
    int susceptible = 0;  // alpha~
    int infected = 0;     // lambda~
    int isolated = 0;     // gamma

    int non_isolated() const { return susceptible + infected; }
    int population() const { return susceptible + infected + isolated; }
};

// Per-individual infection status plus the current step index. Counts are
// maintained incrementally; susceptible count never increases and isolated
// count never decreases.
class PopulationState {
public:
    PopulationState() = default;
    explicit PopulationState(int population)
        : statuses_(static_cast<std::size_t>(population), InfectionStatus::Susceptible),
          counts_{population, 0, 0} {}

    int population() const { return static_cast<int>(statuses_.size()); }
    int time() const { return time_; }
    void advance_time() { ++time_; }

    InfectionStatus status(int individual) const {
        return statuses_[static_cast<std::size_t>(individual)];
    }
    const std::vector<InfectionStatus>& statuses() const { return statuses_; }

    Counts counts() const { return counts_; }

    // Susceptible -> Infected; throws std::logic_error otherwise.
    void infect(int individual);
    // Infected -> Isolated; throws std::logic_error otherwise (policies only
    // submit true positives on the noiseless OR channel).
    void isolate_individual(int individual);

private:
    std::vector<InfectionStatus> statuses_;
    Counts counts_{};
    int time_ = 0;
};

// Binary pooling design, one row per test. Stored as row member lists
// (compressed sparse rows of the T x n binary matrix).
class TestMatrix {
public:
    explicit TestMatrix(int cols) : cols_(cols) {}

    int rows() const { return static_cast<int>(offsets_.size()); }
    int cols() const { return cols_; }

    void add_row(std::span<const int> members);
    void add_singleton_row(int member);

    std::span<const int> row_members(int row) const {
        const std::size_t begin = offsets_[static_cast<std::size_t>(row)];
        const std::size_t end = static_cast<std::size_t>(row) + 1 < offsets_.size()
                                    ? offsets_[static_cast<std::size_t>(row) + 1]
                                    : members_.size();
        return {members_.data() + begin, end - begin};
    }

    bool contains(int row, int col) const;

    static TestMatrix from_dense(const std::vector<std::vector<std::uint8_t>>& dense);

private:
    int cols_ = 0;
    std::vector<int> members_;
    std::vector<std::size_t> offsets_;  // start of each row in members_
};

// One boolean outcome per emitted test row.
using TestResults = std::vector<std::uint8_t>;

// Draws the initial statuses: each individual independently infected with
// probability p, in index order. Time starts at 0.
PopulationState initialize(const ModelParams& params, RngStream& rng);

// Infection spread phase of one time instance. Each susceptible individual
// becomes infected with probability 1 - (1-q)^lambda, independently, where
// lambda is the non-isolated infected count before the phase; equivalent to
// independent per-pair Bernoulli(q) events. Advances time by one.
//
// Draws are consumed in individual index order, and only when lambda > 0 and
// q > 0 (otherwise no individual can be infected and no draw is spent).
void spread_step(PopulationState& state, const ModelParams& params, RngStream& rng);

// Evaluates the OR channel: result i is positive iff some pooled individual
// is currently Infected. Isolated individuals test negative. Pure.
TestResults run_tests(const TestMatrix& matrix, const PopulationState& state);

// Isolates every detected individual; all must currently be Infected.
void isolate(PopulationState& state, std::span<const int> detected);

}  // namespace dyntest

#endif
