#include "dyntest/model.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dyntest {

void ModelParams::validate() const {
    if (population < 1)
        throw std::invalid_argument("population must be at least 1");
    if (!(initial_infection >= 0.0) || !(initial_infection <= 1.0))
        throw std::invalid_argument("initial infection probability must lie in [0, 1]");
    if (!(spread >= 0.0) || !(spread <= 1.0))
        throw std::invalid_argument("spread probability must lie in [0, 1]");
    if (tests_per_step < 1)
        throw std::invalid_argument("tests per step must be at least 1");
}

void PopulationState::infect(int individual) {
    auto& s = statuses_.at(static_cast<std::size_t>(individual));
    if (s != InfectionStatus::Susceptible)
        throw std::logic_error("infect: individual " + std::to_string(individual) +
                               " is not susceptible");
    s = InfectionStatus::Infected;
    --counts_.susceptible;
    ++counts_.infected;
}

void PopulationState::isolate_individual(int individual) {
    auto& s = statuses_.at(static_cast<std::size_t>(individual));
    if (s != InfectionStatus::Infected)
        throw std::logic_error("isolate: individual " + std::to_string(individual) +
                               " is not a non-isolated infection");
    s = InfectionStatus::Isolated;
    --counts_.infected;
    ++counts_.isolated;
}

void TestMatrix::add_row(std::span<const int> members) {
    for (int m : members) {
        if (m < 0 || m >= cols_)
            throw std::invalid_argument("test matrix: pool member out of range");
    }
    offsets_.push_back(members_.size());
    members_.insert(members_.end(), members.begin(), members.end());
}

void TestMatrix::add_singleton_row(int member) {
    add_row(std::span<const int>(&member, 1));
}

bool TestMatrix::contains(int row, int col) const {
    for (int m : row_members(row))
        if (m == col) return true;
    return false;
}

TestMatrix TestMatrix::from_dense(const std::vector<std::vector<std::uint8_t>>& dense) {
    const int cols = dense.empty() ? 0 : static_cast<int>(dense.front().size());
    TestMatrix matrix(cols);
    std::vector<int> members;
    for (const auto& row : dense) {
        if (static_cast<int>(row.size()) != cols)
            throw std::invalid_argument("test matrix: ragged dense rows");
        members.clear();
        for (int j = 0; j < cols; ++j)
            if (row[static_cast<std::size_t>(j)]) members.push_back(j);
        matrix.add_row(members);
    }
    return matrix;
}

PopulationState initialize(const ModelParams& params, RngStream& rng) {
    params.validate();
    PopulationState state(params.population);
    for (int i = 0; i < params.population; ++i) {
        if (rng.bernoulli(params.initial_infection)) state.infect(i);
    }
    return state;
}

void spread_step(PopulationState& state, const ModelParams& params, RngStream& rng) {
    const Counts before = state.counts();
    state.advance_time();
    if (before.infected == 0 || params.spread <= 0.0) return;

    // 1 - (1-q)^lambda, evaluated as -expm1(lambda * log1p(-q)) to avoid
    // repeated-multiplication drift for large lambda.
    double p_infect = 1.0;
    if (params.spread < 1.0)
        p_infect = -std::expm1(static_cast<double>(before.infected) * std::log1p(-params.spread));

    const int n = state.population();
    for (int i = 0; i < n; ++i) {
        if (state.status(i) != InfectionStatus::Susceptible) continue;
        if (rng.bernoulli(p_infect)) state.infect(i);
    }

    const Counts after = state.counts();
    assert(after.susceptible + after.infected + after.isolated == n);
    assert(after.isolated == before.isolated);
}

TestResults run_tests(const TestMatrix& matrix, const PopulationState& state) {
    if (matrix.cols() != state.population())
        throw std::invalid_argument("run_tests: matrix has " + std::to_string(matrix.cols()) +
                                    " columns for a population of " +
                                    std::to_string(state.population()));
    TestResults results(static_cast<std::size_t>(matrix.rows()), 0);
    for (int r = 0; r < matrix.rows(); ++r) {
        for (int member : matrix.row_members(r)) {
            if (state.status(member) == InfectionStatus::Infected) {
                results[static_cast<std::size_t>(r)] = 1;
                break;
            }
        }
    }
    return results;
}

void isolate(PopulationState& state, std::span<const int> detected) {
    for (int individual : detected) state.isolate_individual(individual);
}

}  // namespace dyntest
