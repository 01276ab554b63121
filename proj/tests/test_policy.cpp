#include <doctest.h>

#include <cmath>

#include "apindex/calibration.hpp"
#include "apindex/oracle.hpp"
#include "apindex/policy.hpp"
#include "apindex/rag.hpp"
#include "fixtures.hpp"

using namespace apindex;

namespace {

FhmabInstance two_armed(const BanditModel& unknown, double lambda, int horizon, int initial) {
    FhmabInstance inst;
    inst.projects = {unknown, constant_project(lambda, unknown.beta)};
    inst.horizon = horizon;
    inst.initial = {initial, 0};
    return inst;
}

std::vector<IndexTable> tables_for(const FhmabInstance& inst) {
    std::vector<IndexTable> out;
    for (const auto& p : inst.projects) out.push_back(rag_full(p, inst.horizon));
    return out;
}

}  // namespace

TEST_CASE("two constant projects") {
    FhmabInstance inst;
    inst.projects = {constant_project(1.0, 1.0), constant_project(0.0, 1.0)};
    inst.horizon = 2;
    inst.initial = {0, 0};
    CHECK(fhmab_optimal_value(inst) == 2.0);
    const auto report = evaluate_heuristic(inst, HeuristicRule::Index, tables_for(inst));
    CHECK(report.value == 2.0);
    CHECK(report.engagement[0][0] == 1.0);
    CHECK(report.engagement[1][1] == 0.0);
}

TEST_CASE("known arm reduces to the one-armed problem") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto m = random_dense_instance(3, seed, seed % 2 ? 0.9 : 1.0);
        const double lambda = 0.2 + 0.05 * static_cast<double>(seed);
        const auto sol = solve_one_armed(m, lambda, 4);
        for (int i = 0; i < 3; ++i) {
            const auto inst = two_armed(m, lambda, 4, i);
            const double optimal = fhmab_optimal_value(inst);
            CHECK(std::abs(optimal - sol.value(4, i)) <= 1e-12);
            const auto index = evaluate_heuristic(inst, HeuristicRule::Index, tables_for(inst));
            CHECK(std::abs(index.value - optimal) <= 1e-9);
        }
    }
}

TEST_CASE("single project: the index rule is optimal") {
    FhmabInstance inst;
    inst.projects = {random_dense_instance(4, 3, 0.9)};
    inst.horizon = 5;
    inst.initial = {2};
    const double optimal = fhmab_optimal_value(inst);
    CHECK(evaluate_heuristic(inst, HeuristicRule::Index, tables_for(inst)).value == doctest::Approx(optimal).epsilon(1e-13));
}

TEST_CASE("heuristics never beat the optimum") {
    for (std::uint64_t seed = 30; seed < 45; ++seed) {
        FhmabInstance inst;
        inst.projects = {random_dense_instance(3, seed, 0.9), random_dense_instance(3, seed + 1000, 0.9)};
        inst.horizon = 4;
        inst.initial = {0, 1};
        const double optimal = fhmab_optimal_value(inst);
        const auto tables = tables_for(inst);
        const double index = evaluate_heuristic(inst, HeuristicRule::Index, tables).value;
        const double myopic = evaluate_heuristic(inst, HeuristicRule::Myopic, {}).value;
        CHECK(index <= optimal + 1e-9);
        CHECK(myopic <= optimal + 1e-9);
    }
}

TEST_CASE("engaging up to K projects") {
    FhmabInstance inst;
    inst.projects = {constant_project(0.5, 1.0), constant_project(-0.2, 1.0), constant_project(0.3, 1.0)};
    inst.horizon = 3;
    inst.initial = {0, 0, 0};
    inst.rule = EngagementRule::AtMostK;
    inst.max_engaged = 2;
    CHECK(fhmab_optimal_value(inst) == doctest::Approx(2.4));
    const auto report = evaluate_heuristic(inst, HeuristicRule::Index, tables_for(inst));
    CHECK(report.value == doctest::Approx(2.4));
    CHECK(report.engagement[0][1] == 0.0);
    inst.max_engaged = 3;
    CHECK(fhmab_optimal_value(inst) == doctest::Approx(2.4));
    CHECK(evaluate_heuristic(inst, HeuristicRule::Index, tables_for(inst)).value == doctest::Approx(2.4));
}

TEST_CASE("activity charge shifts the index-rule value") {
    FhmabInstance inst;
    inst.projects = {random_dense_instance(3, 5, 0.8), random_dense_instance(2, 6, 0.8)};
    inst.horizon = 5;
    inst.initial = {1, 0};
    const double base = evaluate_heuristic(inst, HeuristicRule::Index, tables_for(inst)).value;
    auto shifted = inst;
    const double charge = 0.3;
    for (auto& p : shifted.projects)
        for (auto& r : p.rewards) r -= charge;
    const double moved = evaluate_heuristic(shifted, HeuristicRule::Index, tables_for(shifted)).value;
    CHECK(std::abs(moved - (base - charge * h_sequence(0.8, 5)[4])) <= 1e-9);
}

TEST_CASE("missing index value") {
    FhmabInstance inst;
    inst.projects = {random_dense_instance(2, 1, 1.0), random_dense_instance(2, 2, 1.0)};
    inst.horizon = 4;
    inst.initial = {0, 0};
    std::vector<IndexTable> short_tables{rag_full(inst.projects[0], 2), rag_full(inst.projects[1], 2)};
    CHECK_THROWS_AS(evaluate_heuristic(inst, HeuristicRule::Index, short_tables), MissingIndexValue);
}

TEST_CASE("instance validation") {
    FhmabInstance inst;
    inst.projects = {random_dense_instance(2, 1, 1.0), random_dense_instance(2, 2, 0.9)};
    inst.horizon = 2;
    inst.initial = {0, 0};
    CHECK_THROWS_AS(validate_instance(inst), std::invalid_argument);
    inst.projects[1].beta = 1.0;
    inst.max_engaged = 3;
    CHECK_THROWS_AS(validate_instance(inst), std::invalid_argument);
    inst.max_engaged = 1;
    inst.initial = {0, 5};
    CHECK_THROWS_AS(validate_instance(inst), std::out_of_range);
}

TEST_CASE("joint state budget") {
    FhmabInstance inst;
    inst.projects = {random_dense_instance(100, 1), random_dense_instance(100, 2)};
    inst.horizon = 200;
    inst.initial = {0, 0};
    CHECK_THROWS_AS(fhmab_optimal_value(inst), BudgetExceeded);
}

TEST_CASE("monte carlo agrees with the exact value") {
    FhmabInstance inst;
    inst.projects = {random_dense_instance(3, 8, 0.9), random_dense_instance(3, 9, 0.9)};
    inst.horizon = 6;
    inst.initial = {0, 2};
    const auto tables = tables_for(inst);
    const double exact = evaluate_heuristic(inst, HeuristicRule::Index, tables).value;
    const auto a = simulate_heuristic(inst, HeuristicRule::Index, tables, 20000, 42);
    const auto b = simulate_heuristic(inst, HeuristicRule::Index, tables, 20000, 42);
    CHECK(a.mean == b.mean);
    CHECK(a.standard_error > 0.0);
    CHECK(std::abs(a.mean - exact) <= 5.0 * a.standard_error);
}

TEST_CASE("one-armed optimality on the swap instance") {
    const auto m = fixtures::swap_instance();
    const auto table = rag_full(m, 2);
    const auto report = verify_one_armed_optimality(m, table, 0.5);
    CHECK(report.ok());
    CHECK(report.checked == 4);
    CHECK(solve_one_armed(m, 0.5, 2).action(2, 1) == ArmAction::Indifferent);
    const auto below = solve_one_armed(m, -1.0, 2);
    for (int d = 1; d <= 2; ++d)
        for (int i = 0; i < 2; ++i) CHECK(below.action(d, i) == ArmAction::Active);
}

TEST_CASE("one-armed optimality on random pairs") {
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
        const int n = 2 + static_cast<int>(seed % 3);
        const int horizon = 2 + static_cast<int>(seed % 4);
        const auto m = random_dense_instance(n, seed, seed % 3 == 0 ? 1.0 : 0.9);
        const auto table = rag_full(m, horizon);
        const double lambda = seed % 2 ? table.at(horizon, 0) : 0.1 + 0.013 * static_cast<double>(seed);
        CHECK(verify_one_armed_optimality(m, table, lambda).ok());
    }
}
