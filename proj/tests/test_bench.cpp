#include <doctest.h>

#include <cmath>

#include "apindex/bench.hpp"
#include "apindex/calibration.hpp"

using namespace apindex;

TEST_CASE("memory slot formulas") {
    CHECK(memory_slots("calibration", 100, 50, 1001) == 201201.0);
    CHECK(memory_slots("rag", 100, 50, 0) == 2010500.0);
    CHECK(memory_slots("rag_i0", 0, 10, 0) == doctest::Approx(58531.0).epsilon(1e-15));
    CHECK(memory_slots("calibration_i0", 0, 10, 1001) == 1001.0 * 11 * 12 + 1001);
    CHECK_THROWS_AS(memory_slots("nope", 1, 1, 1), std::invalid_argument);
}

TEST_CASE("exact cubic fit") {
    std::vector<double> xs, ys;
    for (double x : {1.0, 2.0, 3.0, 5.0, 8.0, 13.0}) {
        xs.push_back(x);
        ys.push_back(x * x * x);
    }
    const auto fit = ls_polyfit(xs, ys, 3);
    CHECK(std::abs(fit.coeffs[3] - 1.0) <= 1e-9);
    CHECK(fit.rmse <= 1e-9);
    CHECK(fit(4.0) == doctest::Approx(64.0));
}

TEST_CASE("underfit has positive rmse") {
    const auto fit = ls_polyfit({1, 2, 3}, {1, 4, 9}, 1);
    CHECK(fit.rmse > 0.0);
    CHECK(fit.coeffs[1] == doctest::Approx(4.0));
}

TEST_CASE("rank deficiency") {
    CHECK_THROWS_AS(ls_polyfit({1, 2, 3}, {1, 2, 3}, 3), RankDeficient);
    CHECK_THROWS_AS(ls_polyfit({2, 2, 2, 2}, {1, 2, 3, 4}, 1), RankDeficient);
}

TEST_CASE("fit order selection rejects spurious leading terms") {
    std::vector<double> xs, ys;
    for (double x = 50; x <= 200; x += 25) {
        xs.push_back(x);
        ys.push_back(3.0 * x * x * x + 40.0 * x * x + 7.0 * x + std::sin(x));
    }
    const auto sel = select_fit_order(xs, ys, {2, 3, 4});
    CHECK(sel.best_order == 3);
    CHECK_FALSE(sel.admissible[2]);
}

TEST_CASE("sweep records") {
    SweepConfig config;
    config.algorithms = {"rag", "calibration"};
    config.sizes = {20, 40, 80};
    config.horizons = {6};
    const auto records = run_scaling_sweep(config);
    REQUIRE(records.size() == 6);
    CHECK(records[0].ops < records[1].ops);
    CHECK(records[1].ops < records[2].ops);
    for (int k = 3; k < 6; ++k) {
        const auto& r = records[static_cast<std::size_t>(k)];
        CHECK(r.grid_size == 1001);
        CHECK(r.ops == predicted_calibration_ops(static_cast<std::uint64_t>(r.n), 6, 1001));
    }
}

TEST_CASE("block calibration counts the same operations") {
    SweepConfig config;
    config.algorithms = {"calibration"};
    config.sizes = {15};
    config.horizons = {4};
    config.scalar_calibration = false;
    const auto records = run_scaling_sweep(config);
    CHECK(records[0].ops == predicted_calibration_ops(15, 4, 1001));
}

TEST_CASE("equivalence cells and countable records") {
    SweepConfig config;
    config.algorithms = {"block_rag", "rag_sparse", "rag_i0"};
    config.sizes = {30};
    config.horizons = {5};
    config.threads = 2;
    const auto records = run_scaling_sweep(config);
    REQUIRE(records.size() == 3);
    CHECK(records[0].max_diff_vs_rag <= 1e-12);
    CHECK(records[1].max_diff_vs_rag <= 1e-12);
    CHECK(records[2].n == 35);
    CHECK_THROWS_AS(run_scaling_sweep(SweepConfig{{"bogus"}, {1}, {1}}), std::invalid_argument);
}

TEST_CASE("leading coefficient t statistic") {
    const auto exact = ls_polyfit({1, 2, 3, 4}, {1, 4, 9, 16}, 2);
    CHECK(std::isinf(exact.lead_t));
    CHECK(std::isnan(ls_polyfit({1, 2, 3}, {1, 4, 9}, 2).lead_t));
    std::vector<double> xs, ys;
    for (double x = 1; x <= 10; x += 1) {
        xs.push_back(x);
        ys.push_back(2.0 * x + (static_cast<int>(x) % 2 ? 0.5 : -0.5));
    }
    CHECK(ls_polyfit(xs, ys, 1).lead_t > 10.0);
    CHECK(std::abs(ls_polyfit(xs, ys, 3).lead_t) < 3.0);
}
