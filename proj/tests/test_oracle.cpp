#include <doctest.h>

#include <cmath>

#include "apindex/countable.hpp"
#include "apindex/oracle.hpp"
#include "apindex/rag.hpp"
#include "fixtures.hpp"

using namespace apindex;

TEST_CASE("swap instance by enumeration") {
    const auto m = fixtures::swap_instance();
    CHECK(profile_count(2, 2) == 9);
    CHECK(oracle_index_enumerate(m, 2, 0) == 1.0);
    CHECK(oracle_index_enumerate(m, 2, 1) == 0.5);
    CHECK(oracle_index_enumerate(m, 1, 0) == 1.0);
    CHECK(oracle_index_enumerate(m, 1, 1) == 0.0);
    CHECK(oracle_index_exact(m, 2, 1) == Rational(1, 2));
    CHECK(oracle_index_exact(m, 2, 0) == Rational(1));
}

TEST_CASE("single state project") {
    BanditModel m{1, {1.0}, {-0.25}, 0.6};
    for (int d = 1; d <= 6; ++d) {
        CHECK(oracle_index_enumerate(m, d, 0) == doctest::Approx(-0.25).epsilon(1e-15));
        CHECK(oracle_index_bisect(m, d, 0, 1e-10) == -0.25);
    }
}

TEST_CASE("bisection on the swap instance") {
    const auto m = fixtures::swap_instance();
    CHECK(std::abs(oracle_index_bisect(m, 2, 1, 1e-10) - 0.5) <= 1e-10);
    CHECK(std::abs(oracle_index_bisect(m, 2, 0, 1e-10) - 1.0) <= 1e-10);
    CHECK_THROWS_AS(oracle_index_bisect(m, 2, 1, 0.0), std::invalid_argument);
}

TEST_CASE("optimal stopping time on the swap instance") {
    const auto m = fixtures::swap_instance();
    const auto best = oracle_optimal_stopping_time(m, 2, 0);
    CHECK(best.ratio == 1.0);
    CHECK(best.entry == EntryProfile{1, 2});
    const auto table = rag_full(m, 2);
    const auto check = check_threshold_rule(m, table, 2, 0);
    CHECK(check.value_matches);
    CHECK(check.decision_mismatches == 0);
}

TEST_CASE("equal rewards: always continuing is optimal") {
    BanditModel m{3, {0.2, 0.3, 0.5, 0.3, 0.3, 0.4, 0.1, 0.8, 0.1}, {0.4, 0.4, 0.4}, 0.9};
    for (int i = 0; i < 3; ++i) {
        const auto best = oracle_optimal_stopping_time(m, 4, i);
        const auto always = evaluate_profile(m, 4, i, EntryProfile{1, 1, 1});
        CHECK(std::abs(always.ratio - best.ratio) <= 1e-14);
        CHECK(best.entry == EntryProfile{1, 1, 1});
    }
}

TEST_CASE("budget") {
    const auto m = random_dense_instance(8, 1);
    CHECK(profile_count(8, 5) == 1679616);
    CHECK_THROWS_AS(oracle_index_enumerate(m, 5, 0), BudgetExceeded);
    CHECK_THROWS_AS(oracle_index_table(m, 5), BudgetExceeded);
    CHECK_NOTHROW(oracle_index_enumerate(m, 4, 0));
}

TEST_CASE("enumeration, bisection and exact arithmetic agree") {
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
        const int n = 2 + static_cast<int>(seed % 2);
        const double beta = seed % 3 == 0 ? 1.0 : (seed % 3 == 1 ? 0.5 : 0.9);
        const auto m = random_dense_instance(n, seed, beta);
        const auto table = oracle_index_table(m, 4);
        for (int d = 1; d <= 4; ++d)
            for (int i = 0; i < n; ++i) {
                const double e = table.at(d, i);
                CHECK(e == oracle_index_enumerate(m, d, i));
                CHECK(std::abs(e - oracle_index_bisect(m, d, i, 1e-10)) <= 1e-9);
                CHECK(std::abs(e - oracle_index_exact(m, d, i).convert_to<double>()) <= 1e-14);
            }
    }
}

TEST_CASE("threshold rule and discrete sufficiency") {
    for (std::uint64_t seed = 200; seed < 240; ++seed) {
        const int n = 2 + static_cast<int>(seed % 3);
        const double beta = seed % 3 == 0 ? 1.0 : (seed % 3 == 1 ? 0.5 : 0.9);
        const auto m = random_dense_instance(n, seed, beta);
        const auto table = oracle_index_table(m, 5);
        for (int d = 1; d <= 5; ++d)
            for (int i = 0; i < n; ++i) {
                const auto check = check_threshold_rule(m, table, d, i);
                CHECK(check.value_matches);
                CHECK(check.decision_mismatches == 0);
                CHECK(std::abs(discrete_threshold_maximum(m, table, d, i) - table.at(d, i)) <= 1e-12);
            }
    }
}

TEST_CASE("beta embedding from (1,1)") {
    const auto spec = beta_bernoulli_spec(1.0);
    const auto m = truncated_finite_model(spec, {1, 1}, 3);
    const auto table = oracle_index_table(m, 3);
    const auto local = rag_from_initial(spec, {1, 1}, 3);
    for (int d = 1; d <= 3; ++d)
        for (int i = 0; i < local.size(d); ++i) {
            CHECK(std::abs(table.at(d, i) - local.at(d, i)) <= 1e-12);
            const auto check = check_threshold_rule(m, table, d, i);
            CHECK(check.value_matches);
            CHECK(check.decision_mismatches == 0);
        }
}

TEST_CASE("exact beta value at two periods") {
    // Beta states reachable from (1,1) in one step: (1,1), (2,1), (1,2).
    RationalModel m;
    m.n = 3;
    m.rewards = {Rational(1, 2), Rational(2, 3), Rational(1, 3)};
    m.transitions = {0, Rational(1, 2), Rational(1, 2), 1, 0, 0, 0, 0, 1};
    CHECK(oracle_index_exact(m, 2, 0) == Rational(5, 9));
    CHECK(oracle_index_exact(m, 1, 1) == Rational(2, 3));
}
