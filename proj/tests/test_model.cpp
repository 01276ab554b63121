#include <doctest.h>

#include <limits>

#include "apindex/model.hpp"
#include "fixtures.hpp"

using namespace apindex;

TEST_CASE("single state identity chain is valid") {
    BanditModel m{1, {1.0}, {5.0}, 1.0};
    CHECK(model_violations(m).empty());
    CHECK_NOTHROW(validate_model(m));
}

TEST_CASE("validation reports every violation") {
    BanditModel m{2, {0.5, 0.6, -0.1, 1.1}, {0.0, 1.0}, 0.0};
    const auto v = model_violations(m);
    int rows = 0, negative = 0, discount = 0;
    for (const auto& x : v) {
        rows += x.kind == ViolationKind::NonStochasticRow;
        negative += x.kind == ViolationKind::NegativeProbability;
        discount += x.kind == ViolationKind::BadDiscount;
    }
    CHECK(rows == 1);
    CHECK(negative == 1);
    CHECK(discount == 1);
    CHECK_THROWS_AS(validate_model(m), ModelValidationError);
}

TEST_CASE("non-finite reward and bad shape are rejected") {
    BanditModel m{2, {1.0, 0.0, 0.0, 1.0}, {0.0, std::numeric_limits<double>::infinity()}, 1.0};
    CHECK_THROWS_AS(validate_model(m), ModelValidationError);
    BanditModel short_rewards{2, {1.0, 0.0, 0.0, 1.0}, {0.0}, 1.0};
    CHECK_THROWS_AS(validate_model(short_rewards), ModelValidationError);
}

TEST_CASE("sparse fanout bound") {
    auto m = to_sparse(fixtures::swap_instance());
    CHECK(m.fanout() == 1);
    CHECK(model_violations(m, 1).empty());
    auto dense = random_dense_instance(4, 3);
    CHECK_FALSE(model_violations(to_sparse(dense), 2).empty());
}

TEST_CASE("random dense instances are deterministic and stochastic") {
    const auto a = random_dense_instance(100, 7);
    const auto b = random_dense_instance(100, 7);
    CHECK(a.transitions == b.transitions);
    CHECK(a.rewards == b.rewards);
    CHECK(random_dense_instance(100, 8).rewards != a.rewards);
    for (int i = 0; i < a.n; ++i) {
        double sum = 0.0;
        for (int j = 0; j < a.n; ++j) {
            CHECK(a.p(i, j) > 0.0);
            sum += a.p(i, j);
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
        CHECK(a.rewards[i] >= 0.0);
        CHECK(a.rewards[i] <= 1.0);
    }
}

TEST_CASE("birth-death instances have fanout three") {
    const auto m = random_birth_death_instance(50, 4, 0.9);
    CHECK(m.fanout() == 3);
    CHECK_NOTHROW(validate_model(m, 3));
    CHECK(to_dense(m).n == 50);
}

TEST_CASE("beta-bernoulli law") {
    const auto spec = beta_bernoulli_spec(1.0);
    CHECK(spec.reward({1, 1}) == doctest::Approx(0.5));
    const auto next = spec.successors({1, 1});
    REQUIRE(next.size() == 2);
    CHECK(next[0].to == StateKey{2, 1});
    CHECK(next[0].p == 0.5);
    CHECK(next[1].to == StateKey{1, 2});
    CHECK(next[1].p == 0.5);
    CHECK(spec.fanout == 2);
    CHECK(format_key(spec, {3, 4}) == "3:4");
    CHECK_THROWS_AS(beta_bernoulli_spec(0.0), ModelValidationError);
}

TEST_CASE("beta reachable sets") {
    const auto spec = beta_bernoulli_spec(0.9);
    const auto sets = reachable_sets(spec, {1, 1}, 50);
    CHECK(sets.sets[0] == std::vector<StateKey>{{1, 1}});
    CHECK(sets.sets[1] == std::vector<StateKey>{{1, 1}, {1, 2}, {2, 1}});
    CHECK(sets.size(2) == 6);
    for (int s = 0; s <= 50; ++s) {
        CHECK(sets.size(s) == static_cast<std::size_t>((s + 1) * (s + 2) / 2));
        if (s > 0)
            for (const auto& k : sets.sets[static_cast<std::size_t>(s - 1)])
                CHECK(std::binary_search(sets.sets[static_cast<std::size_t>(s)].begin(), sets.sets[static_cast<std::size_t>(s)].end(), k));
    }
    // Discovery order lists each X_s as a prefix.
    for (int s = 0; s <= 50; ++s) {
        std::vector<StateKey> prefix(sets.discovery.begin(), sets.discovery.begin() + static_cast<std::ptrdiff_t>(sets.size(s)));
        std::sort(prefix.begin(), prefix.end());
        CHECK(prefix == sets.sets[static_cast<std::size_t>(s)]);
    }
}

TEST_CASE("finite reachable sets saturate") {
    const auto m = random_birth_death_instance(10, 1);
    const auto sets = reachable_sets(m, 0, 12);
    CHECK(sets.size(0) == 1);
    CHECK(sets.size(1) == 2);
    CHECK(sets.size(9) == 10);
    CHECK(sets.size(12) == 10);
}
