#include <doctest.h>

#include <cmath>

#include "apindex/countable.hpp"
#include "apindex/rag.hpp"
#include "fixtures.hpp"

using namespace apindex;

TEST_CASE("beta relevant counts") {
    const auto spec = beta_bernoulli_spec(1.0);
    CHECK(relevant_count(spec, {1, 1}, 1) == 1);
    CHECK(relevant_count(spec, {1, 1}, 3) == 10);
    CHECK(relevant_count(spec, {1, 1}, 5) == 35);
    CHECK(relevant_count(spec, {1, 1}, 8) == 120);
    CHECK(relevant_count(spec, {1, 1}, 80) == 88560);
    for (int t = 1; t <= 20; ++t) {
        const auto table = rag_from_initial(spec, {1, 1}, t);
        CHECK(table.value_count() == static_cast<std::size_t>(t * (t + 1) * (t + 2) / 6));
        CHECK(table.order().size() == table.value_count());
    }
}

TEST_CASE("beta index values") {
    const auto spec = beta_bernoulli_spec(1.0);
    const auto table = rag_from_initial(spec, {1, 1}, 6);
    for (int i = 0; i < table.size(1); ++i) {
        const auto key = table.keys()[i];
        CHECK(table.at(1, i) == static_cast<double>(key.a) / static_cast<double>(key.a + key.b));
    }
    CHECK(table.keys()[0] == StateKey{1, 1});
    CHECK(std::abs(table.at(2, 0) - 5.0 / 9.0) <= 1e-12);
    for (std::size_t k = 1; k < table.order().size(); ++k) CHECK(table.order()[k].lambda <= table.order()[k - 1].lambda);
}

TEST_CASE("beta index from (1,1) grows with the horizon") {
    for (double beta : {0.7, 0.8, 0.9, 1.0}) {
        const auto table = rag_from_initial(beta_bernoulli_spec(beta), {1, 1}, 30);
        CHECK(table.at(1, 0) == 0.5);
        for (int s = 1; s < 30; ++s) CHECK(table.at(s + 1, 0) >= table.at(s, 0) - 1e-12);
    }
}

TEST_CASE("discounted increments shrink") {
    const auto table = rag_from_initial(beta_bernoulli_spec(0.7), {1, 1}, 40);
    const double early = table.at(11, 0) - table.at(10, 0);
    const double late = table.at(31, 0) - table.at(30, 0);
    CHECK(late < early);
    CHECK(late <= 0.5 * early);
}

TEST_CASE("block variant matches") {
    for (double beta : {0.8, 1.0}) {
        const auto spec = beta_bernoulli_spec(beta);
        RagStats stats;
        const auto a = rag_from_initial(spec, {2, 3}, 15);
        const auto b = block_rag_from_initial(spec, {2, 3}, 15, &stats);
        CHECK(max_abs_difference(a, b) <= 1e-12);
        CHECK(stats.ops.block_products == 13);
    }
}

TEST_CASE("embedding crosscheck") {
    auto five = finite_embedding_crosscheck(beta_bernoulli_spec(0.9), {1, 1}, 5);
    CHECK(five.compared == 35);
    auto eight = finite_embedding_crosscheck(beta_bernoulli_spec(1.0), {1, 1}, 8);
    CHECK(eight.compared == 120);
    auto one = finite_embedding_crosscheck(beta_bernoulli_spec(1.0), {3, 1}, 1);
    CHECK(one.compared == 1);
    const auto single = rag_from_initial(beta_bernoulli_spec(1.0), {3, 1}, 1);
    CHECK(single.at(1, 0) == 0.75);
}

TEST_CASE("embedding crosscheck reports mismatches") {
    auto spec = beta_bernoulli_spec(1.0);
    CHECK_THROWS_AS(finite_embedding_crosscheck(spec, {1, 1}, 4, -1.0), MismatchReport);
}

TEST_CASE("finite model through the countable view") {
    const auto sparse = random_birth_death_instance(12, 6, 0.9);
    const auto view = countable_view(sparse);
    const int horizon = 8;
    const auto local = rag_from_initial(view, {5, 0}, horizon);
    const auto full = rag_full_sparse(sparse, horizon);
    for (int d = 1; d <= horizon; ++d)
        for (int i = 0; i < local.size(d); ++i)
            CHECK(std::abs(local.at(d, i) - full.at(d, static_cast<int>(local.keys()[i].a))) <= 1e-12);
}

TEST_CASE("fully connected finite model saturates after one step") {
    const auto dense = random_dense_instance(5, 4, 1.0);
    const auto view = countable_view(to_sparse(dense));
    CHECK(relevant_count(view, {0, 0}, 6) == 5 * 5 + 1);
    const auto local = rag_from_initial(view, {0, 0}, 6);
    const auto full = rag_full(dense, 6);
    for (int d = 1; d <= 6; ++d)
        for (int i = 0; i < local.size(d); ++i)
            CHECK(std::abs(local.at(d, i) - full.at(d, static_cast<int>(local.keys()[i].a))) <= 1e-12);
}

TEST_CASE("truncated model agrees on relevant pairs") {
    const auto spec = beta_bernoulli_spec(0.9);
    std::vector<StateKey> keys;
    const auto m = truncated_finite_model(spec, {1, 1}, 3, &keys);
    CHECK(m.n == 6);
    CHECK_NOTHROW(validate_model(m));
    const auto local = rag_from_initial(spec, {1, 1}, 3);
    const auto full = rag_full(m, 3);
    for (int d = 1; d <= 3; ++d)
        for (int i = 0; i < local.size(d); ++i) CHECK(std::abs(local.at(d, i) - full.at(d, i)) <= 1e-12);
}
