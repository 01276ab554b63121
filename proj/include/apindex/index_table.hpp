#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "apindex/model.hpp"

namespace apindex {

// One step of the adaptive-greedy output: augmented state (s, i) and the index
// value assigned to it.
struct OrderEntry {
    int s = 0;
    int i = 0;
    double lambda = 0.0;
};

// Index values λ*(d, i) for 1 ≤ d ≤ T. Horizon d covers states 0..size(d)-1;
// finite models have size(d) == n for every d, countable ones shrink with d.
class IndexTable {
public:
    IndexTable() = default;
    IndexTable(int horizon, std::vector<int> sizes);

    int horizon() const { return horizon_; }
    int size(int d) const { return sizes_.at(static_cast<std::size_t>(d - 1)); }
    std::size_t value_count() const;

    bool has(int d, int i) const;
    double at(int d, int i) const;
    void set(int d, int i, double value);

    std::vector<OrderEntry>& order() { return order_; }
    const std::vector<OrderEntry>& order() const { return order_; }

    // Keys for countable tables; empty for finite ones.
    std::vector<StateKey>& keys() { return keys_; }
    const std::vector<StateKey>& keys() const { return keys_; }

private:
    int horizon_ = 0;
    std::vector<int> sizes_;
    std::vector<std::vector<double>> values_;
    std::vector<OrderEntry> order_;
    std::vector<StateKey> keys_;
};

// Multiply-add bookkeeping for measure updates and block products.
struct OpCounts {
    std::uint64_t refresh_ops = 0;
    std::uint64_t rank1_ops = 0;
    std::uint64_t block_ops = 0;
    std::uint64_t block_products = 0;
    std::uint64_t refreshes = 0;
    std::uint64_t max_refresh_ops = 0;

    std::uint64_t total() const { return refresh_ops + rank1_ops + block_ops; }
};

// Largest absolute difference over the common domain; throws if the domains differ.
double max_abs_difference(const IndexTable& a, const IndexTable& b);

}  // namespace apindex
