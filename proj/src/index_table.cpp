#include "apindex/index_table.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace apindex {

IndexTable::IndexTable(int horizon, std::vector<int> sizes) : horizon_(horizon), sizes_(std::move(sizes)) {
    if (horizon_ < 1 || sizes_.size() != static_cast<std::size_t>(horizon_))
        throw std::invalid_argument("IndexTable: need one size per horizon");
    values_.reserve(sizes_.size());
    for (int n : sizes_) values_.emplace_back(static_cast<std::size_t>(n), std::numeric_limits<double>::quiet_NaN());
}

std::size_t IndexTable::value_count() const {
    std::size_t total = 0;
    for (int n : sizes_) total += static_cast<std::size_t>(n);
    return total;
}

bool IndexTable::has(int d, int i) const {
    return d >= 1 && d <= horizon_ && i >= 0 && i < sizes_[static_cast<std::size_t>(d - 1)] &&
           !std::isnan(values_[static_cast<std::size_t>(d - 1)][static_cast<std::size_t>(i)]);
}

double IndexTable::at(int d, int i) const {
    if (d < 1 || d > horizon_ || i < 0 || i >= sizes_[static_cast<std::size_t>(d - 1)])
        throw std::out_of_range("IndexTable: (" + std::to_string(d) + ", " + std::to_string(i) + ") outside the table");
    return values_[static_cast<std::size_t>(d - 1)][static_cast<std::size_t>(i)];
}

void IndexTable::set(int d, int i, double value) {
    if (d < 1 || d > horizon_ || i < 0 || i >= sizes_[static_cast<std::size_t>(d - 1)])
        throw std::out_of_range("IndexTable: (" + std::to_string(d) + ", " + std::to_string(i) + ") outside the table");
    values_[static_cast<std::size_t>(d - 1)][static_cast<std::size_t>(i)] = value;
}

double max_abs_difference(const IndexTable& a, const IndexTable& b) {
    if (a.horizon() != b.horizon()) throw std::invalid_argument("max_abs_difference: horizons differ");
    double worst = 0.0;
    for (int d = 1; d <= a.horizon(); ++d) {
        if (a.size(d) != b.size(d)) throw std::invalid_argument("max_abs_difference: state counts differ");
        for (int i = 0; i < a.size(d); ++i) {
            const double diff = std::abs(a.at(d, i) - b.at(d, i));
            if (std::isnan(diff)) return std::numeric_limits<double>::infinity();
            worst = std::max(worst, diff);
        }
    }
    return worst;
}

}  // namespace apindex
