#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "apindex/index_table.hpp"
#include "apindex/model.hpp"

namespace apindex {

inline constexpr std::uint64_t kEnumerationBudget = 1'000'000;

class BudgetExceeded : public std::runtime_error {
public:
    BudgetExceeded(std::uint64_t required, std::uint64_t budget);
    std::uint64_t required() const { return required_; }

private:
    std::uint64_t required_;
};

// Entry horizons e(j) ∈ {1, ..., d+1}: j ∈ A_s iff e(j) ≤ s, so d+1 means the
// state is never continued. Nested by construction.
using EntryProfile = std::vector<int>;

struct ProfileValue {
    EntryProfile entry;
    double reward = 0.0;
    double work = 0.0;
    double ratio = 0.0;
};

// Reward and work of playing (d, i), then continuing by `entry`.
ProfileValue evaluate_profile(const BanditModel& model, int d, int i, const EntryProfile& entry);

// Number of profiles (d+1)^n, saturated at UINT64_MAX.
std::uint64_t profile_count(int n, int d);

// max over all nested profiles of r/w at (d, i).
double oracle_index_enumerate(const BanditModel& model, int d, int i, std::uint64_t budget = kEnumerationBudget);

// Every λ*(d, i), d ≤ T, by enumeration (one pass over profiles per horizon).
IndexTable oracle_index_table(const BanditModel& model, int horizon, std::uint64_t budget = kEnumerationBudget);

// Smallest root of v_d(i; λ) = λ h_d by bisection on [min R, max R].
double oracle_index_bisect(const BanditModel& model, int d, int i, double tol);

// Lexicographically smallest maximizing profile (ratios within 1e-12 relative count as ties).
ProfileValue oracle_optimal_stopping_time(const BanditModel& model, int d, int i, std::uint64_t budget = kEnumerationBudget);

// Profile of the threshold rule: continue at (s, j), s < d, iff λ*(s, j) ≥ level.
EntryProfile threshold_profile(const IndexTable& table, int d, double level);

struct ThresholdCheck {
    bool value_matches = false;       // threshold rule attains the enumerated maximum
    int decision_mismatches = 0;      // reachable (s, j) with a clear index gap decided differently
};

// Compares the enumerated argmax against the rule "continue iff λ*(s, j) ≥ λ*(d, i)".
ThresholdCheck check_threshold_rule(const BanditModel& model, const IndexTable& table, int d, int i, double tol = 1e-9);

// max over λ ∈ {λ*(s, j): s < d} ∪ {+∞} of the threshold-rule ratio.
double discrete_threshold_maximum(const BanditModel& model, const IndexTable& table, int d, int i);

using Rational = boost::multiprecision::cpp_rational;

struct RationalModel {
    int n = 0;
    std::vector<Rational> transitions;  // row-major
    std::vector<Rational> rewards;
    Rational beta{1};

    // Exact conversion of every double entry.
    static RationalModel from(const BanditModel& model);
};

// Exact enumeration in rational arithmetic.
Rational oracle_index_exact(const RationalModel& model, int d, int i, std::uint64_t budget = kEnumerationBudget);
Rational oracle_index_exact(const BanditModel& model, int d, int i, std::uint64_t budget = kEnumerationBudget);

}  // namespace apindex
