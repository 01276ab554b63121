#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "apindex/index_table.hpp"
#include "apindex/model.hpp"

namespace apindex {

inline constexpr std::uint64_t kJointStateBudget = 1'000'000;

enum class EngagementRule {
    ExactlyOne,  // one project engaged every period
    AtMostK,     // up to K projects engaged, idling earns 0
};

struct FhmabInstance {
    std::vector<BanditModel> projects;
    int horizon = 1;
    int max_engaged = 1;
    EngagementRule rule = EngagementRule::ExactlyOne;
    std::vector<int> initial;  // one state per project

    double beta() const;
};

// Throws std::invalid_argument (or ModelValidationError) on malformed instances.
void validate_instance(const FhmabInstance& instance);

// Optimal expected total discounted reward by backward induction over joint states.
double fhmab_optimal_value(const FhmabInstance& instance, std::uint64_t budget = kJointStateBudget);

enum class HeuristicRule { Index, Myopic };

const char* rule_name(HeuristicRule rule);

class MissingIndexValue : public std::runtime_error {
public:
    MissingIndexValue(int project, int d, int state);
};

struct PolicyReport {
    std::string policy;
    double value = 0.0;
    // engagement[t][m]: probability project m is engaged in period t (t = 0 first).
    std::vector<std::vector<double>> engagement;
};

// Exact value of a priority rule by forward recursion over the joint-state
// distribution. `tables[m]` holds λ*_m(d, i); unused by the myopic rule.
PolicyReport evaluate_heuristic(const FhmabInstance& instance, HeuristicRule rule, const std::vector<IndexTable>& tables,
                                std::uint64_t budget = kJointStateBudget);

struct MonteCarloEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
    std::uint64_t runs = 0;
};

MonteCarloEstimate simulate_heuristic(const FhmabInstance& instance, HeuristicRule rule, const std::vector<IndexTable>& tables,
                                      std::uint64_t runs, std::uint64_t seed);

struct OneArmedViolation {
    int d = 0;
    int state = 0;
    double index = 0.0;
    std::string message;
};

struct OneArmedReport {
    std::size_t checked = 0;
    std::vector<OneArmedViolation> violations;
    bool ok() const { return violations.empty(); }
};

// Against a standard arm paying λ: active must be the only optimal action when
// λ*(d,i) > λ + tol, passive the only one when λ*(d,i) < λ - tol; inside the
// band either action may be optimal.
OneArmedReport verify_one_armed_optimality(const BanditModel& model, const IndexTable& table, double lambda, double tol = 1e-9);

// Single-state project paying `reward` every period.
BanditModel constant_project(double reward, double beta);

}  // namespace apindex
