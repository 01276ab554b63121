#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace apindex {

// Finite project with a dense row-major transition matrix.
struct BanditModel {
    int n = 0;
    std::vector<double> transitions;  // n*n, row-major
    std::vector<double> rewards;
    double beta = 1.0;

    double p(int i, int j) const { return transitions[static_cast<std::size_t>(i) * n + j]; }
    double& p(int i, int j) { return transitions[static_cast<std::size_t>(i) * n + j]; }
};

struct Transition {
    int to = 0;
    double p = 0.0;
};

// Same project with per-row successor lists. Rows are kept sorted by column.
struct SparseBanditModel {
    int n = 0;
    std::vector<std::vector<Transition>> rows;
    std::vector<double> rewards;
    double beta = 1.0;

    int fanout() const;
};

// Opaque sortable key for countable state spaces. Finite models use {i, 0};
// the Beta-Bernoulli family uses {successes, failures}.
struct StateKey {
    std::int64_t a = 0;
    std::int64_t b = 0;
    auto operator<=>(const StateKey&) const = default;
};

struct KeyedTransition {
    StateKey to;
    double p = 0.0;
};

struct CountableModelSpec {
    std::string family;
    double beta = 1.0;
    int fanout = 0;
    std::function<std::vector<KeyedTransition>(const StateKey&)> successors;
    std::function<double(const StateKey&)> reward;
    std::function<std::string(const StateKey&)> format_key;
};

// Beta(i, j) posterior parameters of a Bernoulli arm.
struct BetaState {
    std::int64_t i = 1;
    std::int64_t j = 1;
    StateKey key() const { return {i, j}; }
};

// Nested reachable sets X_0 ⊆ X_1 ⊆ ... ⊆ X_T from one initial state.
struct ReachableSets {
    StateKey initial;
    // sets[s] holds X_s sorted by key
    std::vector<std::vector<StateKey>> sets;
    // discovery[k] is the k-th state found by the breadth-first traversal;
    // X_s is exactly the prefix of length sizes(s).
    std::vector<StateKey> discovery;

    std::size_t size(int s) const { return sets.at(static_cast<std::size_t>(s)).size(); }
};

enum class ViolationKind { NonStochasticRow, NegativeProbability, BadDiscount, BadShape, NonFiniteReward, FanoutExceeded };

struct ModelViolation {
    ViolationKind kind;
    int row = -1;
    std::string message;
};

class ModelValidationError : public std::runtime_error {
public:
    explicit ModelValidationError(std::vector<ModelViolation> violations);
    const std::vector<ModelViolation>& violations() const { return violations_; }

private:
    std::vector<ModelViolation> violations_;
};

inline constexpr double kStochasticTolerance = 1e-12;

std::vector<ModelViolation> model_violations(const BanditModel& model);
std::vector<ModelViolation> model_violations(const SparseBanditModel& model, int max_fanout = 0);

// Return the model unchanged, or throw ModelValidationError listing every violation.
const BanditModel& validate_model(const BanditModel& model);
const SparseBanditModel& validate_model(const SparseBanditModel& model, int max_fanout = 0);

SparseBanditModel to_sparse(const BanditModel& model);
BanditModel to_dense(const SparseBanditModel& model);

// Name of the generator recorded in output metadata.
inline constexpr const char* kPrngName = "mt19937_64/splitmix64-substreams";

// Row-normalized Uniform(0,1) transition matrix and Uniform(0,1) rewards.
// Transitions and rewards come from independent sub-streams of `seed`.
BanditModel random_dense_instance(int n, std::uint64_t seed, double beta = 1.0);

// Birth-death chain with up to three successors per row (down, stay, up) and
// Uniform(0,1) rewards.
SparseBanditModel random_birth_death_instance(int n, std::uint64_t seed, double beta = 1.0);

CountableModelSpec beta_bernoulli_spec(double beta);

// View a finite model through the countable interface (keys {i, 0}).
CountableModelSpec countable_view(const SparseBanditModel& model);

ReachableSets reachable_sets(const CountableModelSpec& spec, const StateKey& initial, int depth);
ReachableSets reachable_sets(const SparseBanditModel& model, int initial, int depth);

std::string format_key(const CountableModelSpec& spec, const StateKey& key);

}  // namespace apindex
