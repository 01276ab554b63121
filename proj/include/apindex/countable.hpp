#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "apindex/index_table.hpp"
#include "apindex/model.hpp"
#include "apindex/rag.hpp"

namespace apindex {

// States reachable from i0 within T-1 steps, in breadth-first discovery order.
// X_{T-d} is the prefix of length sizes[d-1].
struct RelevantStateSpace {
    StateKey initial;
    int horizon = 0;
    double beta = 1.0;
    std::vector<StateKey> states;
    std::vector<int> sizes;
    std::vector<double> rewards;
    // Successor lists over `states`; empty for states only seen at d = 1.
    std::vector<std::vector<Transition>> rows;

    std::uint64_t pair_count() const;
    int index_of(const StateKey& key) const;
};

RelevantStateSpace relevant_state_space(const CountableModelSpec& spec, const StateKey& initial, int horizon);

// L_T(i0) = Σ_d |X_{T-d}(i0)|
std::uint64_t relevant_count(const CountableModelSpec& spec, const StateKey& initial, int horizon);

// λ*(d, i) for every relevant pair. Table row d covers the first size(d)
// states of keys(), which lists the discovery order.
IndexTable rag_from_initial(const CountableModelSpec& spec, const StateKey& initial, int horizon, RagStats* stats = nullptr);

// Block variant with sparse premultiplication of the archives.
IndexTable block_rag_from_initial(const CountableModelSpec& spec, const StateKey& initial, int horizon,
                                  RagStats* stats = nullptr);

// Finite project over the augmented states (d, i), d ≤ T, i ∈ X_{T-d}, plus an
// absorbing terminal state (last index) paying min R - 1. (d, i) moves to
// (d-1, j) with probability p(i, j); (1, i) moves to the terminal state.
struct EmbeddedModel {
    BanditModel model;
    std::vector<std::pair<int, int>> pairs;  // model state -> (d, state index)
    int terminal = -1;
};

EmbeddedModel embed_relevant_pairs(const CountableModelSpec& spec, const StateKey& initial, int horizon);

// Finite model over X_{T-1}(i0). States on the outer frontier, only ever
// played with one period left, get self-loops. Agrees with the countable
// index at every relevant pair.
BanditModel truncated_finite_model(const CountableModelSpec& spec, const StateKey& initial, int horizon,
                                   std::vector<StateKey>* keys = nullptr);

struct IndexMismatch {
    int d = 0;
    StateKey key;
    double countable = 0.0;
    double embedded = 0.0;
};

class MismatchReport : public std::runtime_error {
public:
    explicit MismatchReport(std::vector<IndexMismatch> mismatches);
    const std::vector<IndexMismatch>& mismatches() const { return mismatches_; }

private:
    std::vector<IndexMismatch> mismatches_;
};

struct CrosscheckSummary {
    std::size_t compared = 0;
    double max_abs_difference = 0.0;
};

// Compares rag_from_initial against rag_full on the embedded model; throws
// MismatchReport when any pair differs by more than `tol`.
CrosscheckSummary finite_embedding_crosscheck(const CountableModelSpec& spec, const StateKey& initial, int horizon,
                                              double tol = 1e-12);

}  // namespace apindex
