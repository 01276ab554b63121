#pragma once

#include <span>
#include <vector>

#include "apindex/index_table.hpp"
#include "apindex/model.hpp"

namespace apindex {

// Per-stage bookkeeping of a recursive adaptive-greedy run.
struct StageStats {
    int d = 0;
    int steps = 0;             // L_d
    int horizon_emissions = 0; // picks at horizon d (== number of candidate states)
    int consumed = 0;          // archive entries of stage d-1 used
    double min_work = 0.0;     // smallest modified work measure seen
};

struct RagStats {
    OpCounts ops;
    std::vector<StageStats> stages;
    // Emission sequence (s^k_d, i^k_d) of every stage, index d-1.
    std::vector<std::vector<OrderEntry>> stage_sequences;
    std::uint64_t peak_slots = 0;
};

// Modified work and reward measures over all states for one horizon.
struct MeasurePair {
    std::vector<double> work;
    std::vector<double> reward;
};

// w(i) = 1 + Σ_{j∈A} βp(i,j) w_prev(j), r(i) = R(i) + Σ_{j∈A} βp(i,j) r_prev(j).
MeasurePair measure_refresh(const BanditModel& model, std::span<const int> continuation,
                            std::span<const double> work_prev, std::span<const double> reward_prev);

// Adds state `entering` to the previous-horizon continuation set:
// w(i) += βp(i, entering) w_entering, likewise for r.
void measure_rank1_update(const BanditModel& model, int entering, double work_entering, double reward_entering,
                          MeasurePair& measures);

enum class AgTieBreak { LowestState, HighestState };

// One-pass adaptive-greedy reference; recomputes every measure from scratch at
// each of the T·n steps. Ties prefer the longer horizon, then `tie_break`.
IndexTable ag_reference(const BanditModel& model, int horizon, AgTieBreak tie_break = AgTieBreak::LowestState);

// Staged recursive adaptive-greedy algorithm.
IndexTable rag_full(const BanditModel& model, int horizon, RagStats* stats = nullptr);

// Same algorithm traversing only stored nonzeros.
IndexTable rag_full_sparse(const SparseBanditModel& model, int horizon, RagStats* stats = nullptr);

// Block variant: premultiplied archives and one dense product per stage.
IndexTable block_rag_full(const BanditModel& model, int horizon, RagStats* stats = nullptr);

}  // namespace apindex
