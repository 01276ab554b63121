#include "apindex/rag.hpp"

#include <limits>
#include <stdexcept>

#include "rag_engine.hpp"

namespace apindex {

namespace {

void check_horizon(int horizon) {
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
}

detail::StagedProblem finite_problem(int n, const std::vector<double>& rewards, int horizon) {
    detail::StagedProblem problem;
    problem.horizon = horizon;
    problem.sizes.assign(static_cast<std::size_t>(horizon), n);
    problem.rewards = rewards;
    return problem;
}

}  // namespace

MeasurePair measure_refresh(const BanditModel& model, std::span<const int> continuation,
                            std::span<const double> work_prev, std::span<const double> reward_prev) {
    const auto n = static_cast<std::size_t>(model.n);
    if (work_prev.size() != n || reward_prev.size() != n) throw std::invalid_argument("measure_refresh: vector length differs from n");
    MeasurePair out{std::vector<double>(n, 1.0), model.rewards};
    for (int i = 0; i < model.n; ++i)
        for (int j : continuation) {
            const double b = model.beta * model.p(i, j);
            out.work[static_cast<std::size_t>(i)] += b * work_prev[static_cast<std::size_t>(j)];
            out.reward[static_cast<std::size_t>(i)] += b * reward_prev[static_cast<std::size_t>(j)];
        }
    return out;
}

void measure_rank1_update(const BanditModel& model, int entering, double work_entering, double reward_entering,
                          MeasurePair& measures) {
    if (entering < 0 || entering >= model.n) throw std::out_of_range("measure_rank1_update: state outside the model");
    for (int i = 0; i < model.n; ++i) {
        const double b = model.beta * model.p(i, entering);
        measures.work[static_cast<std::size_t>(i)] += b * work_entering;
        measures.reward[static_cast<std::size_t>(i)] += b * reward_entering;
    }
}

IndexTable ag_reference(const BanditModel& model, int horizon, AgTieBreak tie_break) {
    validate_model(model);
    check_horizon(horizon);
    const int n = model.n;
    IndexTable table(horizon, std::vector<int>(static_cast<std::size_t>(horizon), n));
    // in_set[s-1][i]: (s, i) already emitted, i.e. i ∈ A_s.
    std::vector<std::vector<char>> in_set(static_cast<std::size_t>(horizon), std::vector<char>(static_cast<std::size_t>(n), 0));
    std::vector<MeasurePair> measures(static_cast<std::size_t>(horizon));

    for (int step = 0; step < horizon * n; ++step) {
        measures[0] = {std::vector<double>(static_cast<std::size_t>(n), 1.0), model.rewards};
        for (int s = 2; s <= horizon; ++s) {
            std::vector<int> continuation;
            for (int j = 0; j < n; ++j)
                if (in_set[static_cast<std::size_t>(s - 2)][static_cast<std::size_t>(j)]) continuation.push_back(j);
            const auto& prev = measures[static_cast<std::size_t>(s - 2)];
            measures[static_cast<std::size_t>(s - 1)] = measure_refresh(model, continuation, prev.work, prev.reward);
        }

        int best_s = -1, best_i = -1;
        double best = -std::numeric_limits<double>::infinity();
        for (int s = horizon; s >= 1; --s) {
            const auto& m = measures[static_cast<std::size_t>(s - 1)];
            for (int k = 0; k < n; ++k) {
                const int i = tie_break == AgTieBreak::LowestState ? k : n - 1 - k;
                if (in_set[static_cast<std::size_t>(s - 1)][static_cast<std::size_t>(i)]) continue;
                if (s < horizon && !in_set[static_cast<std::size_t>(s)][static_cast<std::size_t>(i)]) continue;
                const double value = m.reward[static_cast<std::size_t>(i)] / m.work[static_cast<std::size_t>(i)];
                if (best_s < 0 || value > best) {
                    best = value;
                    best_s = s;
                    best_i = i;
                }
            }
        }
        in_set[static_cast<std::size_t>(best_s - 1)][static_cast<std::size_t>(best_i)] = 1;
        table.set(best_s, best_i, best);
        table.order().push_back({best_s, best_i, best});
    }
    return table;
}

IndexTable rag_full(const BanditModel& model, int horizon, RagStats* stats) {
    validate_model(model);
    check_horizon(horizon);
    detail::DenseKernel kernel(model);
    return detail::run_rag(finite_problem(model.n, model.rewards, horizon), kernel, stats);
}

IndexTable rag_full_sparse(const SparseBanditModel& model, int horizon, RagStats* stats) {
    validate_model(model);
    check_horizon(horizon);
    detail::SparseKernel kernel(model.n, model.rows, model.beta);
    return detail::run_rag(finite_problem(model.n, model.rewards, horizon), kernel, stats);
}

IndexTable block_rag_full(const BanditModel& model, int horizon, RagStats* stats) {
    validate_model(model);
    check_horizon(horizon);
    detail::DenseKernel kernel(model);
    return detail::run_block_rag(finite_problem(model.n, model.rewards, horizon), kernel, stats);
}

}  // namespace apindex
