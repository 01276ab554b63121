#pragma once

// Shared machinery for the staged index algorithms. The stage loop is written
// once and parameterized by a transition kernel (dense or sparse) so the finite
// and countable variants run the same control flow.

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

#include "apindex/index_table.hpp"
#include "apindex/model.hpp"
#include "apindex/rag.hpp"

namespace apindex::detail {

// Stage d works on states 0..sizes[d-1]-1; sizes are nonincreasing in d and
// every successor of a state at stage d lies in the range of stage d-1.
struct StagedProblem {
    int horizon = 0;
    std::vector<int> sizes;
    std::vector<double> rewards;  // length sizes[0]

    int size(int d) const { return sizes[static_cast<std::size_t>(d - 1)]; }
};

// B = βP with the compact column cache used by the measure refresh.
class DenseKernel {
public:
    explicit DenseKernel(const BanditModel& model) : b_(model.n, model.n), compact_(model.n, model.n) {
        for (int i = 0; i < model.n; ++i)
            for (int j = 0; j < model.n; ++j) b_(i, j) = model.beta * model.p(i, j);
    }

    void begin_stage(int rows) {
        rows_ = rows;
        members_.clear();
    }

    void activate(int j) {
        compact_.col(static_cast<Eigen::Index>(members_.size())) = b_.col(j);
        members_.push_back(j);
    }

    std::size_t active_count() const { return members_.size(); }

    void refresh(const double* work_prev, const double* reward_prev, const double* rewards, double* work, double* reward,
                 OpCounts& ops) {
        const auto m = static_cast<Eigen::Index>(members_.size());
        gathered_.resize(m, 2);
        for (Eigen::Index k = 0; k < m; ++k) {
            gathered_(k, 0) = work_prev[members_[static_cast<std::size_t>(k)]];
            gathered_(k, 1) = reward_prev[members_[static_cast<std::size_t>(k)]];
        }
        sums_.resize(rows_, 2);
        if (m > 0) sums_.noalias() = compact_.topLeftCorner(rows_, m) * gathered_;
        else sums_.setZero();
        for (int i = 0; i < rows_; ++i) {
            work[i] = 1.0 + sums_(i, 0);
            reward[i] = rewards[i] + sums_(i, 1);
        }
        const std::uint64_t count = 4ULL * static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(rows_) + 2ULL * static_cast<std::uint64_t>(rows_);
        ops.refresh_ops += count;
        ops.max_refresh_ops = std::max(ops.max_refresh_ops, count);
        ++ops.refreshes;
    }

    void rank1(int j, double work_j, double reward_j, double* work, double* reward, OpCounts& ops) const {
        for (int i = 0; i < rows_; ++i) {
            const double b = b_(i, j);
            work[i] += b * work_j;
            reward[i] += b * reward_j;
        }
        ops.rank1_ops += 4ULL * static_cast<std::uint64_t>(rows_);
    }

    // out = B[0:rows_out, rows] * in, where column c of `in` is zero below row prefix[c]
    // and prefix is nondecreasing.
    void premultiply(const std::vector<int>& rows, const Eigen::MatrixXd& in, const std::vector<Eigen::Index>& prefix, int rows_out,
                     Eigen::MatrixXd& out, OpCounts& ops) {
        const auto cols = in.cols();
        out.resize(rows_out, cols);
        gathered_.resize(rows_out, static_cast<Eigen::Index>(rows.size()));
        for (std::size_t k = 0; k < rows.size(); ++k) gathered_.col(static_cast<Eigen::Index>(k)) = b_.col(rows[k]).head(rows_out);
        constexpr Eigen::Index chunk = 64;
        for (Eigen::Index c0 = 0; c0 < cols; c0 += chunk) {
            const Eigen::Index w = std::min(chunk, cols - c0);
            const Eigen::Index r = prefix[static_cast<std::size_t>(c0 + w - 1)];
            if (r == 0) {
                out.middleCols(c0, w).setZero();
                continue;
            }
            out.middleCols(c0, w).noalias() = gathered_.leftCols(r) * in.block(0, c0, r, w);
            ops.block_ops += 2ULL * static_cast<std::uint64_t>(rows_out) * static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(w);
        }
        ++ops.block_products;
    }

    std::uint64_t cache_slots() const { return static_cast<std::uint64_t>(compact_.size()); }

private:
    Eigen::MatrixXd b_;
    Eigen::MatrixXd compact_;
    Eigen::MatrixXd gathered_;
    Eigen::MatrixXd sums_;
    std::vector<int> members_;
    int rows_ = 0;
};

// B = βP in compressed row and compressed column form.
class SparseKernel {
public:
    SparseKernel(int universe, const std::vector<std::vector<Transition>>& rows, double beta) : active_(static_cast<std::size_t>(universe), 0) {
        row_ptr_.reserve(static_cast<std::size_t>(universe) + 1);
        row_ptr_.push_back(0);
        std::vector<int> column_counts(static_cast<std::size_t>(universe), 0);
        for (int i = 0; i < universe; ++i) {
            for (const auto& t : rows[static_cast<std::size_t>(i)]) {
                if (t.p == 0.0) continue;
                col_idx_.push_back(t.to);
                val_.push_back(beta * t.p);
                ++column_counts[static_cast<std::size_t>(t.to)];
            }
            row_ptr_.push_back(static_cast<int>(col_idx_.size()));
        }
        col_ptr_.assign(static_cast<std::size_t>(universe) + 1, 0);
        for (int j = 0; j < universe; ++j) col_ptr_[static_cast<std::size_t>(j) + 1] = col_ptr_[static_cast<std::size_t>(j)] + column_counts[static_cast<std::size_t>(j)];
        row_idx_.resize(col_idx_.size());
        cval_.resize(col_idx_.size());
        std::vector<int> fill(col_ptr_.begin(), col_ptr_.end() - 1);
        for (int i = 0; i < universe; ++i)
            for (int k = row_ptr_[static_cast<std::size_t>(i)]; k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
                const int j = col_idx_[static_cast<std::size_t>(k)];
                const int slot = fill[static_cast<std::size_t>(j)]++;
                row_idx_[static_cast<std::size_t>(slot)] = i;
                cval_[static_cast<std::size_t>(slot)] = val_[static_cast<std::size_t>(k)];
            }
    }

    void begin_stage(int rows) {
        rows_ = rows;
        for (int j : members_) active_[static_cast<std::size_t>(j)] = 0;
        members_.clear();
    }

    void activate(int j) {
        active_[static_cast<std::size_t>(j)] = 1;
        members_.push_back(j);
    }

    std::size_t active_count() const { return members_.size(); }

    void refresh(const double* work_prev, const double* reward_prev, const double* rewards, double* work, double* reward,
                 OpCounts& ops) {
        std::uint64_t hits = 0;
        for (int i = 0; i < rows_; ++i) {
            double sw = 0.0, sr = 0.0;
            for (int k = row_ptr_[static_cast<std::size_t>(i)]; k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
                const int j = col_idx_[static_cast<std::size_t>(k)];
                if (!active_[static_cast<std::size_t>(j)]) continue;
                const double b = val_[static_cast<std::size_t>(k)];
                sw += b * work_prev[j];
                sr += b * reward_prev[j];
                ++hits;
            }
            work[i] = 1.0 + sw;
            reward[i] = rewards[i] + sr;
        }
        const std::uint64_t count = 4ULL * hits + 2ULL * static_cast<std::uint64_t>(rows_);
        ops.refresh_ops += count;
        ops.max_refresh_ops = std::max(ops.max_refresh_ops, count);
        ++ops.refreshes;
    }

    void rank1(int j, double work_j, double reward_j, double* work, double* reward, OpCounts& ops) const {
        std::uint64_t touched = 0;
        for (int k = col_ptr_[static_cast<std::size_t>(j)]; k < col_ptr_[static_cast<std::size_t>(j) + 1]; ++k) {
            const int i = row_idx_[static_cast<std::size_t>(k)];
            if (i >= rows_) continue;
            work[i] += cval_[static_cast<std::size_t>(k)] * work_j;
            reward[i] += cval_[static_cast<std::size_t>(k)] * reward_j;
            ++touched;
        }
        ops.rank1_ops += 4ULL * touched;
    }

    void premultiply(const std::vector<int>& rows, const Eigen::MatrixXd& in, const std::vector<Eigen::Index>& prefix, int rows_out,
                     Eigen::MatrixXd& out, OpCounts& ops) const {
        const auto cols = in.cols();
        out.setZero(rows_out, cols);
        std::uint64_t touched = 0;
        for (Eigen::Index c = 0; c < cols; ++c) {
            const double* src = in.col(c).data();
            double* dst = out.col(c).data();
            for (Eigen::Index k = 0; k < prefix[static_cast<std::size_t>(c)]; ++k) {
                const int j = rows[static_cast<std::size_t>(k)];
                for (int t = col_ptr_[static_cast<std::size_t>(j)]; t < col_ptr_[static_cast<std::size_t>(j) + 1]; ++t) {
                    const int i = row_idx_[static_cast<std::size_t>(t)];
                    if (i >= rows_out) continue;
                    dst[i] += cval_[static_cast<std::size_t>(t)] * src[k];
                    ++touched;
                }
            }
        }
        ops.block_ops += 2ULL * touched;
        ++ops.block_products;
    }

    std::uint64_t cache_slots() const { return 0; }

private:
    std::vector<int> row_ptr_, col_idx_, col_ptr_, row_idx_;
    std::vector<double> val_, cval_;
    std::vector<char> active_;
    std::vector<int> members_;
    int rows_ = 0;
};

// Archive of one stage: emission sequence plus the measure vectors held
// before each step (entry e stores w^{e}, r^{e}).
struct StageArchive {
    int width = 0;
    std::vector<OrderEntry> entries;
    std::vector<double> work;
    std::vector<double> reward;
    // Stage 1 vectors are constant (w ≡ 1, r ≡ R) and are not stored per entry.
    const double* uniform_work = nullptr;
    const double* uniform_reward = nullptr;

    const double* work_at(std::size_t e) const { return uniform_work ? uniform_work : work.data() + e * static_cast<std::size_t>(width); }
    const double* reward_at(std::size_t e) const { return uniform_reward ? uniform_reward : reward.data() + e * static_cast<std::size_t>(width); }
    std::uint64_t slots() const { return static_cast<std::uint64_t>(work.size() + reward.size()); }
};

// Stage 1: λ*(1, i) = R(i), emitted in nonincreasing order (lowest id on ties).
inline std::vector<OrderEntry> first_stage(const StagedProblem& problem, IndexTable& table) {
    const int n = problem.size(1);
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return problem.rewards[static_cast<std::size_t>(a)] > problem.rewards[static_cast<std::size_t>(b)]; });
    std::vector<OrderEntry> seq;
    seq.reserve(static_cast<std::size_t>(n));
    for (int i : order) {
        const double r = problem.rewards[static_cast<std::size_t>(i)];
        table.set(1, i, r);
        seq.push_back({1, i, r});
    }
    return seq;
}

// Full adaptive-greedy order: the last stage's sequence followed by the
// unconsumed tails of earlier stages, longest horizon first.
inline std::vector<OrderEntry> assemble_order(const std::vector<std::vector<OrderEntry>>& sequences, const std::vector<int>& consumed) {
    std::vector<OrderEntry> order;
    const int horizon = static_cast<int>(sequences.size());
    order.insert(order.end(), sequences.back().begin(), sequences.back().end());
    for (int d = horizon - 1; d >= 1; --d) {
        const auto& seq = sequences[static_cast<std::size_t>(d - 1)];
        const auto skip = static_cast<std::size_t>(consumed[static_cast<std::size_t>(d)]);
        order.insert(order.end(), seq.begin() + static_cast<std::ptrdiff_t>(skip), seq.end());
    }
    return order;
}

// Horizon-d winner among states not yet in A_d: largest r/w, lowest id on ties.
inline int best_candidate(int n, const std::vector<char>& in_current, const std::vector<double>& work,
                          const std::vector<double>& reward, double& best_value, double& min_work) {
    int best = -1;
    best_value = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        if (in_current[static_cast<std::size_t>(i)]) continue;
        const double w = work[static_cast<std::size_t>(i)];
        min_work = std::min(min_work, w);
        const double value = reward[static_cast<std::size_t>(i)] / w;
        if (best < 0 || value > best_value) {
            best = i;
            best_value = value;
        }
    }
    return best;
}

// Whether stage d takes its own candidate instead of the next archived pick.
// The archived (d-1, i) is inadmissible until (d, i) is in A_d; with exact
// arithmetic that never happens, so the guard only matters under rounding.
inline bool take_current(double candidate, const StageArchive& prev, std::size_t next, int d, int n,
                         const std::vector<char>& in_current) {
    if (next >= prev.entries.size()) return true;
    const auto& e = prev.entries[next];
    if (candidate >= e.lambda) return true;
    return e.s == d - 1 && e.i < n && !in_current[static_cast<std::size_t>(e.i)];
}

template <class Kernel>
IndexTable run_rag(const StagedProblem& problem, Kernel& kernel, RagStats* stats) {
    const int horizon = problem.horizon;
    IndexTable table(horizon, problem.sizes);
    RagStats local;
    std::vector<std::vector<OrderEntry>> sequences;
    std::vector<int> consumed(static_cast<std::size_t>(horizon), 0);

    const std::vector<double> ones(static_cast<std::size_t>(problem.size(1)), 1.0);
    StageArchive prev;
    prev.width = problem.size(1);
    prev.entries = first_stage(problem, table);
    prev.uniform_work = ones.data();
    prev.uniform_reward = problem.rewards.data();
    sequences.push_back(prev.entries);
    local.stages.push_back({1, problem.size(1), problem.size(1), 0, 1.0});

    for (int d = 2; d <= horizon; ++d) {
        const int n = problem.size(d);
        kernel.begin_stage(n);
        StageArchive cur;
        cur.width = n;
        const std::size_t capacity = static_cast<std::size_t>(n) + prev.entries.size();
        cur.entries.reserve(capacity);
        cur.work.reserve(capacity * static_cast<std::size_t>(n));
        cur.reward.reserve(capacity * static_cast<std::size_t>(n));

        std::vector<double> work(static_cast<std::size_t>(n), 1.0);
        std::vector<double> reward(problem.rewards.begin(), problem.rewards.begin() + n);
        std::vector<char> in_current(static_cast<std::size_t>(n), 0);
        std::size_t next = 0;
        int picked = 0;
        StageStats stage{d, 0, 0, 0, std::numeric_limits<double>::infinity()};

        while (picked < n) {
            double candidate = 0.0;
            const int best = best_candidate(n, in_current, work, reward, candidate, stage.min_work);
            cur.work.insert(cur.work.end(), work.begin(), work.end());
            cur.reward.insert(cur.reward.end(), reward.begin(), reward.end());

            if (take_current(candidate, prev, next, d, n, in_current)) {
                table.set(d, best, candidate);
                in_current[static_cast<std::size_t>(best)] = 1;
                ++picked;
                cur.entries.push_back({d, best, candidate});
            } else {
                const OrderEntry e = prev.entries[next];
                if (e.s == d - 1) {
                    kernel.rank1(e.i, prev.work_at(next)[e.i], prev.reward_at(next)[e.i], work.data(), reward.data(), local.ops);
                    kernel.activate(e.i);
                } else {
                    kernel.refresh(prev.work_at(next + 1), prev.reward_at(next + 1), problem.rewards.data(), work.data(),
                                   reward.data(), local.ops);
                }
                ++next;
                cur.entries.push_back(e);
            }
        }
        stage.steps = static_cast<int>(cur.entries.size());
        stage.horizon_emissions = picked;
        stage.consumed = static_cast<int>(next);
        consumed[static_cast<std::size_t>(d - 1)] = static_cast<int>(next);
        local.stages.push_back(stage);
        local.peak_slots = std::max<std::uint64_t>(local.peak_slots, prev.slots() + cur.slots() + 2ULL * static_cast<std::uint64_t>(n) + kernel.cache_slots());
        sequences.push_back(cur.entries);
        prev = std::move(cur);
    }

    table.order() = assemble_order(sequences, consumed);
    if (stats) {
        local.stage_sequences = std::move(sequences);
        *stats = std::move(local);
    }
    return table;
}

// Block variant. A stage keeps the measure vectors only at the steps that
// follow an older-horizon pick, since those are the only ones the next stage
// reads, and premultiplies them by B in one product at the end of the stage.
// The in-loop refresh of the next stage becomes a vector add.
template <class Kernel>
IndexTable run_block_rag(const StagedProblem& problem, Kernel& kernel, RagStats* stats) {
    const int horizon = problem.horizon;
    IndexTable table(horizon, problem.sizes);
    RagStats local;
    std::vector<std::vector<OrderEntry>> sequences;
    std::vector<int> consumed(static_cast<std::size_t>(horizon), 0);

    std::vector<OrderEntry> prev_entries = first_stage(problem, table);
    sequences.push_back(prev_entries);
    local.stages.push_back({1, problem.size(1), problem.size(1), 0, 1.0});
    // Snapshots w*_{d-1}(i), r*_{d-1}(i) taken when i entered A_{d-1}.
    std::vector<double> prev_work_snap(static_cast<std::size_t>(problem.size(1)), 1.0);
    std::vector<double> prev_reward_snap(problem.rewards.begin(), problem.rewards.begin() + problem.size(1));
    Eigen::MatrixXd prev_hat;               // columns (2k, 2k+1) per kept step
    std::vector<Eigen::Index> prev_hat_col;  // step -> k, or -1

    for (int d = 2; d <= horizon; ++d) {
        const int n = problem.size(d);
        const bool keep = d < horizon;
        kernel.begin_stage(n);
        Eigen::MatrixXd kept(keep ? n : 0, keep ? 2 * static_cast<Eigen::Index>(prev_entries.size()) : 0);
        std::vector<Eigen::Index> kept_step;
        std::vector<OrderEntry> entries;
        entries.reserve(static_cast<std::size_t>(n) + prev_entries.size());

        std::vector<double> work(static_cast<std::size_t>(n), 1.0);
        std::vector<double> reward(problem.rewards.begin(), problem.rewards.begin() + n);
        std::vector<char> in_current(static_cast<std::size_t>(n), 0);
        std::vector<Eigen::Index> entered(static_cast<std::size_t>(n), 0);
        std::vector<double> work_snap(static_cast<std::size_t>(n), 0.0), reward_snap(static_cast<std::size_t>(n), 0.0);
        std::size_t next = 0;
        int picked = 0;
        StageStats stage{d, 0, 0, 0, std::numeric_limits<double>::infinity()};
        StageArchive prev_view;
        prev_view.entries = prev_entries;

        while (picked < n) {
            double candidate = 0.0;
            const int best = best_candidate(n, in_current, work, reward, candidate, stage.min_work);
            const auto step = static_cast<Eigen::Index>(entries.size());
            if (keep && step > 0 && entries.back().s < d) {
                const auto k = static_cast<Eigen::Index>(kept_step.size());
                kept.col(2 * k) = Eigen::Map<const Eigen::VectorXd>(work.data(), n);
                kept.col(2 * k + 1) = Eigen::Map<const Eigen::VectorXd>(reward.data(), n);
                kept_step.push_back(step);
            }

            if (take_current(candidate, prev_view, next, d, n, in_current)) {
                table.set(d, best, candidate);
                in_current[static_cast<std::size_t>(best)] = 1;
                entered[static_cast<std::size_t>(best)] = step;
                work_snap[static_cast<std::size_t>(best)] = work[static_cast<std::size_t>(best)];
                reward_snap[static_cast<std::size_t>(best)] = reward[static_cast<std::size_t>(best)];
                ++picked;
                entries.push_back({d, best, candidate});
            } else {
                const OrderEntry e = prev_entries[next];
                if (e.s == d - 1) {
                    kernel.rank1(e.i, prev_work_snap[static_cast<std::size_t>(e.i)], prev_reward_snap[static_cast<std::size_t>(e.i)],
                                 work.data(), reward.data(), local.ops);
                    kernel.activate(e.i);
                } else {
                    const auto column = 2 * prev_hat_col[next + 1];
                    for (int i = 0; i < n; ++i) {
                        work[static_cast<std::size_t>(i)] = 1.0 + prev_hat(i, column);
                        reward[static_cast<std::size_t>(i)] = problem.rewards[static_cast<std::size_t>(i)] + prev_hat(i, column + 1);
                    }
                    local.ops.refresh_ops += 2ULL * static_cast<std::uint64_t>(n);
                    ++local.ops.refreshes;
                }
                ++next;
                entries.push_back(e);
            }
        }
        const auto steps = static_cast<Eigen::Index>(entries.size());
        stage.steps = static_cast<int>(steps);
        stage.horizon_emissions = picked;
        stage.consumed = static_cast<int>(next);
        consumed[static_cast<std::size_t>(d - 1)] = static_cast<int>(next);
        local.stages.push_back(stage);

        std::uint64_t slots = static_cast<std::uint64_t>(kept.size()) + static_cast<std::uint64_t>(prev_hat.size()) + 4ULL * static_cast<std::uint64_t>(n);
        if (keep) {
            // Rows in entry order: the vectors at step t are supported on the
            // states that entered before t, a prefix of this order.
            std::vector<int> rows(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
            std::sort(rows.begin(), rows.end(), [&](int a, int b) { return entered[static_cast<std::size_t>(a)] < entered[static_cast<std::size_t>(b)]; });
            const auto cols = 2 * static_cast<Eigen::Index>(kept_step.size());
            Eigen::MatrixXd ordered = Eigen::MatrixXd::Zero(n, cols);
            std::vector<Eigen::Index> prefix(static_cast<std::size_t>(cols));
            Eigen::Index support = 0;
            for (std::size_t k = 0; k < kept_step.size(); ++k) {
                while (support < n && entered[static_cast<std::size_t>(rows[static_cast<std::size_t>(support)])] < kept_step[k]) ++support;
                prefix[2 * k] = prefix[2 * k + 1] = support;
                for (Eigen::Index r = 0; r < support; ++r) {
                    ordered(r, 2 * static_cast<Eigen::Index>(k)) = kept(rows[static_cast<std::size_t>(r)], 2 * static_cast<Eigen::Index>(k));
                    ordered(r, 2 * static_cast<Eigen::Index>(k) + 1) = kept(rows[static_cast<std::size_t>(r)], 2 * static_cast<Eigen::Index>(k) + 1);
                }
            }
            Eigen::MatrixXd hat;
            kernel.premultiply(rows, ordered, prefix, problem.size(d + 1), hat, local.ops);
            slots += static_cast<std::uint64_t>(ordered.size() + hat.size());
            prev_hat = std::move(hat);
            prev_hat_col.assign(static_cast<std::size_t>(steps) + 1, -1);
            for (std::size_t k = 0; k < kept_step.size(); ++k) prev_hat_col[static_cast<std::size_t>(kept_step[k])] = static_cast<Eigen::Index>(k);
        }
        local.peak_slots = std::max(local.peak_slots, slots);
        sequences.push_back(entries);
        prev_entries = std::move(entries);
        prev_work_snap = std::move(work_snap);
        prev_reward_snap = std::move(reward_snap);
    }

    table.order() = assemble_order(sequences, consumed);
    if (stats) {
        local.stage_sequences = std::move(sequences);
        *stats = std::move(local);
    }
    return table;
}

}  // namespace apindex::detail
