#include "apindex/calibration.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <string>

namespace apindex {

namespace {

constexpr double kIndifferenceTolerance = 1e-12;
constexpr Eigen::Index kChunkColumns = 512;

bool retire_is_optimal(double value, double lambda_h, double eps) {
    return value <= lambda_h + eps * std::max(1.0, std::abs(lambda_h));
}

std::pair<double, double> reward_range(const BanditModel& model) {
    const auto [lo, hi] = std::minmax_element(model.rewards.begin(), model.rewards.end());
    return {*lo, *hi};
}

Eigen::MatrixXd scaled_transitions(const BanditModel& model) {
    Eigen::MatrixXd b(model.n, model.n);
    for (int i = 0; i < model.n; ++i)
        for (int j = 0; j < model.n; ++j) b(i, j) = model.beta * model.p(i, j);
    return b;
}

// first_hit[d-1][i] = smallest column (global index) in [begin, end) where
// retiring is optimal, or `end_sentinel` if none.
using HitTable = std::vector<std::vector<std::size_t>>;

HitTable block_chunk(const Eigen::MatrixXd& b, const Eigen::VectorXd& rewards, const std::vector<double>& grid,
                     const std::vector<double>& h, std::size_t begin, std::size_t end, double eps,
                     std::size_t end_sentinel, std::uint64_t& ops) {
    const Eigen::Index n = rewards.size();
    const Eigen::Index cols = static_cast<Eigen::Index>(end - begin);
    const int horizon = static_cast<int>(h.size());
    Eigen::Map<const Eigen::RowVectorXd> lambdas(grid.data() + begin, cols);

    Eigen::MatrixXd v(n, cols);
    Eigen::MatrixXd next(n, cols);
    for (Eigen::Index l = 0; l < cols; ++l)
        for (Eigen::Index i = 0; i < n; ++i) v(i, l) = std::max(lambdas(l), rewards(i));

    HitTable hits(static_cast<std::size_t>(horizon), std::vector<std::size_t>(static_cast<std::size_t>(n), end_sentinel));
    // Same accounting as the scalar path: per column n at d = 1, then 2 + n(2n + 2) per stage.
    const auto un = static_cast<std::uint64_t>(n);
    const auto ucols = static_cast<std::uint64_t>(cols);
    ops += ucols * un + static_cast<std::uint64_t>(horizon - 1) * ucols * (2 + un * (2 * un + 2));
    for (int d = 2; d <= horizon; ++d) {
        next.noalias() = b * v;
        const double hd = h[static_cast<std::size_t>(d - 1)];
        for (Eigen::Index l = 0; l < cols; ++l)
            for (Eigen::Index i = 0; i < n; ++i) next(i, l) = std::max(hd * lambdas(l), rewards(i) + next(i, l));
        v.swap(next);

        auto& row = hits[static_cast<std::size_t>(d - 1)];
        for (Eigen::Index i = 0; i < n; ++i) {
            // v_d(i; λ) − λ h_d is nonincreasing in λ, so the predicate is monotone.
            auto holds = [&](Eigen::Index l) { return retire_is_optimal(v(i, l), hd * lambdas(l), eps); };
            if (!holds(cols - 1)) continue;
            Eigen::Index lo = 0, hi = cols - 1;
            while (lo < hi) {
                const Eigen::Index mid = lo + (hi - lo) / 2;
                if (holds(mid)) hi = mid;
                else lo = mid + 1;
            }
            row[static_cast<std::size_t>(i)] = begin + static_cast<std::size_t>(lo);
        }
    }
    return hits;
}

}  // namespace

std::vector<double> h_sequence(double beta, int horizon) {
    if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("h_sequence: discount factor outside (0, 1]");
    if (horizon < 1) throw std::invalid_argument("h_sequence: horizon must be at least 1");
    std::vector<double> h(static_cast<std::size_t>(horizon));
    h[0] = 1.0;
    for (int d = 2; d <= horizon; ++d)
        h[static_cast<std::size_t>(d - 1)] = beta == 1.0 ? static_cast<double>(d) : 1.0 + beta * h[static_cast<std::size_t>(d - 2)];
    return h;
}

double LambdaGrid::spacing() const {
    if (values.size() < 2) return 0.0;
    return (values.back() - values.front()) / static_cast<double>(values.size() - 1);
}

LambdaGrid LambdaGrid::uniform(double lo, double hi, std::size_t points) {
    if (points < 2) throw std::invalid_argument("LambdaGrid: need at least two points");
    if (!(lo < hi)) throw std::invalid_argument("LambdaGrid: empty interval");
    LambdaGrid grid;
    grid.values.resize(points);
    const double step = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t l = 0; l < points; ++l) grid.values[l] = lo + step * static_cast<double>(l);
    grid.values.back() = hi;
    return grid;
}

LambdaGrid LambdaGrid::significant_digits(const BanditModel& model, int digits) {
    if (digits < 1) throw std::invalid_argument("LambdaGrid: at least one significant digit is required (L >= 2)");
    const auto [lo, hi] = reward_range(model);
    std::size_t points = 1;
    for (int k = 0; k < digits; ++k) points *= 10;
    if (lo == hi) return LambdaGrid{{lo}};
    return uniform(lo, hi, points + 1);
}

OneArmedSolution solve_one_armed(const BanditModel& model, double lambda, int horizon, std::uint64_t* ops) {
    const auto h = h_sequence(model.beta, horizon);
    const int n = model.n;
    OneArmedSolution sol;
    sol.horizon = horizon;
    sol.n = n;
    sol.lambda = lambda;
    sol.values.assign(static_cast<std::size_t>(horizon), std::vector<double>(static_cast<std::size_t>(n)));
    sol.actions.assign(static_cast<std::size_t>(horizon), std::vector<ArmAction>(static_cast<std::size_t>(n)));
    std::uint64_t count = 0;

    auto decide = [](double passive, double active, double scale) {
        if (std::abs(passive - active) <= kIndifferenceTolerance * std::max(1.0, std::abs(scale))) return ArmAction::Indifferent;
        return active > passive ? ArmAction::Active : ArmAction::Passive;
    };

    for (int i = 0; i < n; ++i) {
        sol.values[0][i] = std::max(lambda, model.rewards[i]);
        sol.actions[0][i] = decide(lambda, model.rewards[i], lambda);
        count += 1;
    }
    for (int d = 2; d <= horizon; ++d) {
        // λ h_d, counted as the two operations of λ h_d = λ + β (λ h_{d-1})
        count += 2;
        const double passive = lambda * h[static_cast<std::size_t>(d - 1)];
        const auto& prev = sol.values[static_cast<std::size_t>(d - 2)];
        auto& cur = sol.values[static_cast<std::size_t>(d - 1)];
        for (int i = 0; i < n; ++i) {
            double acc = model.p(i, 0) * prev[0];
            for (int j = 1; j < n; ++j) acc += model.p(i, j) * prev[static_cast<std::size_t>(j)];
            const double active = model.rewards[i] + model.beta * acc;
            count += static_cast<std::uint64_t>(2 * n - 1) + 3;
            cur[i] = std::max(passive, active);
            sol.actions[static_cast<std::size_t>(d - 1)][i] = decide(passive, active, passive);
        }
    }
    if (ops) *ops += count;
    return sol;
}

GridDoesNotCover::GridDoesNotCover(int d, int i)
    : std::runtime_error("lambda grid does not reach the index at (d=" + std::to_string(d) + ", i=" + std::to_string(i) + ")"),
      d_(d),
      i_(i) {}

IndexTable calibrate_index(const BanditModel& model, const LambdaGrid& grid, int horizon,
                           const CalibrationOptions& options, CalibrationStats* stats) {
    validate_model(model);
    const int n = model.n;
    IndexTable table(horizon, std::vector<int>(static_cast<std::size_t>(horizon), n));
    for (int i = 0; i < n; ++i) table.set(1, i, model.rewards[i]);

    const auto [rmin, rmax] = reward_range(model);
    if (rmin == rmax) {
        for (int d = 2; d <= horizon; ++d)
            for (int i = 0; i < n; ++i) table.set(d, i, rmin);
        return table;
    }
    if (grid.size() < 2 || !std::is_sorted(grid.values.begin(), grid.values.end()))
        throw std::invalid_argument("calibrate_index: grid needs at least two increasing points");

    const auto h = h_sequence(model.beta, horizon);
    const std::size_t points = grid.size();
    HitTable hits(static_cast<std::size_t>(horizon), std::vector<std::size_t>(static_cast<std::size_t>(n), points));
    CalibrationStats local;

    if (options.path == CalibrationPath::Scalar) {
        for (std::size_t l = 0; l < points; ++l) {
            const auto sol = solve_one_armed(model, grid.values[l], horizon, &local.ops);
            for (int d = 2; d <= horizon; ++d)
                for (int i = 0; i < n; ++i) {
                    auto& hit = hits[static_cast<std::size_t>(d - 1)][static_cast<std::size_t>(i)];
                    if (hit == points && retire_is_optimal(sol.value(d, i), grid.values[l] * h[static_cast<std::size_t>(d - 1)], options.eps))
                        hit = l;
                }
        }
        local.peak_slots = static_cast<std::uint64_t>(horizon) * static_cast<std::uint64_t>(n);
    } else {
        const Eigen::MatrixXd b = scaled_transitions(model);
        const Eigen::VectorXd rewards = Eigen::Map<const Eigen::VectorXd>(model.rewards.data(), n);
        std::vector<std::pair<std::size_t, std::size_t>> chunks;
        for (std::size_t begin = 0; begin < points; begin += kChunkColumns)
            chunks.emplace_back(begin, std::min(points, begin + static_cast<std::size_t>(kChunkColumns)));

        std::vector<HitTable> chunk_hits(chunks.size());
        std::vector<std::uint64_t> chunk_ops(chunks.size(), 0);
        const std::size_t workers = static_cast<std::size_t>(std::max(1, options.threads));
        auto run_range = [&](std::size_t first) {
            for (std::size_t c = first; c < chunks.size(); c += workers)
                chunk_hits[c] = block_chunk(b, rewards, grid.values, h, chunks[c].first, chunks[c].second, options.eps, points, chunk_ops[c]);
        };
        if (workers == 1) {
            run_range(0);
        } else {
            std::vector<std::future<void>> jobs;
            for (std::size_t w = 0; w < workers; ++w) jobs.push_back(std::async(std::launch::async, run_range, w));
            for (auto& job : jobs) job.get();
        }
        for (const auto& part : chunk_hits)
            for (int d = 2; d <= horizon; ++d)
                for (int i = 0; i < n; ++i) {
                    auto& hit = hits[static_cast<std::size_t>(d - 1)][static_cast<std::size_t>(i)];
                    hit = std::min(hit, part[static_cast<std::size_t>(d - 1)][static_cast<std::size_t>(i)]);
                }
        for (auto c : chunk_ops) local.ops += c;
        local.block_products = static_cast<std::uint64_t>(chunks.size()) * static_cast<std::uint64_t>(horizon - 1);
        const std::uint64_t chunk_cols = std::min<std::uint64_t>(points, kChunkColumns);
        local.peak_slots = 2 * chunk_cols * static_cast<std::uint64_t>(n) * std::min<std::uint64_t>(workers, chunks.size());
    }

    for (int d = 2; d <= horizon; ++d)
        for (int i = 0; i < n; ++i) {
            const std::size_t hit = hits[static_cast<std::size_t>(d - 1)][static_cast<std::size_t>(i)];
            if (hit == points) throw GridDoesNotCover(d, i);
            table.set(d, i, grid.values[hit]);
        }
    if (stats) *stats = local;
    return table;
}

std::uint64_t predicted_calibration_ops(std::uint64_t n, std::uint64_t horizon, std::uint64_t grid_size) {
    const std::uint64_t stages = horizon > 0 ? horizon - 1 : 0;
    return 2 * stages * grid_size * (n * (n + 1) + 1) + grid_size * n;
}

}  // namespace apindex
