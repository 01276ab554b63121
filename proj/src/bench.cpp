#include "apindex/bench.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>

#include "apindex/calibration.hpp"
#include "apindex/countable.hpp"
#include "apindex/rag.hpp"

namespace apindex {

namespace {

struct Cell {
    std::string algo;
    int n;
    int horizon;
    std::uint64_t seed;
};

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

ScalingRecord run_cell(const Cell& cell, const SweepConfig& config) {
    ScalingRecord rec;
    rec.algo = cell.algo;
    rec.n = cell.n;
    rec.horizon = cell.horizon;
    rec.seed = cell.seed;
    rec.beta = config.beta;
    RagStats stats;

    if (cell.algo == "rag_i0") {
        const auto spec = beta_bernoulli_spec(config.beta);
        const auto start = std::chrono::steady_clock::now();
        const auto table = rag_from_initial(spec, {1, 1}, cell.horizon, &stats);
        rec.wall_ms = elapsed_ms(start);
        rec.n = static_cast<int>(table.value_count());
        rec.ops = stats.ops.total();
        rec.slots = stats.peak_slots;
        rec.predicted_slots = memory_slots("rag_i0", 0, static_cast<std::uint64_t>(cell.horizon), 0);
        return rec;
    }
    if (cell.algo == "rag_sparse") {
        const auto model = random_birth_death_instance(cell.n, cell.seed, config.beta);
        const auto start = std::chrono::steady_clock::now();
        const auto table = rag_full_sparse(model, cell.horizon, &stats);
        rec.wall_ms = elapsed_ms(start);
        rec.ops = stats.ops.total();
        rec.slots = stats.peak_slots;
        rec.predicted_slots = memory_slots("rag_sparse", static_cast<std::uint64_t>(cell.n), static_cast<std::uint64_t>(cell.horizon), 0);
        rec.max_diff_vs_rag = max_abs_difference(table, rag_full(to_dense(model), cell.horizon));
        return rec;
    }

    const auto model = random_dense_instance(cell.n, cell.seed, config.beta);
    if (cell.algo == "calibration") {
        const auto grid = LambdaGrid::significant_digits(model, config.digits);
        CalibrationOptions options;
        options.path = config.scalar_calibration ? CalibrationPath::Scalar : CalibrationPath::Block;
        CalibrationStats cstats;
        const auto start = std::chrono::steady_clock::now();
        calibrate_index(model, grid, cell.horizon, options, &cstats);
        rec.wall_ms = elapsed_ms(start);
        rec.grid_size = grid.size();
        rec.ops = cstats.ops;
        rec.slots = cstats.peak_slots;
        rec.predicted_slots = memory_slots("calibration", static_cast<std::uint64_t>(cell.n), static_cast<std::uint64_t>(cell.horizon), grid.size());
        return rec;
    }
    const bool block = cell.algo == "block_rag";
    const auto start = std::chrono::steady_clock::now();
    const auto table = block ? block_rag_full(model, cell.horizon, &stats) : rag_full(model, cell.horizon, &stats);
    rec.wall_ms = elapsed_ms(start);
    rec.ops = stats.ops.total();
    rec.slots = stats.peak_slots;
    rec.predicted_slots = memory_slots(cell.algo, static_cast<std::uint64_t>(cell.n), static_cast<std::uint64_t>(cell.horizon), 0);
    if (block) rec.max_diff_vs_rag = max_abs_difference(table, rag_full(model, cell.horizon));
    return rec;
}

}  // namespace

const std::vector<std::string>& known_algorithms() {
    static const std::vector<std::string> names{"rag", "block_rag", "rag_sparse", "calibration", "rag_i0"};
    return names;
}

std::vector<ScalingRecord> run_scaling_sweep(const SweepConfig& config) {
    for (const auto& a : config.algorithms)
        if (std::find(known_algorithms().begin(), known_algorithms().end(), a) == known_algorithms().end())
            throw std::invalid_argument("unknown algorithm '" + a + "'");
    if (config.horizons.empty()) throw std::invalid_argument("sweep needs at least one horizon");
    for (int t : config.horizons)
        if (t < 1) throw std::invalid_argument("horizons must be at least 1");
    for (int n : config.sizes)
        if (n < 1) throw std::invalid_argument("sizes must be at least 1");

    std::vector<Cell> cells;
    for (const auto& algo : config.algorithms) {
        const std::vector<int> sizes = algo == "rag_i0" ? std::vector<int>{0} : config.sizes;
        if (sizes.empty()) throw std::invalid_argument("sweep needs at least one size");
        for (int n : sizes)
            for (int t : config.horizons)
                for (auto seed : config.seeds) cells.push_back({algo, n, t, seed});
    }

    std::vector<ScalingRecord> records(cells.size());
    const std::size_t workers = static_cast<std::size_t>(std::max(1, config.threads));
    auto run_range = [&](std::size_t first) {
        for (std::size_t c = first; c < cells.size(); c += workers) records[c] = run_cell(cells[c], config);
    };
    if (workers == 1) {
        run_range(0);
    } else {
        std::vector<std::future<void>> jobs;
        for (std::size_t w = 0; w < workers; ++w) jobs.push_back(std::async(std::launch::async, run_range, w));
        for (auto& job : jobs) job.get();
    }
    return records;
}

double PolyFit::operator()(double x) const {
    double y = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 0;) y = y * x + coeffs[k];
    return y;
}

PolyFit ls_polyfit(const std::vector<double>& xs, const std::vector<double>& ys, int order) {
    if (order < 0) throw std::invalid_argument("fit order must be nonnegative");
    if (xs.size() != ys.size()) throw std::invalid_argument("xs and ys differ in length");
    if (xs.size() <= static_cast<std::size_t>(order)) throw RankDeficient("need more points than the fit order");
    const auto m = static_cast<Eigen::Index>(xs.size());
    const double lo = *std::min_element(xs.begin(), xs.end());
    const double hi = *std::max_element(xs.begin(), xs.end());
    const double center = 0.5 * (lo + hi);
    const double scale = hi > lo ? 0.5 * (hi - lo) : 1.0;

    Eigen::MatrixXd a(m, order + 1);
    Eigen::VectorXd b(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const double t = (xs[static_cast<std::size_t>(r)] - center) / scale;
        double p = 1.0;
        for (int k = 0; k <= order; ++k) {
            a(r, k) = p;
            p *= t;
        }
        b(r) = ys[static_cast<std::size_t>(r)];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < order + 1) throw RankDeficient("design matrix is rank deficient (too few distinct abscissae)");
    const Eigen::VectorXd c = qr.solve(b);

    PolyFit fit;
    fit.order = order;
    const Eigen::VectorXd residual = a * c - b;
    fit.rmse = std::sqrt(residual.squaredNorm() / static_cast<double>(m));
    const auto dof = m - order - 1;
    if (dof > 0) {
        Eigen::VectorXd unit = Eigen::VectorXd::Zero(order + 1);
        unit(order) = 1.0;
        const double var = (a.transpose() * a).ldlt().solve(unit)(order) * residual.squaredNorm() / static_cast<double>(dof);
        fit.lead_t = var > 0.0 ? c(order) / std::sqrt(var) : std::copysign(INFINITY, c(order));
    }

    // Σ c_k ((x - center)/scale)^k expanded in powers of x.
    fit.coeffs.assign(static_cast<std::size_t>(order) + 1, 0.0);
    for (int k = 0; k <= order; ++k) {
        const double ck = c(k) / std::pow(scale, k);
        double binom = 1.0;
        for (int j = 0; j <= k; ++j) {
            fit.coeffs[static_cast<std::size_t>(j)] += ck * binom * std::pow(-center, k - j);
            binom = binom * static_cast<double>(k - j) / static_cast<double>(j + 1);
        }
    }
    return fit;
}

OrderSelection select_fit_order(const std::vector<double>& xs, const std::vector<double>& ys, const std::vector<int>& orders,
                                double min_t) {
    OrderSelection out;
    double best = 0.0;
    for (int order : orders) {
        out.fits.push_back(ls_polyfit(xs, ys, order));
        const auto& f = out.fits.back();
        const bool ok = f.coeffs.back() > 0.0 && f.lead_t >= min_t;
        out.admissible.push_back(ok);
        if (ok && (out.best_order < 0 || f.rmse < best)) {
            out.best_order = order;
            best = f.rmse;
        }
    }
    return out;
}

double memory_slots(const std::string& algorithm, std::uint64_t n, std::uint64_t horizon, std::uint64_t grid_size) {
    const double N = static_cast<double>(n), T = static_cast<double>(horizon), L = static_cast<double>(grid_size);
    if (algorithm == "calibration") return 2.0 * L * N + L;
    if (algorithm == "rag" || algorithm == "block_rag" || algorithm == "rag_sparse") return (4.0 * T + 1.0) * N * N + 5.0 * N;
    if (algorithm == "rag_i0") return (2.0 * std::pow(T, 5) + 12.0 * std::pow(T, 4) + 26.0 * std::pow(T, 3) + 45.0 * T * T + 65.0 * T + 36.0) / 6.0;
    if (algorithm == "calibration_i0") return L * (T + 1.0) * (T + 2.0) + L;
    throw std::invalid_argument("unknown algorithm '" + algorithm + "'");
}

}  // namespace apindex
