#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace apindex {

struct ScalingRecord {
    std::string algo;
    int n = 0;             // state count (relevant pair count for rag_i0)
    int horizon = 0;
    std::uint64_t grid_size = 0;
    std::uint64_t seed = 0;
    double beta = 1.0;
    std::uint64_t ops = 0;
    std::uint64_t slots = 0;       // measured peak auxiliary slots
    double predicted_slots = 0.0;  // reference closed form
    double wall_ms = 0.0;
    double max_diff_vs_rag = -1.0; // block_rag / rag_sparse cells; -1 when not compared
};

struct SweepConfig {
    // rag, block_rag, rag_sparse, calibration, rag_i0
    std::vector<std::string> algorithms;
    std::vector<int> sizes;
    std::vector<int> horizons;
    std::vector<std::uint64_t> seeds{1};
    double beta = 1.0;
    int digits = 3;
    bool scalar_calibration = true;
    int threads = 1;
};

const std::vector<std::string>& known_algorithms();

// One record per (algorithm, size, horizon, seed). rag_i0 ignores sizes and
// runs the Beta-Bernoulli family from (1,1).
std::vector<ScalingRecord> run_scaling_sweep(const SweepConfig& config);

class RankDeficient : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PolyFit {
    int order = 0;
    std::vector<double> coeffs;  // ascending powers of x
    double rmse = 0.0;
    double lead_t = NAN;  // t statistic of the leading coefficient; NaN without residual degrees of freedom

    double operator()(double x) const;
};

// Least squares on monomials up to `order`, computed on centered and scaled
// abscissae with a column-pivoted QR.
PolyFit ls_polyfit(const std::vector<double>& xs, const std::vector<double>& ys, int order);

struct OrderSelection {
    std::vector<PolyFit> fits;
    std::vector<bool> admissible;
    int best_order = -1;
};

// Lowest-RMSE order among fits whose leading coefficient is positive with a
// t statistic of at least `min_t`.
OrderSelection select_fit_order(const std::vector<double>& xs, const std::vector<double>& ys, const std::vector<int>& orders,
                                double min_t = 3.0);

// Slot counts of the reference implementations: calibration 2Ln + L,
// rag/block_rag/rag_sparse (4T+1)n² + 5n, rag_i0 T⁵/3 + 2T⁴ + (13/3)T³ +
// (15/2)T² + (65/6)T + 6, calibration_i0 L(T+1)(T+2) + L.
double memory_slots(const std::string& algorithm, std::uint64_t n, std::uint64_t horizon, std::uint64_t grid_size);

}  // namespace apindex
