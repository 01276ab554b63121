#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "apindex/index_table.hpp"
#include "apindex/model.hpp"

namespace apindex {

// h_d = (1 - β^d) / (1 - β), or d when β = 1. Element d-1 holds h_d.
std::vector<double> h_sequence(double beta, int horizon);

struct LambdaGrid {
    std::vector<double> values;  // strictly increasing

    std::size_t size() const { return values.size(); }
    double spacing() const;

    static LambdaGrid uniform(double lo, double hi, std::size_t points);
    // L = 10^digits + 1 points over [min R, max R].
    static LambdaGrid significant_digits(const BanditModel& model, int digits);
};

enum class ArmAction : std::uint8_t { Active, Passive, Indifferent };

struct OneArmedSolution {
    int horizon = 0;
    int n = 0;
    double lambda = 0.0;
    std::vector<std::vector<double>> values;        // values[d-1][i] = v_d(i; λ)
    std::vector<std::vector<ArmAction>> actions;    // same layout

    double value(int d, int i) const { return values[static_cast<std::size_t>(d - 1)][static_cast<std::size_t>(i)]; }
    ArmAction action(int d, int i) const { return actions[static_cast<std::size_t>(d - 1)][static_cast<std::size_t>(i)]; }
};

// Backward induction for the one-armed problem against a standard arm paying λ.
// `ops`, when given, receives the arithmetic-operation count of the scalar path.
OneArmedSolution solve_one_armed(const BanditModel& model, double lambda, int horizon, std::uint64_t* ops = nullptr);

class GridDoesNotCover : public std::runtime_error {
public:
    GridDoesNotCover(int d, int i);
    int horizon() const { return d_; }
    int state() const { return i_; }

private:
    int d_;
    int i_;
};

enum class CalibrationPath { Block, Scalar };

struct CalibrationOptions {
    double eps = 1e-9;
    CalibrationPath path = CalibrationPath::Block;
    int threads = 1;
};

struct CalibrationStats {
    std::uint64_t ops = 0;
    std::uint64_t block_products = 0;   // block path only
    std::uint64_t peak_slots = 0;
};

// Approximate index λ̂(d, i): the smallest grid value at which retiring is
// optimal. Values are always grid points, except λ̂(1, i) = R(i).
IndexTable calibrate_index(const BanditModel& model, const LambdaGrid& grid, int horizon,
                           const CalibrationOptions& options = {}, CalibrationStats* stats = nullptr);

// 2(T−1)L[n(n+1)+1] + Ln
std::uint64_t predicted_calibration_ops(std::uint64_t n, std::uint64_t horizon, std::uint64_t grid_size);

}  // namespace apindex
