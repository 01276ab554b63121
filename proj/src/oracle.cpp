#include "apindex/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "apindex/calibration.hpp"

namespace apindex {

namespace {

void check_pair(const BanditModel& model, int d, int i) {
    if (d < 1) throw std::invalid_argument("horizon must be at least 1");
    if (i < 0 || i >= model.n) throw std::out_of_range("state outside the model");
}

void check_budget(int n, int d, std::uint64_t budget) {
    const auto count = profile_count(n, d);
    if (count > budget) throw BudgetExceeded(count, budget);
}

// Advance an odometer over {1..d+1}^n, last state fastest; false after the last profile.
bool next_profile(EntryProfile& entry, int d) {
    for (int k = static_cast<int>(entry.size()) - 1; k >= 0; --k) {
        if (entry[static_cast<std::size_t>(k)] <= d) {
            ++entry[static_cast<std::size_t>(k)];
            return true;
        }
        entry[static_cast<std::size_t>(k)] = 1;
    }
    return false;
}

// Measures at horizon d for every starting state, each forced active at d.
template <class Scalar>
void profile_measures(const std::vector<Scalar>& p, const std::vector<Scalar>& rewards, const Scalar& beta, int n, int d,
                      const EntryProfile& entry, std::vector<Scalar>& reward, std::vector<Scalar>& work) {
    reward = rewards;
    work.assign(static_cast<std::size_t>(n), Scalar(1));
    std::vector<Scalar> next_reward(static_cast<std::size_t>(n)), next_work(static_cast<std::size_t>(n));
    for (int s = 2; s <= d; ++s) {
        for (int a = 0; a < n; ++a) {
            Scalar sr(0), sw(0);
            for (int b = 0; b < n; ++b) {
                if (entry[static_cast<std::size_t>(b)] > s - 1) continue;
                const Scalar& q = p[static_cast<std::size_t>(a) * static_cast<std::size_t>(n) + static_cast<std::size_t>(b)];
                sr += q * reward[static_cast<std::size_t>(b)];
                sw += q * work[static_cast<std::size_t>(b)];
            }
            next_reward[static_cast<std::size_t>(a)] = rewards[static_cast<std::size_t>(a)] + beta * sr;
            next_work[static_cast<std::size_t>(a)] = Scalar(1) + beta * sw;
        }
        reward.swap(next_reward);
        work.swap(next_work);
    }
}

bool is_tie(double value, double best) {
    return value >= best - 1e-12 * std::max(1.0, std::abs(best));
}

}  // namespace

BudgetExceeded::BudgetExceeded(std::uint64_t required, std::uint64_t budget)
    : std::runtime_error("enumeration needs " + std::to_string(required) + " profiles, budget is " + std::to_string(budget)),
      required_(required) {}

std::uint64_t profile_count(int n, int d) {
    std::uint64_t count = 1;
    const auto base = static_cast<std::uint64_t>(d) + 1;
    for (int k = 0; k < n; ++k) {
        if (count > std::numeric_limits<std::uint64_t>::max() / base) return std::numeric_limits<std::uint64_t>::max();
        count *= base;
    }
    return count;
}

ProfileValue evaluate_profile(const BanditModel& model, int d, int i, const EntryProfile& entry) {
    check_pair(model, d, i);
    if (entry.size() != static_cast<std::size_t>(model.n)) throw std::invalid_argument("profile length differs from n");
    std::vector<double> reward, work;
    profile_measures(model.transitions, model.rewards, model.beta, model.n, d, entry, reward, work);
    ProfileValue out;
    out.entry = entry;
    out.reward = reward[static_cast<std::size_t>(i)];
    out.work = work[static_cast<std::size_t>(i)];
    out.ratio = out.reward / out.work;
    return out;
}

double oracle_index_enumerate(const BanditModel& model, int d, int i, std::uint64_t budget) {
    return oracle_optimal_stopping_time(model, d, i, budget).ratio;
}

IndexTable oracle_index_table(const BanditModel& model, int horizon, std::uint64_t budget) {
    validate_model(model);
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
    check_budget(model.n, horizon, budget);
    const int n = model.n;
    IndexTable table(horizon, std::vector<int>(static_cast<std::size_t>(horizon), n));
    std::vector<double> reward, work;
    for (int d = 1; d <= horizon; ++d) {
        std::vector<double> best(static_cast<std::size_t>(n), -std::numeric_limits<double>::infinity());
        EntryProfile entry(static_cast<std::size_t>(n), 1);
        do {
            profile_measures(model.transitions, model.rewards, model.beta, n, d, entry, reward, work);
            for (int i = 0; i < n; ++i)
                best[static_cast<std::size_t>(i)] = std::max(best[static_cast<std::size_t>(i)], reward[static_cast<std::size_t>(i)] / work[static_cast<std::size_t>(i)]);
        } while (next_profile(entry, d));
        for (int i = 0; i < n; ++i) table.set(d, i, best[static_cast<std::size_t>(i)]);
    }
    return table;
}

double oracle_index_bisect(const BanditModel& model, int d, int i, double tol) {
    validate_model(model);
    check_pair(model, d, i);
    if (!(tol > 0.0)) throw std::invalid_argument("bisection tolerance must be positive");
    double lo = *std::min_element(model.rewards.begin(), model.rewards.end());
    double hi = *std::max_element(model.rewards.begin(), model.rewards.end());
    if (lo == hi) return lo;
    const double h = h_sequence(model.beta, d)[static_cast<std::size_t>(d - 1)];
    auto retire = [&](double lambda) {
        const double v = solve_one_armed(model, lambda, d).value(d, i);
        const double lh = lambda * h;
        return v <= lh + 1e-13 * std::max(1.0, std::abs(lh));
    };
    while (hi - lo >= tol) {
        const double mid = 0.5 * (lo + hi);
        if (retire(mid)) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

ProfileValue oracle_optimal_stopping_time(const BanditModel& model, int d, int i, std::uint64_t budget) {
    validate_model(model);
    check_pair(model, d, i);
    check_budget(model.n, d, budget);
    EntryProfile entry(static_cast<std::size_t>(model.n), 1);
    std::vector<ProfileValue> values;
    double best = -std::numeric_limits<double>::infinity();
    do {
        values.push_back(evaluate_profile(model, d, i, entry));
        best = std::max(best, values.back().ratio);
    } while (next_profile(entry, d));
    for (auto& v : values)
        if (is_tie(v.ratio, best)) {
            v.ratio = best;
            return v;
        }
    throw std::logic_error("no maximizing profile");
}

EntryProfile threshold_profile(const IndexTable& table, int d, double level) {
    const int n = table.size(1);
    EntryProfile entry(static_cast<std::size_t>(n), d + 1);
    for (int j = 0; j < n; ++j)
        for (int s = 1; s < d; ++s)
            if (table.at(s, j) >= level) {
                entry[static_cast<std::size_t>(j)] = s;
                break;
            }
    return entry;
}

ThresholdCheck check_threshold_rule(const BanditModel& model, const IndexTable& table, int d, int i, double tol) {
    const auto best = oracle_optimal_stopping_time(model, d, i);
    const double level = table.at(d, i);
    ThresholdCheck out;
    const auto rule = evaluate_profile(model, d, i, threshold_profile(table, d, level - tol));
    out.value_matches = std::abs(rule.ratio - best.ratio) <= tol;

    // Walk the argmax profile forward from (d, i) and compare decisions where
    // the index is clearly above or below the level.
    std::vector<char> reached(static_cast<std::size_t>(model.n), 0);
    for (int j = 0; j < model.n; ++j) reached[static_cast<std::size_t>(j)] = model.p(i, j) > 0.0;
    for (int s = d - 1; s >= 1; --s) {
        std::vector<char> next(static_cast<std::size_t>(model.n), 0);
        for (int j = 0; j < model.n; ++j) {
            if (!reached[static_cast<std::size_t>(j)]) continue;
            const bool continues = best.entry[static_cast<std::size_t>(j)] <= s;
            const double value = table.at(s, j);
            if ((value > level + tol && !continues) || (value < level - tol && continues)) ++out.decision_mismatches;
            if (continues)
                for (int k = 0; k < model.n; ++k)
                    if (model.p(j, k) > 0.0) next[static_cast<std::size_t>(k)] = 1;
        }
        reached.swap(next);
    }
    return out;
}

double discrete_threshold_maximum(const BanditModel& model, const IndexTable& table, int d, int i) {
    check_pair(model, d, i);
    double best = model.rewards[static_cast<std::size_t>(i)];  // λ = +∞: stop after the first play
    for (int s = 1; s < d; ++s)
        for (int j = 0; j < model.n; ++j)
            best = std::max(best, evaluate_profile(model, d, i, threshold_profile(table, d, table.at(s, j))).ratio);
    return best;
}

RationalModel RationalModel::from(const BanditModel& model) {
    RationalModel out;
    out.n = model.n;
    out.transitions.assign(model.transitions.begin(), model.transitions.end());
    out.rewards.assign(model.rewards.begin(), model.rewards.end());
    out.beta = Rational(model.beta);
    return out;
}

Rational oracle_index_exact(const RationalModel& model, int d, int i, std::uint64_t budget) {
    if (d < 1) throw std::invalid_argument("horizon must be at least 1");
    if (i < 0 || i >= model.n) throw std::out_of_range("state outside the model");
    if (model.transitions.size() != static_cast<std::size_t>(model.n) * static_cast<std::size_t>(model.n) ||
        model.rewards.size() != static_cast<std::size_t>(model.n))
        throw std::invalid_argument("rational model has inconsistent sizes");
    check_budget(model.n, d, budget);
    std::vector<Rational> reward, work;
    EntryProfile entry(static_cast<std::size_t>(model.n), 1);
    bool first = true;
    Rational best;
    do {
        profile_measures(model.transitions, model.rewards, model.beta, model.n, d, entry, reward, work);
        const Rational ratio = reward[static_cast<std::size_t>(i)] / work[static_cast<std::size_t>(i)];
        if (first || ratio > best) best = ratio;
        first = false;
    } while (next_profile(entry, d));
    return best;
}

Rational oracle_index_exact(const BanditModel& model, int d, int i, std::uint64_t budget) {
    validate_model(model);
    return oracle_index_exact(RationalModel::from(model), d, i, budget);
}

}  // namespace apindex
