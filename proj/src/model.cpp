#include "apindex/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>

namespace apindex {

namespace {

std::string join_messages(const std::vector<ModelViolation>& violations) {
    std::ostringstream out;
    out << "invalid model (" << violations.size() << " violation" << (violations.size() == 1 ? "" : "s") << ")";
    for (const auto& v : violations) out << "\n  " << v.message;
    return out.str();
}

void check_common(int n, std::size_t reward_count, double beta, const std::vector<double>& rewards,
                  std::vector<ModelViolation>& out) {
    if (n < 1) out.push_back({ViolationKind::BadShape, -1, "state count must be at least 1"});
    if (reward_count != static_cast<std::size_t>(std::max(n, 0)))
        out.push_back({ViolationKind::BadShape, -1, "reward vector length does not match state count"});
    if (!(beta > 0.0 && beta <= 1.0)) {
        std::ostringstream msg;
        msg << "discount factor " << beta << " outside (0, 1]";
        out.push_back({ViolationKind::BadDiscount, -1, msg.str()});
    }
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        if (!std::isfinite(rewards[i]))
            out.push_back({ViolationKind::NonFiniteReward, static_cast<int>(i), "reward of state " + std::to_string(i) + " is not finite"});
    }
}

void check_row(int row, double sum, bool negative, std::vector<ModelViolation>& out) {
    if (negative)
        out.push_back({ViolationKind::NegativeProbability, row, "row " + std::to_string(row) + " has a negative probability"});
    if (!(std::abs(sum - 1.0) <= kStochasticTolerance)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "row " << row << " sums to " << sum;
        out.push_back({ViolationKind::NonStochasticRow, row, msg.str()});
    }
}

// SplitMix64 finalizer, used to derive independent sub-stream seeds.
std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform on [0,1) from the top 53 bits; std::uniform_real_distribution is
// not reproducible across standard libraries.
double unit_uniform(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(stream + 1)));
}

}  // namespace

ModelValidationError::ModelValidationError(std::vector<ModelViolation> violations)
    : std::runtime_error(join_messages(violations)), violations_(std::move(violations)) {}

int SparseBanditModel::fanout() const {
    std::size_t widest = 0;
    for (const auto& row : rows) widest = std::max(widest, row.size());
    return static_cast<int>(widest);
}

std::vector<ModelViolation> model_violations(const BanditModel& model) {
    std::vector<ModelViolation> out;
    check_common(model.n, model.rewards.size(), model.beta, model.rewards, out);
    if (model.n >= 1 && model.transitions.size() != static_cast<std::size_t>(model.n) * model.n) {
        out.push_back({ViolationKind::BadShape, -1, "transition matrix is not n x n"});
        return out;
    }
    for (int i = 0; i < model.n; ++i) {
        double sum = 0.0;
        bool negative = false;
        for (int j = 0; j < model.n; ++j) {
            const double p = model.p(i, j);
            negative |= !(p >= 0.0);
            sum += p;
        }
        check_row(i, sum, negative, out);
    }
    return out;
}

std::vector<ModelViolation> model_violations(const SparseBanditModel& model, int max_fanout) {
    std::vector<ModelViolation> out;
    check_common(model.n, model.rewards.size(), model.beta, model.rewards, out);
    if (model.rows.size() != static_cast<std::size_t>(std::max(model.n, 0))) {
        out.push_back({ViolationKind::BadShape, -1, "row list length does not match state count"});
        return out;
    }
    for (int i = 0; i < model.n; ++i) {
        double sum = 0.0;
        bool negative = false;
        for (const auto& t : model.rows[i]) {
            if (t.to < 0 || t.to >= model.n)
                out.push_back({ViolationKind::BadShape, i, "row " + std::to_string(i) + " points outside the state space"});
            negative |= !(t.p >= 0.0);
            sum += t.p;
        }
        check_row(i, sum, negative, out);
        if (max_fanout > 0 && static_cast<int>(model.rows[i].size()) > max_fanout)
            out.push_back({ViolationKind::FanoutExceeded, i, "row " + std::to_string(i) + " exceeds the fanout bound"});
    }
    return out;
}

const BanditModel& validate_model(const BanditModel& model) {
    auto violations = model_violations(model);
    if (!violations.empty()) throw ModelValidationError(std::move(violations));
    return model;
}

const SparseBanditModel& validate_model(const SparseBanditModel& model, int max_fanout) {
    auto violations = model_violations(model, max_fanout);
    if (!violations.empty()) throw ModelValidationError(std::move(violations));
    return model;
}

SparseBanditModel to_sparse(const BanditModel& model) {
    SparseBanditModel out;
    out.n = model.n;
    out.rewards = model.rewards;
    out.beta = model.beta;
    out.rows.resize(static_cast<std::size_t>(model.n));
    for (int i = 0; i < model.n; ++i)
        for (int j = 0; j < model.n; ++j)
            if (model.p(i, j) != 0.0) out.rows[i].push_back({j, model.p(i, j)});
    return out;
}

BanditModel to_dense(const SparseBanditModel& model) {
    BanditModel out;
    out.n = model.n;
    out.rewards = model.rewards;
    out.beta = model.beta;
    out.transitions.assign(static_cast<std::size_t>(model.n) * model.n, 0.0);
    for (int i = 0; i < model.n; ++i)
        for (const auto& t : model.rows[i]) out.p(i, t.to) += t.p;
    return out;
}

BanditModel random_dense_instance(int n, std::uint64_t seed, double beta) {
    if (n < 1) throw std::invalid_argument("random_dense_instance: n must be at least 1");
    auto transition_stream = substream(seed, 0);
    auto reward_stream = substream(seed, 1);

    BanditModel model;
    model.n = n;
    model.beta = beta;
    model.transitions.resize(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            // (0,1): shift off zero so every row has positive mass
            const double u = unit_uniform(transition_stream) + 0x1.0p-54;
            model.p(i, j) = u;
            sum += u;
        }
        for (int j = 0; j < n; ++j) model.p(i, j) /= sum;
    }
    model.rewards.resize(static_cast<std::size_t>(n));
    for (auto& r : model.rewards) r = unit_uniform(reward_stream);
    return model;
}

SparseBanditModel random_birth_death_instance(int n, std::uint64_t seed, double beta) {
    if (n < 1) throw std::invalid_argument("random_birth_death_instance: n must be at least 1");
    auto transition_stream = substream(seed, 0);
    auto reward_stream = substream(seed, 1);

    SparseBanditModel model;
    model.n = n;
    model.beta = beta;
    model.rows.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto& row = model.rows[i];
        for (int j = std::max(0, i - 1); j <= std::min(n - 1, i + 1); ++j)
            row.push_back({j, unit_uniform(transition_stream) + 0x1.0p-54});
        double sum = 0.0;
        for (const auto& t : row) sum += t.p;
        for (auto& t : row) t.p /= sum;
    }
    model.rewards.resize(static_cast<std::size_t>(n));
    for (auto& r : model.rewards) r = unit_uniform(reward_stream);
    return model;
}

CountableModelSpec beta_bernoulli_spec(double beta) {
    if (!(beta > 0.0 && beta <= 1.0)) throw ModelValidationError({{ViolationKind::BadDiscount, -1, "discount factor outside (0, 1]"}});
    CountableModelSpec spec;
    spec.family = "beta_bernoulli";
    spec.beta = beta;
    spec.fanout = 2;
    spec.reward = [](const StateKey& s) { return static_cast<double>(s.a) / static_cast<double>(s.a + s.b); };
    spec.successors = [](const StateKey& s) {
        const double total = static_cast<double>(s.a + s.b);
        return std::vector<KeyedTransition>{{{s.a + 1, s.b}, static_cast<double>(s.a) / total},
                                            {{s.a, s.b + 1}, static_cast<double>(s.b) / total}};
    };
    spec.format_key = [](const StateKey& s) { return std::to_string(s.a) + ":" + std::to_string(s.b); };
    return spec;
}

CountableModelSpec countable_view(const SparseBanditModel& model) {
    CountableModelSpec spec;
    spec.family = "finite";
    spec.beta = model.beta;
    spec.fanout = model.fanout();
    // The lambdas share ownership of a copy so the view outlives `model`.
    auto shared = std::make_shared<SparseBanditModel>(model);
    spec.reward = [shared](const StateKey& s) { return shared->rewards.at(static_cast<std::size_t>(s.a)); };
    spec.successors = [shared](const StateKey& s) {
        std::vector<KeyedTransition> out;
        for (const auto& t : shared->rows.at(static_cast<std::size_t>(s.a)))
            if (t.p > 0.0) out.push_back({{t.to, 0}, t.p});
        return out;
    };
    spec.format_key = [](const StateKey& s) { return std::to_string(s.a); };
    return spec;
}

ReachableSets reachable_sets(const CountableModelSpec& spec, const StateKey& initial, int depth) {
    if (depth < 0) throw std::invalid_argument("reachable_sets: depth must be nonnegative");
    ReachableSets out;
    out.initial = initial;
    std::set<StateKey> seen{initial};
    out.discovery.push_back(initial);
    out.sets.push_back({initial});
    std::size_t frontier_begin = 0;
    for (int s = 1; s <= depth; ++s) {
        const std::size_t frontier_end = out.discovery.size();
        for (std::size_t k = frontier_begin; k < frontier_end; ++k) {
            auto next = spec.successors(out.discovery[k]);
            std::sort(next.begin(), next.end(), [](const auto& x, const auto& y) { return x.to < y.to; });
            for (const auto& t : next) {
                if (t.p > 0.0 && seen.insert(t.to).second) out.discovery.push_back(t.to);
            }
        }
        frontier_begin = frontier_end;
        out.sets.emplace_back(seen.begin(), seen.end());
    }
    return out;
}

ReachableSets reachable_sets(const SparseBanditModel& model, int initial, int depth) {
    return reachable_sets(countable_view(model), StateKey{initial, 0}, depth);
}

std::string format_key(const CountableModelSpec& spec, const StateKey& key) {
    if (spec.format_key) return spec.format_key(key);
    return std::to_string(key.a) + ":" + std::to_string(key.b);
}

}  // namespace apindex
