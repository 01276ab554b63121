#include "apindex/countable.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "rag_engine.hpp"

namespace apindex {

namespace {

void check_horizon(int horizon) {
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
}

detail::StagedProblem staged(const RelevantStateSpace& space) {
    detail::StagedProblem problem;
    problem.horizon = space.horizon;
    problem.sizes = space.sizes;
    problem.rewards = space.rewards;
    return problem;
}

IndexTable with_keys(IndexTable table, const RelevantStateSpace& space) {
    table.keys() = space.states;
    return table;
}

std::string describe(const std::vector<IndexMismatch>& mismatches) {
    std::ostringstream out;
    out.precision(17);
    out << mismatches.size() << " index value(s) differ from the embedded model";
    for (std::size_t k = 0; k < std::min<std::size_t>(mismatches.size(), 10); ++k) {
        const auto& m = mismatches[k];
        out << "\n  (d=" << m.d << ", " << m.key.a << ":" << m.key.b << ") " << m.countable << " vs " << m.embedded;
    }
    return out.str();
}

}  // namespace

std::uint64_t RelevantStateSpace::pair_count() const {
    std::uint64_t total = 0;
    for (int n : sizes) total += static_cast<std::uint64_t>(n);
    return total;
}

int RelevantStateSpace::index_of(const StateKey& key) const {
    const auto it = std::find(states.begin(), states.end(), key);
    return it == states.end() ? -1 : static_cast<int>(it - states.begin());
}

RelevantStateSpace relevant_state_space(const CountableModelSpec& spec, const StateKey& initial, int horizon) {
    check_horizon(horizon);
    const auto sets = reachable_sets(spec, initial, horizon - 1);
    RelevantStateSpace space;
    space.initial = initial;
    space.horizon = horizon;
    space.beta = spec.beta;
    space.states = sets.discovery;
    for (int d = 1; d <= horizon; ++d) space.sizes.push_back(static_cast<int>(sets.size(horizon - d)));

    std::map<StateKey, int> position;
    for (std::size_t k = 0; k < space.states.size(); ++k) position.emplace(space.states[k], static_cast<int>(k));
    space.rewards.reserve(space.states.size());
    for (const auto& key : space.states) {
        const double r = spec.reward(key);
        if (!std::isfinite(r)) throw ModelValidationError({{ViolationKind::NonFiniteReward, -1, "reward of " + format_key(spec, key) + " is not finite"}});
        space.rewards.push_back(r);
    }

    // Only states in X_{T-2} are ever played with two or more periods left.
    const std::size_t inner = horizon >= 2 ? static_cast<std::size_t>(space.sizes[1]) : 0;
    space.rows.resize(space.states.size());
    std::vector<ModelViolation> violations;
    for (std::size_t k = 0; k < inner; ++k) {
        auto next = spec.successors(space.states[k]);
        double sum = 0.0;
        bool negative = false;
        for (const auto& t : next) {
            sum += t.p;
            negative = negative || t.p < 0.0;
            if (t.p > 0.0) space.rows[k].push_back({position.at(t.to), t.p});
        }
        std::sort(space.rows[k].begin(), space.rows[k].end(), [](const Transition& a, const Transition& b) { return a.to < b.to; });
        if (negative) violations.push_back({ViolationKind::NegativeProbability, static_cast<int>(k), "successors of " + format_key(spec, space.states[k]) + " include a negative probability"});
        if (!(std::abs(sum - 1.0) <= kStochasticTolerance))
            violations.push_back({ViolationKind::NonStochasticRow, static_cast<int>(k), "successor probabilities of " + format_key(spec, space.states[k]) + " do not sum to 1"});
        if (spec.fanout > 0 && static_cast<int>(space.rows[k].size()) > spec.fanout)
            violations.push_back({ViolationKind::FanoutExceeded, static_cast<int>(k), "fanout exceeded at " + format_key(spec, space.states[k])});
    }
    if (!(spec.beta > 0.0 && spec.beta <= 1.0)) violations.push_back({ViolationKind::BadDiscount, -1, "discount factor outside (0, 1]"});
    if (!violations.empty()) throw ModelValidationError(std::move(violations));
    return space;
}

std::uint64_t relevant_count(const CountableModelSpec& spec, const StateKey& initial, int horizon) {
    check_horizon(horizon);
    const auto sets = reachable_sets(spec, initial, horizon - 1);
    std::uint64_t total = 0;
    for (int s = 0; s < horizon; ++s) total += sets.size(s);
    return total;
}

IndexTable rag_from_initial(const CountableModelSpec& spec, const StateKey& initial, int horizon, RagStats* stats) {
    const auto space = relevant_state_space(spec, initial, horizon);
    detail::SparseKernel kernel(static_cast<int>(space.states.size()), space.rows, space.beta);
    return with_keys(detail::run_rag(staged(space), kernel, stats), space);
}

IndexTable block_rag_from_initial(const CountableModelSpec& spec, const StateKey& initial, int horizon, RagStats* stats) {
    const auto space = relevant_state_space(spec, initial, horizon);
    detail::SparseKernel kernel(static_cast<int>(space.states.size()), space.rows, space.beta);
    return with_keys(detail::run_block_rag(staged(space), kernel, stats), space);
}

EmbeddedModel embed_relevant_pairs(const CountableModelSpec& spec, const StateKey& initial, int horizon) {
    const auto space = relevant_state_space(spec, initial, horizon);
    EmbeddedModel out;
    // first[d-1] = model index of (d, 0)
    std::vector<int> first;
    for (int d = 1; d <= horizon; ++d) {
        first.push_back(static_cast<int>(out.pairs.size()));
        for (int i = 0; i < space.sizes[static_cast<std::size_t>(d - 1)]; ++i) out.pairs.emplace_back(d, i);
    }
    const int n = static_cast<int>(out.pairs.size()) + 1;
    out.terminal = n - 1;
    auto& m = out.model;
    m.n = n;
    m.beta = space.beta;
    m.transitions.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    m.rewards.resize(static_cast<std::size_t>(n));
    const double floor = *std::min_element(space.rewards.begin(), space.rewards.end()) - 1.0;
    for (int k = 0; k < n - 1; ++k) {
        const auto [d, i] = out.pairs[static_cast<std::size_t>(k)];
        m.rewards[static_cast<std::size_t>(k)] = space.rewards[static_cast<std::size_t>(i)];
        if (d == 1) {
            m.p(k, out.terminal) = 1.0;
        } else {
            for (const auto& t : space.rows[static_cast<std::size_t>(i)]) m.p(k, first[static_cast<std::size_t>(d - 2)] + t.to) += t.p;
        }
    }
    m.p(out.terminal, out.terminal) = 1.0;
    m.rewards[static_cast<std::size_t>(out.terminal)] = floor;
    return out;
}

BanditModel truncated_finite_model(const CountableModelSpec& spec, const StateKey& initial, int horizon, std::vector<StateKey>* keys) {
    const auto space = relevant_state_space(spec, initial, horizon);
    const int n = static_cast<int>(space.states.size());
    BanditModel m;
    m.n = n;
    m.beta = space.beta;
    m.rewards = space.rewards;
    m.transitions.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        const auto& row = space.rows[static_cast<std::size_t>(i)];
        if (row.empty()) m.p(i, i) = 1.0;
        for (const auto& t : row) m.p(i, t.to) += t.p;
    }
    if (keys) *keys = space.states;
    return m;
}

MismatchReport::MismatchReport(std::vector<IndexMismatch> mismatches)
    : std::runtime_error(describe(mismatches)), mismatches_(std::move(mismatches)) {}

CrosscheckSummary finite_embedding_crosscheck(const CountableModelSpec& spec, const StateKey& initial, int horizon, double tol) {
    const auto countable = rag_from_initial(spec, initial, horizon);
    const auto embedded = embed_relevant_pairs(spec, initial, horizon);
    const auto full = rag_full(embedded.model, horizon);

    CrosscheckSummary summary;
    std::vector<IndexMismatch> mismatches;
    for (std::size_t k = 0; k < embedded.pairs.size(); ++k) {
        const auto [d, i] = embedded.pairs[k];
        const double a = countable.at(d, i);
        const double b = full.at(horizon, static_cast<int>(k));
        const double diff = std::abs(a - b);
        ++summary.compared;
        summary.max_abs_difference = std::max(summary.max_abs_difference, diff);
        if (!(diff <= tol)) mismatches.push_back({d, countable.keys()[static_cast<std::size_t>(i)], a, b});
    }
    if (!mismatches.empty()) throw MismatchReport(std::move(mismatches));
    return summary;
}

}  // namespace apindex
