#include "apindex/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "apindex/calibration.hpp"
#include "apindex/oracle.hpp"

namespace apindex {

namespace {

// Mixed-radix encoding of joint states, project 0 most significant.
struct JointSpace {
    std::vector<int> radix;
    std::vector<std::size_t> stride;
    std::size_t size = 1;

    explicit JointSpace(const FhmabInstance& instance) {
        const std::size_t m = instance.projects.size();
        radix.resize(m);
        stride.resize(m);
        for (std::size_t k = m; k-- > 0;) {
            radix[k] = instance.projects[k].n;
            stride[k] = size;
            size *= static_cast<std::size_t>(radix[k]);
        }
    }

    int coord(std::size_t x, std::size_t m) const { return static_cast<int>((x / stride[m]) % static_cast<std::size_t>(radix[m])); }

    std::size_t encode(const std::vector<int>& states) const {
        std::size_t x = 0;
        for (std::size_t m = 0; m < states.size(); ++m) x += static_cast<std::size_t>(states[m]) * stride[m];
        return x;
    }
};

void check_budget(const FhmabInstance& instance, const JointSpace& space, std::uint64_t budget) {
    const auto required = static_cast<std::uint64_t>(space.size) * static_cast<std::uint64_t>(instance.horizon);
    if (required > budget) throw BudgetExceeded(required, budget);
}

// (T_m V)(x) = Σ_j p_m(x_m, j) V(x with x_m = j)
std::vector<double> apply_transition(const FhmabInstance& instance, const JointSpace& space, std::size_t m, const std::vector<double>& v) {
    const auto& model = instance.projects[m];
    std::vector<double> out(space.size, 0.0);
    for (std::size_t x = 0; x < space.size; ++x) {
        const int i = space.coord(x, m);
        const std::size_t base = x - static_cast<std::size_t>(i) * space.stride[m];
        double acc = 0.0;
        for (int j = 0; j < model.n; ++j) acc += model.p(i, j) * v[base + static_cast<std::size_t>(j) * space.stride[m]];
        out[x] = acc;
    }
    return out;
}

std::vector<unsigned> allowed_actions(const FhmabInstance& instance) {
    const auto m = static_cast<unsigned>(instance.projects.size());
    std::vector<unsigned> actions;
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
        const int count = std::popcount(mask);
        if (instance.rule == EngagementRule::ExactlyOne ? count == 1 : count <= instance.max_engaged) actions.push_back(mask);
    }
    return actions;
}

// Engaged set chosen by a priority rule at `remaining` periods left.
unsigned choose(const FhmabInstance& instance, HeuristicRule rule, const std::vector<IndexTable>& tables, int remaining,
                const std::vector<int>& states) {
    const std::size_t count = instance.projects.size();
    std::vector<double> priority(count);
    for (std::size_t m = 0; m < count; ++m) {
        const int i = states[m];
        if (rule == HeuristicRule::Myopic) {
            priority[m] = instance.projects[m].rewards[static_cast<std::size_t>(i)];
        } else {
            const auto& t = tables[m];
            if (remaining > t.horizon() || !t.has(remaining, i)) throw MissingIndexValue(static_cast<int>(m), remaining, i);
            priority[m] = t.at(remaining, i);
        }
    }
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return priority[a] > priority[b]; });
    if (instance.rule == EngagementRule::ExactlyOne) return 1u << order[0];
    unsigned mask = 0;
    for (int k = 0; k < instance.max_engaged && k < static_cast<int>(count); ++k)
        if (priority[order[static_cast<std::size_t>(k)]] > 0.0) mask |= 1u << order[static_cast<std::size_t>(k)];
    return mask;
}

std::vector<int> decode(const JointSpace& space, std::size_t x) {
    std::vector<int> states(space.radix.size());
    for (std::size_t m = 0; m < states.size(); ++m) states[m] = space.coord(x, m);
    return states;
}

}  // namespace

double FhmabInstance::beta() const {
    return projects.empty() ? 1.0 : projects.front().beta;
}

void validate_instance(const FhmabInstance& instance) {
    if (instance.projects.empty()) throw std::invalid_argument("instance needs at least one project");
    if (instance.projects.size() > 16) throw std::invalid_argument("instance supports at most 16 projects");
    if (instance.horizon < 1) throw std::invalid_argument("horizon must be at least 1");
    const int m = static_cast<int>(instance.projects.size());
    if (instance.max_engaged < 1 || instance.max_engaged > m) throw std::invalid_argument("K must lie in [1, M]");
    if (instance.rule == EngagementRule::ExactlyOne && instance.max_engaged != 1)
        throw std::invalid_argument("engaging exactly one project requires K = 1");
    if (instance.initial.size() != instance.projects.size()) throw std::invalid_argument("initial state needs one entry per project");
    for (std::size_t k = 0; k < instance.projects.size(); ++k) {
        const auto& p = instance.projects[k];
        validate_model(p);
        if (p.beta != instance.beta()) throw std::invalid_argument("projects must share the discount factor");
        if (instance.initial[k] < 0 || instance.initial[k] >= p.n) throw std::out_of_range("initial state outside project " + std::to_string(k));
    }
}

double fhmab_optimal_value(const FhmabInstance& instance, std::uint64_t budget) {
    validate_instance(instance);
    const JointSpace space(instance);
    check_budget(instance, space, budget);
    const auto actions = allowed_actions(instance);
    const std::size_t count = instance.projects.size();
    const double beta = instance.beta();
    const unsigned full = (1u << count);

    std::vector<double> value(space.size, 0.0);
    std::vector<std::vector<double>> expected(full);
    for (int d = 1; d <= instance.horizon; ++d) {
        // expected[S] = E[V_{d-1}] after the projects in S move
        expected[0] = value;
        for (unsigned mask = 1; mask < full; ++mask) {
            const auto low = static_cast<std::size_t>(std::countr_zero(mask));
            expected[mask] = apply_transition(instance, space, low, expected[mask & (mask - 1)]);
        }
        std::vector<double> next(space.size, 0.0);
        for (std::size_t x = 0; x < space.size; ++x) {
            double best = -std::numeric_limits<double>::infinity();
            for (unsigned mask : actions) {
                double reward = 0.0;
                for (std::size_t m = 0; m < count; ++m)
                    if (mask & (1u << m)) reward += instance.projects[m].rewards[static_cast<std::size_t>(space.coord(x, m))];
                best = std::max(best, reward + beta * expected[mask][x]);
            }
            next[x] = best;
        }
        value.swap(next);
    }
    return value[space.encode(instance.initial)];
}

const char* rule_name(HeuristicRule rule) {
    return rule == HeuristicRule::Index ? "index" : "myopic";
}

MissingIndexValue::MissingIndexValue(int project, int d, int state)
    : std::runtime_error("no index value for project " + std::to_string(project) + " at (d=" + std::to_string(d) +
                         ", i=" + std::to_string(state) + ")") {}

PolicyReport evaluate_heuristic(const FhmabInstance& instance, HeuristicRule rule, const std::vector<IndexTable>& tables,
                                std::uint64_t budget) {
    validate_instance(instance);
    if (rule == HeuristicRule::Index && tables.size() != instance.projects.size())
        throw std::invalid_argument("index rule needs one table per project");
    const JointSpace space(instance);
    check_budget(instance, space, budget);
    const std::size_t count = instance.projects.size();

    PolicyReport report;
    report.policy = rule_name(rule);
    std::vector<double> dist(space.size, 0.0);
    dist[space.encode(instance.initial)] = 1.0;
    double discount = 1.0;
    for (int t = 0; t < instance.horizon; ++t) {
        const int remaining = instance.horizon - t;
        std::vector<double> next(space.size, 0.0);
        std::vector<double> engaged(count, 0.0);
        for (std::size_t x = 0; x < space.size; ++x) {
            const double mass = dist[x];
            if (mass == 0.0) continue;
            const auto states = decode(space, x);
            const unsigned mask = choose(instance, rule, tables, remaining, states);
            double reward = 0.0;
            // Spread the mass over successors of every engaged project.
            std::vector<std::pair<std::size_t, double>> outcomes{{x, mass}};
            for (std::size_t m = 0; m < count; ++m) {
                if (!(mask & (1u << m))) continue;
                engaged[m] += mass;
                const auto& model = instance.projects[m];
                const int i = states[m];
                reward += model.rewards[static_cast<std::size_t>(i)];
                std::vector<std::pair<std::size_t, double>> moved;
                for (const auto& [y, w] : outcomes)
                    for (int j = 0; j < model.n; ++j) {
                        const double p = model.p(i, j);
                        if (p > 0.0) moved.emplace_back(y + (static_cast<std::size_t>(j) - static_cast<std::size_t>(i)) * space.stride[m], w * p);
                    }
                outcomes.swap(moved);
            }
            report.value += discount * mass * reward;
            for (const auto& [y, w] : outcomes) next[y] += w;
        }
        report.engagement.push_back(engaged);
        dist.swap(next);
        discount *= instance.beta();
    }
    return report;
}

MonteCarloEstimate simulate_heuristic(const FhmabInstance& instance, HeuristicRule rule, const std::vector<IndexTable>& tables,
                                      std::uint64_t runs, std::uint64_t seed) {
    validate_instance(instance);
    if (runs < 2) throw std::invalid_argument("need at least two runs for a standard error");
    std::mt19937_64 gen(seed);
    const std::size_t count = instance.projects.size();
    double sum = 0.0, sum_sq = 0.0;
    for (std::uint64_t r = 0; r < runs; ++r) {
        auto states = instance.initial;
        double total = 0.0, discount = 1.0;
        for (int t = 0; t < instance.horizon; ++t) {
            const unsigned mask = choose(instance, rule, tables, instance.horizon - t, states);
            for (std::size_t m = 0; m < count; ++m) {
                if (!(mask & (1u << m))) continue;
                const auto& model = instance.projects[m];
                const int i = states[m];
                total += discount * model.rewards[static_cast<std::size_t>(i)];
                const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
                double acc = 0.0;
                int j = model.n - 1;
                for (int k = 0; k < model.n; ++k) {
                    acc += model.p(i, k);
                    if (u < acc) {
                        j = k;
                        break;
                    }
                }
                states[m] = j;
            }
            discount *= instance.beta();
        }
        sum += total;
        sum_sq += total * total;
    }
    MonteCarloEstimate out;
    out.runs = runs;
    out.mean = sum / static_cast<double>(runs);
    const double variance = std::max(0.0, (sum_sq - static_cast<double>(runs) * out.mean * out.mean) / static_cast<double>(runs - 1));
    out.standard_error = std::sqrt(variance / static_cast<double>(runs));
    return out;
}

OneArmedReport verify_one_armed_optimality(const BanditModel& model, const IndexTable& table, double lambda, double tol) {
    validate_model(model);
    const auto sol = solve_one_armed(model, lambda, table.horizon());
    OneArmedReport report;
    for (int d = 1; d <= table.horizon(); ++d)
        for (int i = 0; i < model.n; ++i) {
            ++report.checked;
            const double index = table.at(d, i);
            const auto action = sol.action(d, i);
            const bool active_ok = action != ArmAction::Passive;
            const bool passive_ok = action != ArmAction::Active;
            if (index > lambda + tol && action != ArmAction::Active)
                report.violations.push_back({d, i, index, "index above the standard arm but passive is optimal"});
            if (index < lambda - tol && action != ArmAction::Passive)
                report.violations.push_back({d, i, index, "index below the standard arm but active is optimal"});
            if (index >= lambda - tol && index <= lambda + tol && !active_ok && !passive_ok)
                report.violations.push_back({d, i, index, "no optimal action"});
        }
    return report;
}

BanditModel constant_project(double reward, double beta) {
    return BanditModel{1, {1.0}, {reward}, beta};
}

}  // namespace apindex
