#pragma once

#include "apindex/model.hpp"

namespace fixtures {

// Two states that alternate deterministically; state 0 pays 1, state 1 pays 0.
inline apindex::BanditModel swap_instance() {
    apindex::BanditModel m;
    m.n = 2;
    m.transitions = {0.0, 1.0, 1.0, 0.0};
    m.rewards = {1.0, 0.0};
    m.beta = 1.0;
    return m;
}

inline apindex::BanditModel identity_instance(std::vector<double> rewards, double beta) {
    apindex::BanditModel m;
    m.n = static_cast<int>(rewards.size());
    m.transitions.assign(static_cast<std::size_t>(m.n * m.n), 0.0);
    for (int i = 0; i < m.n; ++i) m.p(i, i) = 1.0;
    m.rewards = std::move(rewards);
    m.beta = beta;
    return m;
}

}  // namespace fixtures
