#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "stac/error.hpp"
#include "stac/linalg.hpp"
#include "stac/rng.hpp"
#include "stac/serialize.hpp"

namespace stac {

inline constexpr double kRowSumTol = 1e-12;

/// Finite MDP with a dense transition tensor indexed (s, a, s') and a
/// deterministic reward table r(s, a) bounded by u_r in absolute value.
struct FiniteMdp {
    int n_states = 0;
    int n_actions = 0;
    std::vector<Mat> transition;  // transition[a](s, s') = P(s' | s, a)
    Mat reward;                   // reward(s, a)
    double u_r = 1.0;

    double p(int s, int a, int s_next) const { return transition[a](s, s_next); }
    double r(int s, int a) const { return reward(s, a); }
};

/// State chain induced by a fixed policy: P_theta(s'|s) and the expected
/// one-step reward r_theta(s). Rows of p_theta are probability vectors.
struct InducedChain {
    Mat p_theta;  // n_states x n_states
    Vec r_theta;  // n_states
};

struct RowViolation {
    int s = 0;
    int a = 0;
    double row_sum = 0.0;
    double min_entry = 0.0;
};

struct BoundViolation {
    int s = 0;
    int a = 0;
    double value = 0.0;
};

struct ValidationReport {
    std::vector<RowViolation> stochasticity;
    std::vector<BoundViolation> reward_bounds;

    bool valid() const { return stochasticity.empty() && reward_bounds.empty(); }
};

/// Report-style check of the FiniteMdp invariants; never throws.
inline ValidationReport validate(const FiniteMdp& mdp) {
    ValidationReport report;
    for (int a = 0; a < mdp.n_actions; ++a) {
        for (int s = 0; s < mdp.n_states; ++s) {
            const double sum = mdp.transition[a].row(s).sum();
            const double min_entry = mdp.transition[a].row(s).minCoeff();
            if (std::abs(sum - 1.0) > kRowSumTol || min_entry < 0.0)
                report.stochasticity.push_back({s, a, sum, min_entry});
        }
    }
    for (int s = 0; s < mdp.n_states; ++s)
        for (int a = 0; a < mdp.n_actions; ++a)
            if (std::abs(mdp.reward(s, a)) > mdp.u_r)
                report.reward_bounds.push_back({s, a, mdp.reward(s, a)});
    return report;
}

/// Random MDP in the Garnet family: every (s, a) row places mass on exactly
/// `branching` distinct successor states, with probabilities given by the
/// spacings of uniform cut points. Rewards are uniform in [-u_r, u_r].
/// Bitwise deterministic in (arguments, seed).
inline FiniteMdp generate_garnet(int n_states, int n_actions, int branching,
                                 std::uint64_t seed, double u_r = 1.0) {
    require(n_states >= 1 && n_actions >= 1, ErrorKind::Parameter,
            "generate_garnet: need at least one state and one action");
    require(branching >= 1 && branching <= n_states, ErrorKind::Parameter,
            "generate_garnet: branching must be in [1, n_states]");
    require(u_r > 0.0, ErrorKind::Parameter, "generate_garnet: u_r must be positive");

    Mt64Stream rng(seed);
    FiniteMdp mdp;
    mdp.n_states = n_states;
    mdp.n_actions = n_actions;
    mdp.u_r = u_r;
    mdp.transition.assign(n_actions, Mat::Zero(n_states, n_states));
    mdp.reward = Mat::Zero(n_states, n_actions);

    std::vector<int> pool(n_states);
    std::vector<double> cuts(branching + 1);
    for (int s = 0; s < n_states; ++s) {
        for (int a = 0; a < n_actions; ++a) {
            // Partial Fisher-Yates draw of `branching` distinct successors.
            std::iota(pool.begin(), pool.end(), 0);
            for (int k = 0; k < branching; ++k) {
                const int remaining = n_states - k;
                int j = k + std::min(remaining - 1, static_cast<int>(rng.next() * remaining));
                std::swap(pool[k], pool[j]);
            }
            // Probabilities from spacings of branching-1 uniform cut points.
            cuts[0] = 0.0;
            cuts[branching] = 1.0;
            for (int k = 1; k < branching; ++k) cuts[k] = rng.next();
            std::sort(cuts.begin() + 1, cuts.begin() + branching);
            for (int k = 0; k < branching; ++k)
                mdp.transition[a](s, pool[k]) = cuts[k + 1] - cuts[k];
            mdp.reward(s, a) = (2.0 * rng.next() - 1.0) * u_r;
        }
    }
    return mdp;
}

/// Mixes the per-action kernels and rewards through an S x A matrix of
/// action probabilities (row s = pi(.|s)).
inline InducedChain induced_chain(const FiniteMdp& mdp, const Mat& action_probs) {
    require(action_probs.rows() == mdp.n_states && action_probs.cols() == mdp.n_actions,
            ErrorKind::Parameter, "induced_chain: policy dimension mismatch");
    InducedChain chain;
    chain.p_theta = Mat::Zero(mdp.n_states, mdp.n_states);
    for (int a = 0; a < mdp.n_actions; ++a)
        chain.p_theta += action_probs.col(a).asDiagonal() * mdp.transition[a];
    chain.r_theta = (action_probs.array() * mdp.reward.array()).rowwise().sum();
    return chain;
}

/// Canonical two-state, two-action fixture used throughout the test suite:
/// action L drifts to state 0, action R to state 1; only state 1 pays.
inline FiniteMdp make_m2() {
    FiniteMdp mdp;
    mdp.n_states = 2;
    mdp.n_actions = 2;
    mdp.u_r = 1.0;
    Mat left(2, 2), right(2, 2);
    left << 0.9, 0.1, 0.9, 0.1;
    right << 0.1, 0.9, 0.1, 0.9;
    mdp.transition = {left, right};
    mdp.reward = Mat(2, 2);
    mdp.reward << 0.0, 0.0, 1.0, 1.0;
    return mdp;
}

inline json mdp_to_json(const FiniteMdp& mdp) {
    json tensor = json::array();
    for (int s = 0; s < mdp.n_states; ++s) {
        json per_action = json::array();
        for (int a = 0; a < mdp.n_actions; ++a) {
            json row = json::array();
            for (int t = 0; t < mdp.n_states; ++t) row.push_back(mdp.transition[a](s, t));
            per_action.push_back(std::move(row));
        }
        tensor.push_back(std::move(per_action));
    }
    return json{{"n_states", mdp.n_states},
                {"n_actions", mdp.n_actions},
                {"u_r", mdp.u_r},
                {"transition", std::move(tensor)},
                {"reward", mat_to_json(mdp.reward)}};
}

inline FiniteMdp mdp_from_json(const json& j) {
    FiniteMdp mdp;
    mdp.n_states = j.at("n_states").get<int>();
    mdp.n_actions = j.at("n_actions").get<int>();
    mdp.u_r = j.at("u_r").get<double>();
    require(mdp.n_states >= 1 && mdp.n_actions >= 1, ErrorKind::Parameter,
            "mdp_from_json: bad dimensions");
    mdp.transition.assign(mdp.n_actions, Mat::Zero(mdp.n_states, mdp.n_states));
    const json& tensor = j.at("transition");
    require(tensor.size() == static_cast<std::size_t>(mdp.n_states), ErrorKind::Parameter,
            "mdp_from_json: transition tensor shape");
    for (int s = 0; s < mdp.n_states; ++s) {
        const json& per_action = tensor[s];
        require(per_action.size() == static_cast<std::size_t>(mdp.n_actions), ErrorKind::Parameter,
                "mdp_from_json: transition tensor shape");
        for (int a = 0; a < mdp.n_actions; ++a)
            for (int t = 0; t < mdp.n_states; ++t)
                mdp.transition[a](s, t) = per_action[a][t].get<double>();
    }
    mdp.reward = mat_from_json(j.at("reward"));
    require(mdp.reward.rows() == mdp.n_states && mdp.reward.cols() == mdp.n_actions,
            ErrorKind::Parameter, "mdp_from_json: reward shape");
    return mdp;
}

} // namespace stac
