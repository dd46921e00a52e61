#pragma once

#include <cmath>

#include "stac/error.hpp"
#include "stac/linalg.hpp"
#include "stac/mdp.hpp"
#include "stac/rng.hpp"

namespace stac {

/// Analytic constants for the softmax class with one-hot state-action
/// features (||psi|| <= 1): gradient bound B and the two Lipschitz
/// constants of Assumption 3. Conservative bounds; numeric probes below
/// report the observed maxima alongside them.
struct PolicyConstants {
    double b_bound = 2.0;  // ||grad log pi|| <= B
    double l_l = 2.0;      // Lipschitz constant of grad log pi
    double l_pi = 2.0;     // Lipschitz constant of pi itself
};

/// Tabular softmax policy over a finite MDP: theta has one logit per
/// (state, action) pair, laid out row-major as s * n_actions + a.
struct SoftmaxPolicy {
    int n_states = 0;
    int n_actions = 0;

    int param_dim() const { return n_states * n_actions; }
    int coord(int s, int a) const { return s * n_actions + a; }

    void check_theta(const Vec& theta) const {
        require(theta.size() == param_dim(), ErrorKind::Parameter,
                "policy: theta dimension mismatch");
    }

    /// Softmax of the state-s logits with max-subtraction.
    Vec action_probs(const Vec& theta, int s) const {
        check_theta(theta);
        require(s >= 0 && s < n_states, ErrorKind::Parameter, "action_probs: state out of range");
        Vec logits = theta.segment(static_cast<Eigen::Index>(s) * n_actions, n_actions);
        const double m = logits.maxCoeff();
        Vec probs = (logits.array() - m).exp();
        probs /= probs.sum();
        return probs;
    }

    /// Full S x A table of action probabilities.
    Mat prob_table(const Vec& theta) const {
        Mat table(n_states, n_actions);
        for (int s = 0; s < n_states; ++s) table.row(s) = action_probs(theta, s).transpose();
        return table;
    }

    /// grad log pi(a|s) = psi(s,a) - E_{b~pi}[psi(s,b)]; nonzero only in the
    /// state-s coordinate block.
    Vec log_grad(const Vec& theta, int s, int a) const {
        require(a >= 0 && a < n_actions, ErrorKind::Parameter, "log_grad: action out of range");
        Vec probs = action_probs(theta, s);
        Vec grad = Vec::Zero(param_dim());
        for (int b = 0; b < n_actions; ++b) grad[coord(s, b)] = -probs[b];
        grad[coord(s, a)] += 1.0;
        return grad;
    }

    /// In-place theta += scale * grad log pi(a|s) given the state-s action
    /// probabilities; returns ||grad log pi|| for step-size accounting.
    double add_scaled_log_grad(Vec& theta, const Vec& probs, int s, int a, double scale) const {
        double norm_sq = 0.0;
        for (int b = 0; b < n_actions; ++b) {
            const double g = (b == a ? 1.0 : 0.0) - probs[b];
            theta[coord(s, b)] += scale * g;
            norm_sq += g * g;
        }
        return std::sqrt(norm_sq);
    }

    /// Inverse-CDF draw consuming exactly one uniform variate.
    int sample_action(const Vec& theta, int s, UniformStream& stream) const {
        Vec probs = action_probs(theta, s);
        return sample_categorical(probs, stream.next());
    }
};

inline SoftmaxPolicy make_policy(const FiniteMdp& mdp) {
    return SoftmaxPolicy{mdp.n_states, mdp.n_actions};
}

inline PolicyConstants policy_constants(int /*n_states*/, int /*n_actions*/) {
    return PolicyConstants{};
}

/// Observed maxima of the Assumption-3 quantities over random probes.
/// Reported next to the analytic bounds; the constant calculus downstream
/// always uses the analytic values.
struct PolicyProbe {
    double b_max = 0.0;
    double l_l_max = 0.0;
    double l_pi_max = 0.0;
};

inline PolicyProbe probe_policy_constants(const SoftmaxPolicy& policy, int n_probes,
                                          std::uint64_t seed, double theta_scale = 4.0) {
    Mt64Stream rng(seed);
    PolicyProbe probe;
    const int p = policy.param_dim();
    auto random_theta = [&] {
        Vec theta(p);
        for (int i = 0; i < p; ++i) theta[i] = (2.0 * rng.next() - 1.0) * theta_scale;
        return theta;
    };
    for (int k = 0; k < n_probes; ++k) {
        const Vec theta1 = random_theta();
        const Vec theta2 = random_theta();
        const int s = std::min(policy.n_states - 1, static_cast<int>(rng.next() * policy.n_states));
        const int a = std::min(policy.n_actions - 1, static_cast<int>(rng.next() * policy.n_actions));
        const double dist = (theta1 - theta2).norm();
        probe.b_max = std::max(probe.b_max, policy.log_grad(theta1, s, a).norm());
        if (dist > 1e-12) {
            const double dgrad =
                (policy.log_grad(theta1, s, a) - policy.log_grad(theta2, s, a)).norm();
            const double dprob = std::abs(policy.action_probs(theta1, s)[a] -
                                          policy.action_probs(theta2, s)[a]);
            probe.l_l_max = std::max(probe.l_l_max, dgrad / dist);
            probe.l_pi_max = std::max(probe.l_pi_max, dprob / dist);
        }
    }
    return probe;
}

/// Induced chain at a softmax parameter vector.
inline InducedChain induced_chain(const FiniteMdp& mdp, const SoftmaxPolicy& policy,
                                  const Vec& theta) {
    require(policy.n_states == mdp.n_states && policy.n_actions == mdp.n_actions,
            ErrorKind::Parameter, "induced_chain: policy/mdp dimension mismatch");
    return induced_chain(mdp, policy.prob_table(theta));
}

} // namespace stac
