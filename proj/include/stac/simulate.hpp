#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stac/error.hpp"
#include "stac/features.hpp"
#include "stac/linalg.hpp"
#include "stac/mdp.hpp"
#include "stac/oracle.hpp"
#include "stac/policy.hpp"
#include "stac/rng.hpp"

namespace stac {

/// Constant schedules of Theorem 1: alpha = c/sqrt(T), beta = gamma = 1/sqrt(T).
struct StepSizes {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double c = 0.0;
    std::int64_t t_total = 0;
};

inline StepSizes stepsizes(std::int64_t t_total, double c) {
    require(t_total >= 1, ErrorKind::Parameter, "stepsizes: T must be >= 1");
    require(c > 0.0, ErrorKind::Parameter, "stepsizes: c must be positive");
    const double root_t = std::sqrt(static_cast<double>(t_total));
    return StepSizes{c / root_t, 1.0 / root_t, 1.0 / root_t, c, t_total};
}

/// tau_T = min{ i >= 0 : m rho^(i-1) <= 1/sqrt(T) }, by direct scan.
inline std::int64_t mixing_time_tau(double m, double rho, std::int64_t t_total) {
    require(m > 0.0, ErrorKind::Parameter, "mixing_time_tau: m must be positive");
    require(rho > 0.0 && rho < 1.0, ErrorKind::Parameter, "mixing_time_tau: need rho in (0,1)");
    require(t_total >= 1, ErrorKind::Parameter, "mixing_time_tau: T must be >= 1");
    const double threshold = 1.0 / std::sqrt(static_cast<double>(t_total));
    double value = m / rho;  // m * rho^(i-1) at i = 0
    for (std::int64_t i = 0; i <= 1000000; ++i) {
        if (value <= threshold) return i;
        value *= rho;
    }
    fail(ErrorKind::MixingTooSlow, "mixing_time_tau: scan cap exceeded");
}

/// Euclidean ball projection onto ||omega|| <= u_omega. stableNorm avoids
/// the squared-norm overflow that would otherwise zero out very large
/// inputs instead of scaling them back onto the ball.
inline Vec project(const Vec& omega, double u_omega) {
    require(u_omega > 0.0, ErrorKind::Parameter, "project: u_omega must be positive");
    const double norm = omega.stableNorm();
    if (norm <= u_omega) return omega;
    return omega * (u_omega / norm);
}

/// The three coupled iterates plus the trajectory cursor. `s_current` is
/// meaningful in Markovian mode only; iid mode redraws the state each step.
struct LearnerState {
    double eta = 0.0;
    Vec omega;
    Vec theta;
    std::int64_t t = 0;
    int s_current = 0;
};

struct StepRecord {
    std::int64_t t = 0;
    int s = 0;
    int a = 0;
    double r = 0.0;
    double delta = 0.0;
    double eta = 0.0;        // reward estimator entering step t
    double omega_norm = 0.0; // critic norm entering step t
};

struct Checkpoint {
    std::int64_t t = 0;
    double eta = 0.0;
    Vec theta;
    Vec omega;
};

enum class RunMode { Markovian, Iid };

inline const char* to_string(RunMode mode) {
    return mode == RunMode::Markovian ? "markovian" : "iid";
}

/// Full record of one run: per-step rows at full rate plus iterate
/// checkpoints every `checkpoint_every` steps, and the contract counters
/// (projection bound, TD-error bound, actor displacement bound).
struct Trace {
    RunMode mode = RunMode::Markovian;
    std::uint64_t run_seed = 0;
    std::uint64_t config_hash = 0;
    std::vector<StepRecord> steps;
    std::vector<Checkpoint> checkpoints;
    std::optional<std::int64_t> diverged_at;
    std::int64_t omega_bound_violations = 0;
    std::int64_t delta_bound_violations = 0;
    std::int64_t actor_step_violations = 0;
    std::vector<std::int64_t> omega_star_exits;  // checkpoint steps with ||omega*|| > u_omega
};

struct RunOptions {
    std::int64_t checkpoint_every = 1;
    std::optional<Vec> initial_distribution;  // Markovian s0 law; default uniform
    int mu_refresh_every = 1;                 // iid only; > 1 is a documented approximation
    bool monitor_omega_star = true;           // flag checkpoints whose omega* exits the ball
};

struct RunStreams {
    UniformStream& action;
    UniformStream& transition;
    UniformStream& stationary;
};

/// Three independently seeded streams per run, derived from the master seed
/// by the documented (master, run_index, purpose) splitting rule.
struct SeededStreams {
    Mt64Stream action;
    Mt64Stream transition;
    Mt64Stream stationary;

    SeededStreams(std::uint64_t master, std::uint64_t run_index)
        : action(derive_stream_seed(master, run_index, StreamPurpose::Action)),
          transition(derive_stream_seed(master, run_index, StreamPurpose::Transition)),
          stationary(derive_stream_seed(master, run_index, StreamPurpose::StationaryDraw)) {}

    RunStreams view() { return RunStreams{action, transition, stationary}; }
};

namespace detail {

/// Shared body of the two runners; `iid` switches the state source per
/// Algorithm 2 (s_t from the stationary law, s' never becomes the next state).
inline Trace run_actor_critic(const FiniteMdp& mdp, const SoftmaxPolicy& policy,
                              const FeatureMap& map, Vec theta, Vec omega, double eta,
                              const StepSizes& steps, double u_omega, RunStreams streams,
                              const RunOptions& options, RunMode mode) {
    require(policy.n_states == mdp.n_states && policy.n_actions == mdp.n_actions,
            ErrorKind::Parameter, "run: policy/mdp dimension mismatch");
    require(map.n_states() == mdp.n_states, ErrorKind::Parameter,
            "run: feature map/mdp dimension mismatch");
    policy.check_theta(theta);
    require(omega.size() == map.dim, ErrorKind::Parameter, "run: omega dimension mismatch");
    require(u_omega > 0.0, ErrorKind::Parameter, "run: u_omega must be positive");
    require(options.checkpoint_every >= 1, ErrorKind::Parameter,
            "run: checkpoint_every must be >= 1");
    require(options.mu_refresh_every >= 1, ErrorKind::Parameter,
            "run: mu_refresh_every must be >= 1");

    const double u_delta = 2.0 * mdp.u_r + 2.0 * u_omega;
    const double actor_step_bound =
        steps.alpha * u_delta * policy_constants(policy.n_states, policy.n_actions).b_bound;
    constexpr double kSlack = 1e-12;

    Trace trace;
    trace.mode = mode;
    trace.steps.reserve(static_cast<std::size_t>(steps.t_total));

    LearnerState st{eta, std::move(omega), std::move(theta), 0, 0};
    if (mode == RunMode::Markovian) {
        if (options.initial_distribution) {
            require(options.initial_distribution->size() == mdp.n_states, ErrorKind::Parameter,
                    "run: initial distribution dimension mismatch");
            st.s_current =
                sample_categorical(*options.initial_distribution, streams.stationary.next());
        } else {
            st.s_current = sample_categorical(Vec::Constant(mdp.n_states, 1.0 / mdp.n_states),
                                              streams.stationary.next());
        }
    }

    Vec mu;  // iid mode: current stationary law
    for (st.t = 0; st.t < steps.t_total; ++st.t) {
        if (mode == RunMode::Iid && st.t % options.mu_refresh_every == 0) {
            InducedChain chain = induced_chain(mdp, policy.prob_table(st.theta));
            try {
                mu = stationary_distribution(chain, StationaryCheck::ResidualOnly);
            } catch (const Error& e) {
                fail(ErrorKind::NonErgodic, "run_iid: non-ergodic chain at step " +
                                                std::to_string(st.t) + ": " + e.what());
            }
        }
        if (mode == RunMode::Iid)
            st.s_current = sample_categorical(mu, streams.stationary.next());

        if (st.t % options.checkpoint_every == 0) {
            trace.checkpoints.push_back({st.t, st.eta, st.theta, st.omega});
            if (options.monitor_omega_star) {
                try {
                    OracleBundle bundle = compute_bundle(mdp, policy, map, st.theta);
                    if (bundle.omega_star.norm() > u_omega)
                        trace.omega_star_exits.push_back(st.t);
                } catch (const Error&) {
                    trace.omega_star_exits.push_back(st.t);
                }
            }
        }

        Vec probs = policy.action_probs(st.theta, st.s_current);
        const int action = sample_categorical(probs, streams.action.next());
        const int next_state = sample_categorical(mdp.transition[action].row(st.s_current),
                                                  streams.transition.next());
        const double reward = mdp.r(st.s_current, action);
        const double delta = reward - st.eta +
                             map.table.row(next_state).dot(st.omega) -
                             map.table.row(st.s_current).dot(st.omega);

        trace.steps.push_back(
            {st.t, st.s_current, action, reward, delta, st.eta, st.omega.norm()});

        if (std::abs(st.eta) <= mdp.u_r && std::abs(delta) > u_delta + kSlack)
            ++trace.delta_bound_violations;

        st.eta = st.eta + steps.gamma * (reward - st.eta);
        st.omega = project(
            st.omega + steps.beta * delta * map.table.row(st.s_current).transpose(), u_omega);
        const double grad_norm = policy.add_scaled_log_grad(st.theta, probs, st.s_current,
                                                            action, steps.alpha * delta);

        if (st.omega.norm() > u_omega + kSlack) ++trace.omega_bound_violations;
        if (std::abs(steps.alpha * delta) * grad_norm > actor_step_bound + kSlack)
            ++trace.actor_step_violations;

        if (!std::isfinite(delta) || !std::isfinite(st.eta) ||
            !std::isfinite(st.omega.squaredNorm()) || !std::isfinite(st.theta.squaredNorm())) {
            trace.diverged_at = st.t;
            return trace;
        }

        if (mode == RunMode::Markovian) st.s_current = next_state;
    }
    return trace;
}

} // namespace detail

/// Algorithm 1: single-trajectory Markovian sampling. The state carries over
/// between iterations; RNG consumption order is (action draw, next-state draw)
/// per step, with s0 drawn once from the initial distribution.
inline Trace run_markovian(const FiniteMdp& mdp, const SoftmaxPolicy& policy,
                           const FeatureMap& map, const Vec& theta0, const Vec& omega0,
                           double eta0, const StepSizes& steps, double u_omega,
                           RunStreams streams, const RunOptions& options = {}) {
    return detail::run_actor_critic(mdp, policy, map, theta0, omega0, eta0, steps, u_omega,
                                    streams, options, RunMode::Markovian);
}

/// Algorithm 2: i.i.d. sampling. s_t is drawn fresh from the exact stationary
/// law of the current policy each step (recomputed every `mu_refresh_every`
/// steps), and the TD transition s' does not become the next state.
inline Trace run_iid(const FiniteMdp& mdp, const SoftmaxPolicy& policy, const FeatureMap& map,
                     const Vec& theta0, const Vec& omega0, double eta0, const StepSizes& steps,
                     double u_omega, RunStreams streams, const RunOptions& options = {}) {
    return detail::run_actor_critic(mdp, policy, map, theta0, omega0, eta0, steps, u_omega,
                                    streams, options, RunMode::Iid);
}

} // namespace stac
