#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "stac/error.hpp"
#include "stac/linalg.hpp"
#include "stac/mdp.hpp"
#include "stac/oracle.hpp"
#include "stac/policy.hpp"
#include "stac/simulate.hpp"

namespace stac {

/// One sampled transition tuple O = (s, a, s').
struct Observation {
    int s = 0;
    int a = 0;
    int s_next = 0;
};

// --- error trajectories and windowed means -----------------------------------

/// Learning errors evaluated against a fresh oracle bundle at each iterate
/// checkpoint: y_t = eta_t - J(theta_t), ||omega_t - omega*(theta_t)||^2,
/// and ||grad J(theta_t)||^2.
struct ErrorTrajectories {
    std::vector<std::int64_t> t;
    std::vector<double> y;
    std::vector<double> z_norm_sq;
    std::vector<double> grad_norm_sq;
    std::vector<std::int64_t> failed_checkpoints;  // oracle rejected these iterates

    bool clean() const { return failed_checkpoints.empty(); }
};

inline ErrorTrajectories error_trajectories(const Trace& trace, const FiniteMdp& mdp,
                                            const SoftmaxPolicy& policy, const FeatureMap& map) {
    ErrorTrajectories out;
    out.t.reserve(trace.checkpoints.size());
    for (const Checkpoint& cp : trace.checkpoints) {
        try {
            OracleBundle bundle = compute_bundle(mdp, policy, map, cp.theta);
            out.t.push_back(cp.t);
            out.y.push_back(cp.eta - bundle.j);
            out.z_norm_sq.push_back((cp.omega - bundle.omega_star).squaredNorm());
            out.grad_norm_sq.push_back(bundle.grad_j.squaredNorm());
        } catch (const Error&) {
            out.failed_checkpoints.push_back(cp.t);
        }
    }
    return out;
}

/// Windowed mean squared errors of Theorems 1-2, averaged over the window
/// [tau_T, T-1] (subsampled at the checkpoint cadence) and over seeds.
/// Standard errors are across-seed.
struct WindowedMeans {
    double y_mean = 0.0;
    double z_mean = 0.0;
    double g_mean = 0.0;
    double y_stderr = 0.0;
    double z_stderr = 0.0;
    double g_stderr = 0.0;
    std::int64_t tau = 0;
    std::int64_t t_total = 0;
    int n_seeds = 0;
    int n_excluded = 0;  // seeds dropped because some checkpoint was rejected
};

inline WindowedMeans windowed_means(const std::vector<ErrorTrajectories>& per_seed,
                                    std::int64_t tau, std::int64_t t_total) {
    require(t_total >= 2 * tau, ErrorKind::Parameter,
            "windowed_means: requires T >= 2 tau_T");
    require(!per_seed.empty(), ErrorKind::Parameter, "windowed_means: no trajectories");

    WindowedMeans out;
    out.tau = tau;
    out.t_total = t_total;
    std::vector<double> y_per_seed, z_per_seed, g_per_seed;
    for (const ErrorTrajectories& traj : per_seed) {
        if (!traj.clean()) {
            ++out.n_excluded;
            continue;
        }
        double y = 0, z = 0, g = 0;
        std::int64_t count = 0;
        for (std::size_t i = 0; i < traj.t.size(); ++i) {
            if (traj.t[i] < tau || traj.t[i] > t_total - 1) continue;
            y += traj.y[i] * traj.y[i];
            z += traj.z_norm_sq[i];
            g += traj.grad_norm_sq[i];
            ++count;
        }
        require(count > 0, ErrorKind::Parameter,
                "windowed_means: no checkpoints inside the averaging window [" +
                    std::to_string(tau) + ", " + std::to_string(t_total - 1) +
                    "]; reduce checkpoint_every or increase T");
        y_per_seed.push_back(y / count);
        z_per_seed.push_back(z / count);
        g_per_seed.push_back(g / count);
    }
    require(!y_per_seed.empty(), ErrorKind::Parameter,
            "windowed_means: every seed was excluded");
    out.n_seeds = static_cast<int>(y_per_seed.size());

    auto mean_and_stderr = [](const std::vector<double>& xs, double& mean, double& se) {
        mean = 0.0;
        for (double x : xs) mean += x;
        mean /= xs.size();
        if (xs.size() < 2) {
            se = 0.0;
            return;
        }
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        var /= (xs.size() - 1);
        se = std::sqrt(var / xs.size());
    };
    mean_and_stderr(y_per_seed, out.y_mean, out.y_stderr);
    mean_and_stderr(z_per_seed, out.z_mean, out.z_stderr);
    mean_and_stderr(g_per_seed, out.g_mean, out.g_stderr);
    return out;
}

// --- rate fitting --------------------------------------------------------------

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 1.0;
};

/// Least-squares line on (log T, log value); the empirical rate check.
inline RateFit fit_rate(const std::vector<std::pair<double, double>>& pairs) {
    require(pairs.size() >= 3, ErrorKind::Parameter, "fit_rate: need at least 3 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [t, value] : pairs) {
        require(t > 0.0 && value > 0.0, ErrorKind::Parameter,
                "fit_rate: values must be positive");
        const double x = std::log(t);
        const double y = std::log(value);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(pairs.size());
    const double denom = n * sxx - sx * sx;
    require(std::abs(denom) > 1e-12, ErrorKind::Parameter, "fit_rate: degenerate abscissae");
    RateFit fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double y_bar = sy / n;
    for (const auto& [t, value] : pairs) {
        const double y = std::log(value);
        const double fitted = fit.intercept + fit.slope * std::log(t);
        ss_res += (y - fitted) * (y - fitted);
        ss_tot += (y - y_bar) * (y - y_bar);
    }
    fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

// --- appendix noise machinery ---------------------------------------------------

/// The six semi-gradient decomposition functions, evaluated literally.
struct SemiGradientTerms {
    Vec g;              // [r - J + (phi' - phi)^T omega] phi
    Vec gbar;           // b + A omega
    Vec delta_g;        // [J - eta] phi
    Vec h;              // TD term at omega*, times grad log pi
    Vec delta_h;        // (J - eta + (phi' - phi)^T (omega - omega*)) grad log pi
    Vec delta_h_prime;  // difference of value-fit residuals, times grad log pi
};

inline SemiGradientTerms semigradient_terms(const FiniteMdp& mdp, const SoftmaxPolicy& policy,
                                            const FeatureMap& map, const Observation& obs,
                                            double eta, const Vec& omega, const Vec& theta,
                                            const OracleBundle& bundle) {
    SemiGradientTerms terms;
    const Vec phi_s = map.table.row(obs.s).transpose();
    const Vec phi_next = map.table.row(obs.s_next).transpose();
    const Vec log_grad = policy.log_grad(theta, obs.s, obs.a);
    const double reward = mdp.r(obs.s, obs.a);
    const double drift = (phi_next - phi_s).dot(omega);
    const double drift_star = (phi_next - phi_s).dot(bundle.omega_star);

    terms.g = (reward - bundle.j + drift) * phi_s;
    terms.gbar = bundle.b_vec + bundle.a_mat * omega;
    terms.delta_g = (bundle.j - eta) * phi_s;
    terms.h = (reward - bundle.j + drift_star) * log_grad;
    terms.delta_h =
        (bundle.j - eta + (phi_next - phi_s).dot(omega - bundle.omega_star)) * log_grad;
    const double fit_residual_next = phi_next.dot(bundle.omega_star) - bundle.v[obs.s_next];
    const double fit_residual = phi_s.dot(bundle.omega_star) - bundle.v[obs.s];
    terms.delta_h_prime = (fit_residual_next - fit_residual) * log_grad;
    return terms;
}

/// Exact stationary expectation E_{O'}[h(O', theta)] as the finite sum over
/// (s, a, s') weighted by mu, pi, and P.
inline Vec expected_h(const FiniteMdp& mdp, const SoftmaxPolicy& policy, const FeatureMap& map,
                      const Vec& theta, const OracleBundle& bundle) {
    const Mat probs = policy.prob_table(theta);
    Vec out = Vec::Zero(policy.param_dim());
    for (int s = 0; s < mdp.n_states; ++s) {
        const Vec phi_s = map.table.row(s).transpose();
        for (int a = 0; a < mdp.n_actions; ++a) {
            const double mean_next_fit =
                (mdp.transition[a].row(s) * map.table).dot(bundle.omega_star);
            const double coeff = mdp.r(s, a) - bundle.j + mean_next_fit -
                                 phi_s.dot(bundle.omega_star);
            const double w = bundle.mu[s] * probs(s, a) * coeff;
            for (int b = 0; b < mdp.n_actions; ++b)
                out[policy.coord(s, b)] += w * ((b == a ? 1.0 : 0.0) - probs(s, b));
        }
    }
    return out;
}

/// The four Markovian-noise functionals. Theta and Xi compare against the
/// exact stationary expectation of h.
struct BiasFunctionals {
    double phi_f = 0.0;    // (eta - J)(r - J)
    double psi_f = 0.0;    // <omega - omega*, g - gbar>
    double theta_f = 0.0;  // <grad J, E[h] - h>
    double xi_f = 0.0;     // <omega - omega*, (grad omega*)^T (E[h] - h)>
};

inline BiasFunctionals bias_functionals(const FiniteMdp& mdp, const SoftmaxPolicy& policy,
                                        const FeatureMap& map, const Observation& obs,
                                        double eta, const Vec& omega, const Vec& theta,
                                        const OracleBundle& bundle, const Mat& jacobian,
                                        const Vec& expected_h_value) {
    SemiGradientTerms terms =
        semigradient_terms(mdp, policy, map, obs, eta, omega, theta, bundle);
    const double reward = mdp.r(obs.s, obs.a);
    BiasFunctionals out;
    out.phi_f = (eta - bundle.j) * (reward - bundle.j);
    const Vec z = omega - bundle.omega_star;
    out.psi_f = z.dot(terms.g - terms.gbar);
    const Vec h_gap = expected_h_value - terms.h;
    out.theta_f = bundle.grad_j.dot(h_gap);
    out.xi_f = z.dot(jacobian * h_gap);
    return out;
}

// --- constant calculus -----------------------------------------------------------

/// Every closed-form constant in the analysis, evaluated literally from the
/// worst-case (lambda, m, rho) over a declared probe set. The optional probe
/// fields exist for reporting only and gate nothing.
struct PaperConstants {
    double u_r = 0.0;
    double u_omega = 0.0;
    double u_delta = 0.0;  // 2 u_r + 2 u_omega
    double g_bound = 0.0;  // u_delta * b_bound
    double lambda = 0.0;
    double m = 0.0;
    double rho = 0.0;
    double l_j = 0.0;
    double l_star = 0.0;
    double b_bound = 0.0;
    double l_pi = 0.0;
    double l_l = 0.0;
    double l1 = 0.0;  // c g_bound
    double l2 = 0.0;  // 2 / lambda
    double l3 = 0.0;  // 2 c b_bound l_star / lambda
    double l4 = 0.0;  // b_bound
    double c = 0.0;
    double c_threshold = 0.0;
    std::optional<double> l_jprime;
    std::optional<double> l_s;
    std::optional<double> l_mu;
};

/// ceil(log_rho(1/m)) clamped below at zero; the constants are upper bounds,
/// so clamping is conservative when the raw expression goes negative.
inline double clamped_log_term(double m, double rho) {
    const double raw = std::log(1.0 / m) / std::log(rho);
    return std::max(0.0, std::ceil(raw));
}

inline PaperConstants paper_constants(const FiniteMdp& mdp, const SoftmaxPolicy& policy,
                                      const PolicyConstants& consts, const FeatureMap& map,
                                      const std::vector<Vec>& probe_thetas,
                                      std::optional<double> c_choice, int mixing_tau_max = 64) {
    require(!probe_thetas.empty(), ErrorKind::Parameter, "paper_constants: empty probe set");
    PaperConstants pc;
    pc.u_r = mdp.u_r;
    pc.b_bound = consts.b_bound;
    pc.l_pi = consts.l_pi;
    pc.l_l = consts.l_l;

    double lambda = std::numeric_limits<double>::infinity();
    double m = 1.0;
    double rho = 1e-6;
    for (const Vec& theta : probe_thetas) {
        OracleBundle bundle = compute_bundle(mdp, policy, map, theta);
        lambda = std::min(lambda, bundle.lambda_margin);
        MixingEstimate mix = mixing_estimate(induced_chain(mdp, policy, theta), mixing_tau_max);
        m = std::max(m, mix.m);
        rho = std::max(rho, mix.rho);
    }
    require(lambda > 0.0, ErrorKind::AssumptionOneViolated,
            "paper_constants: nonpositive exploration margin");
    pc.lambda = lambda;
    pc.m = m;
    pc.rho = rho;

    pc.u_omega = 2.0 * pc.u_r / pc.lambda;
    pc.u_delta = 2.0 * pc.u_r + 2.0 * pc.u_omega;
    pc.g_bound = pc.u_delta * pc.b_bound;

    const double bracket = 1.0 + clamped_log_term(pc.m, pc.rho) + 1.0 / (1.0 - pc.rho);
    const double actions = static_cast<double>(mdp.n_actions);
    pc.l_j = 2.0 * pc.u_r * actions * pc.l_pi * bracket;
    pc.l_star = (2.0 * pc.u_r / (pc.lambda * pc.lambda) + 3.0 * pc.u_r / pc.lambda) *
                actions * pc.l_pi * bracket;

    const double b = pc.b_bound;
    pc.c_threshold = std::min(
        pc.lambda / (32.0 * b * pc.l_star),
        pc.lambda * pc.lambda /
            (pc.g_bound * (pc.lambda * pc.lambda + 3.0 * b * b * pc.lambda * pc.lambda +
                           64.0 * b * b)));

    pc.c = c_choice.value_or(pc.c_threshold);
    require(pc.c > 0.0, ErrorKind::Parameter, "paper_constants: c must be positive");
    pc.l1 = pc.c * pc.g_bound;
    pc.l2 = 2.0 / pc.lambda;
    pc.l3 = 2.0 * pc.c * b * pc.l_star / pc.lambda;
    pc.l4 = b;
    return pc;
}

/// The two stepsize-ratio conditions from the interconnected-system step.
struct StepsizeVerdict {
    double lhs_a = 0.0;  // 4 l3
    double lhs_b = 0.0;  // l1 (1 + 2 l4^2 + 8 l4^2 (2 l2^2 + l3))
    bool condition_a = false;
    bool condition_b = false;
    bool pass = false;
};

inline StepsizeVerdict check_stepsize_condition(const PaperConstants& pc) {
    StepsizeVerdict verdict;
    verdict.lhs_a = 4.0 * pc.l3;
    verdict.lhs_b =
        pc.l1 * (1.0 + 2.0 * pc.l4 * pc.l4 +
                 8.0 * pc.l4 * pc.l4 * (2.0 * pc.l2 * pc.l2 + pc.l3));
    // 1e-12 slack so boundary choices (e.g. c exactly at threshold) do not
    // flip on rounding.
    verdict.condition_a = verdict.lhs_a <= 0.25 + 1e-12;
    verdict.condition_b = verdict.lhs_b <= 1.0 + 1e-12;
    verdict.pass = verdict.condition_a && verdict.condition_b;
    return verdict;
}

/// Numeric probes for the existence-only smoothness constants; reported in
/// the constants dump, never used in gating logic.
inline void probe_smoothness_constants(PaperConstants& pc, const FiniteMdp& mdp,
                                       const SoftmaxPolicy& policy, const FeatureMap& map,
                                       int n_pairs, std::uint64_t seed,
                                       double theta_scale = 1.0) {
    Mt64Stream rng(seed);
    const int p = policy.param_dim();
    auto random_theta = [&] {
        Vec theta(p);
        for (int i = 0; i < p; ++i) theta[i] = (2.0 * rng.next() - 1.0) * theta_scale;
        return theta;
    };
    double l_jprime = 0.0, l_s = 0.0;
    for (int k = 0; k < n_pairs; ++k) {
        const Vec theta1 = random_theta();
        const Vec theta2 = random_theta();
        const double dist = (theta1 - theta2).norm();
        if (dist < 1e-9) continue;
        const Vec grad1 = exact_policy_gradient(mdp, policy, theta1);
        const Vec grad2 = exact_policy_gradient(mdp, policy, theta2);
        l_jprime = std::max(l_jprime, (grad1 - grad2).norm() / dist);
        const Mat jac1 = critic_target_jacobian(mdp, policy, map, theta1);
        const Mat jac2 = critic_target_jacobian(mdp, policy, map, theta2);
        l_s = std::max(l_s, (jac1 - jac2).norm() / dist);
    }
    pc.l_jprime = l_jprime;
    pc.l_s = l_s;
}

} // namespace stac
