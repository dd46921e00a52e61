#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "stac/error.hpp"
#include "stac/features.hpp"
#include "stac/linalg.hpp"
#include "stac/mdp.hpp"
#include "stac/policy.hpp"

namespace stac {

inline constexpr double kMarginTol = 1e-10;

/// Every analytic quantity the theory needs at a fixed policy parameter.
/// All members are exact up to the dense-solver tolerance (1e-10 residuals).
struct OracleBundle {
    Vec mu;                  // stationary state distribution
    double j = 0.0;          // time-average reward J(theta)
    Vec v;                   // differential value, normalized mu^T v = 0
    Mat q;                   // action values, q(s, a)
    Mat a_mat;               // TD mean-path matrix A_theta
    Vec b_vec;               // TD mean-path offset b_theta
    Vec omega_star;          // TD fixed point, b + A omega* = 0
    Vec grad_j;              // exact policy gradient
    double lambda_margin = 0.0;   // -(max eigenvalue of sym part of A)
    double eps_app_theta = 0.0;   // local value of the eps_app integrand
};

// --- stationary distribution -------------------------------------------------

enum class StationaryCheck { Full, ResidualOnly };

/// Unique left fixed point of P_theta on the simplex, solved via the linear
/// system with a normalization row. `Full` additionally cross-checks against
/// a damped power iteration; disagreement marks the instance NonErgodic.
inline Vec stationary_distribution(const InducedChain& chain,
                                   StationaryCheck check = StationaryCheck::Full) {
    const int n = static_cast<int>(chain.p_theta.rows());
    Mat sys = chain.p_theta.transpose() - Mat::Identity(n, n);
    sys.row(n - 1).setOnes();
    Vec rhs = Vec::Zero(n);
    rhs[n - 1] = 1.0;
    Vec mu = solve_checked(sys, rhs, kSolveTol, ErrorKind::NonErgodic, "stationary_distribution");

    if (mu.minCoeff() < -kSolveTol)
        fail(ErrorKind::NonErgodic, "stationary_distribution: negative mass in solution");
    mu = mu.cwiseMax(0.0);
    mu /= mu.sum();

    const double fixed_point_resid = (chain.p_theta.transpose() * mu - mu).cwiseAbs().maxCoeff();
    if (fixed_point_resid > kSolveTol)
        fail(ErrorKind::NonErgodic, "stationary_distribution: fixed-point residual too large");

    if (check == StationaryCheck::Full) {
        // Damped iteration converges for any chain with a unique stationary
        // law; disagreement with the solve exposes a non-unique fixed point.
        Vec nu = Vec::Constant(n, 1.0 / n);
        for (int it = 0; it < 200000; ++it) {
            Vec next = 0.5 * (nu + chain.p_theta.transpose() * nu);
            const double delta = (next - nu).cwiseAbs().maxCoeff();
            nu = next;
            if (delta < 1e-14) break;
        }
        if ((nu - mu).cwiseAbs().maxCoeff() > 1e-8)
            fail(ErrorKind::NonErgodic, "stationary_distribution: power-iteration probe disagrees");
    }
    return mu;
}

inline double average_reward(const Vec& mu, const Vec& r_theta) {
    return mu.dot(r_theta);
}

/// Solves the Poisson equation (I - P_theta) V = r_theta - J, pinned to the
/// mu^T V = 0 representative via the nonsingular system (I - P + 1 mu^T).
inline Vec value_function(const InducedChain& chain, const Vec& mu, double j) {
    const int n = static_cast<int>(chain.p_theta.rows());
    Mat sys = Mat::Identity(n, n) - chain.p_theta + Vec::Ones(n) * mu.transpose();
    Vec rhs = chain.r_theta - Vec::Constant(n, j);
    Vec v = solve_checked(sys, rhs, kSolveTol, ErrorKind::NonErgodic, "value_function");
    const double poisson_resid =
        ((Mat::Identity(n, n) - chain.p_theta) * v - rhs).cwiseAbs().maxCoeff();
    if (poisson_resid > kSolveTol)
        fail(ErrorKind::NonErgodic, "value_function: Poisson residual too large");
    return v;
}

inline Mat q_function(const FiniteMdp& mdp, const Vec& v, double j) {
    Mat q(mdp.n_states, mdp.n_actions);
    for (int a = 0; a < mdp.n_actions; ++a)
        q.col(a) = mdp.reward.col(a) - Vec::Constant(mdp.n_states, j) + mdp.transition[a] * v;
    return q;
}

/// A_theta = Phi^T D (P_theta - I) Phi and b_theta = Phi^T D (r_theta - J).
inline std::pair<Mat, Vec> td_matrices(const InducedChain& chain, const FeatureMap& map,
                                       const Vec& mu, double j) {
    const int n = static_cast<int>(mu.size());
    const Mat& phi_table = map.table;
    Mat weighted = mu.asDiagonal() * phi_table;  // D Phi
    Mat a = phi_table.transpose() *
            (mu.asDiagonal() * (chain.p_theta * phi_table - phi_table));
    Vec b = weighted.transpose() * (chain.r_theta - Vec::Constant(n, j));
    return {std::move(a), std::move(b)};
}

/// Negative-definiteness margin of A under the symmetric-part reading:
/// lambda = -max eig((A + A^T)/2). Values at or below tolerance reject the
/// instance for theory-mode use.
inline double exploration_margin(const Mat& a) {
    const double lambda = -max_symmetric_eigenvalue(a);
    if (lambda <= kMarginTol)
        fail(ErrorKind::AssumptionOneViolated,
             "exploration_margin: A_theta is not negative definite (lambda = " +
                 std::to_string(lambda) + ")");
    return lambda;
}

inline Vec td_fixed_point(const Mat& a, const Vec& b) {
    return solve_checked(a, -b, kSolveTol, ErrorKind::AssumptionOneViolated, "td_fixed_point");
}

/// Policy gradient theorem evaluated as the exact finite sum
/// sum_s mu(s) sum_a pi(a|s) Q(s,a) grad log pi(a|s).
inline Vec exact_policy_gradient(const FiniteMdp& mdp, const SoftmaxPolicy& policy,
                                 const Vec& mu, const Mat& probs, const Mat& q) {
    Vec grad = Vec::Zero(policy.param_dim());
    for (int s = 0; s < mdp.n_states; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) {
            const double w = mu[s] * probs(s, a) * q(s, a);
            for (int b = 0; b < mdp.n_actions; ++b)
                grad[policy.coord(s, b)] += w * ((b == a ? 1.0 : 0.0) - probs(s, b));
        }
    }
    return grad;
}

inline Vec exact_policy_gradient(const FiniteMdp& mdp, const SoftmaxPolicy& policy,
                                 const Vec& theta) {
    InducedChain chain = induced_chain(mdp, policy, theta);
    Vec mu = stationary_distribution(chain);
    const double j = average_reward(mu, chain.r_theta);
    Vec v = value_function(chain, mu, j);
    Mat q = q_function(mdp, v, j);
    return exact_policy_gradient(mdp, policy, mu, policy.prob_table(theta), q);
}

/// sqrt(sum_s mu(s) (phi(s)^T omega* - V(s))^2) at one parameter point.
inline double local_approximation_error(const FeatureMap& map, const Vec& mu, const Vec& v,
                                        const Vec& omega_star) {
    Vec residual = map.table * omega_star - v;
    return std::sqrt(mu.dot(residual.cwiseAbs2()));
}

/// Full bundle at one theta. Throws NonErgodic / AssumptionOneViolated when
/// the instance leaves the theory's admissible set.
inline OracleBundle compute_bundle(const FiniteMdp& mdp, const SoftmaxPolicy& policy,
                                   const FeatureMap& map, const Vec& theta) {
    require(map.n_states() == mdp.n_states, ErrorKind::Parameter,
            "compute_bundle: feature map / mdp dimension mismatch");
    OracleBundle bundle;
    Mat probs = policy.prob_table(theta);
    InducedChain chain = induced_chain(mdp, probs);
    bundle.mu = stationary_distribution(chain);
    bundle.j = average_reward(bundle.mu, chain.r_theta);
    bundle.v = value_function(chain, bundle.mu, bundle.j);
    bundle.q = q_function(mdp, bundle.v, bundle.j);
    std::tie(bundle.a_mat, bundle.b_vec) = td_matrices(chain, map, bundle.mu, bundle.j);
    bundle.lambda_margin = exploration_margin(bundle.a_mat);
    bundle.omega_star = td_fixed_point(bundle.a_mat, bundle.b_vec);
    bundle.grad_j = exact_policy_gradient(mdp, policy, bundle.mu, probs, bundle.q);
    bundle.eps_app_theta = local_approximation_error(map, bundle.mu, bundle.v, bundle.omega_star);
    return bundle;
}

/// Max of the local approximation error over a declared probe set; a lower
/// estimate of the paper's sup over all theta, and reported as such.
inline double approximation_error(const FiniteMdp& mdp, const SoftmaxPolicy& policy,
                                  const FeatureMap& map, const std::vector<Vec>& theta_samples) {
    require(!theta_samples.empty(), ErrorKind::Parameter,
            "approximation_error: empty probe set");
    double worst = 0.0;
    for (const Vec& theta : theta_samples) {
        OracleBundle bundle = compute_bundle(mdp, policy, map, theta);
        worst = std::max(worst, bundle.eps_app_theta);
    }
    return worst;
}

// --- mixing ------------------------------------------------------------------

struct MixingEstimate {
    double m = 1.0;
    double rho = 1e-6;
    std::vector<double> tv;  // tv[i] = worst-start total variation at tau = i+1
};

/// Fits d_TV(P^tau(s, .), mu) <= m rho^tau over tau = 1..tau_max by least
/// squares on the log decay, then inflates m so the bound holds everywhere
/// on the probed range. Chains that mix exactly in one step report the
/// degenerate pair (m = 1, rho = 1e-6).
inline MixingEstimate mixing_estimate(const InducedChain& chain, int tau_max = 64) {
    const int n = static_cast<int>(chain.p_theta.rows());
    Vec mu = stationary_distribution(chain);

    MixingEstimate est;
    est.tv.reserve(tau_max);
    Mat power = chain.p_theta;
    for (int tau = 1; tau <= tau_max; ++tau) {
        double worst = 0.0;
        for (int s = 0; s < n; ++s)
            worst = std::max(worst, 0.5 * (power.row(s).transpose() - mu).cwiseAbs().sum());
        est.tv.push_back(worst);
        if (tau < tau_max) power = power * chain.p_theta;
    }

    constexpr double kFloor = 1e-14;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (int i = 0; i < static_cast<int>(est.tv.size()); ++i) {
        if (est.tv[i] <= kFloor) continue;
        const double x = static_cast<double>(i + 1);
        const double y = std::log(est.tv[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    if (count >= 2) {
        const double denom = count * sxx - sx * sx;
        const double slope = (count * sxy - sx * sy) / denom;
        const double intercept = (sy - slope * sx) / count;
        est.rho = std::clamp(std::exp(slope), 1e-6, 1.0 - 1e-6);
        est.m = std::max(1.0, std::exp(intercept));
    } else if (count == 1) {
        est.rho = std::clamp(est.tv[0], 1e-6, 1.0 - 1e-6);
        est.m = 1.0;
    }
    // Make the bound valid on the probed horizon rather than best-fit only.
    for (int i = 0; i < static_cast<int>(est.tv.size()); ++i)
        est.m = std::max(est.m, est.tv[i] / std::pow(est.rho, i + 1));
    return est;
}

// --- derivatives of oracle quantities -----------------------------------------

/// Central finite differences of the TD fixed point over theta; columns are
/// indexed by the theta coordinate. Houses the grad omega* object used by
/// the Xi noise functional.
inline Mat critic_target_jacobian(const FiniteMdp& mdp, const SoftmaxPolicy& policy,
                                  const FeatureMap& map, const Vec& theta,
                                  double step = 1e-5) {
    const int p = policy.param_dim();
    Mat jac(map.dim, p);
    Vec probe = theta;
    for (int i = 0; i < p; ++i) {
        probe[i] = theta[i] + step;
        Vec plus = compute_bundle(mdp, policy, map, probe).omega_star;
        probe[i] = theta[i] - step;
        Vec minus = compute_bundle(mdp, policy, map, probe).omega_star;
        probe[i] = theta[i];
        jac.col(i) = (plus - minus) / (2.0 * step);
    }
    return jac;
}

/// Central finite differences of the exact J; oracle for gradient tests.
inline Vec finite_difference_gradient(const FiniteMdp& mdp, const SoftmaxPolicy& policy,
                                      const Vec& theta, double step = 1e-5) {
    const int p = policy.param_dim();
    Vec grad(p);
    Vec probe = theta;
    auto j_at = [&](const Vec& t) {
        InducedChain chain = induced_chain(mdp, policy, t);
        Vec mu = stationary_distribution(chain);
        return average_reward(mu, chain.r_theta);
    };
    for (int i = 0; i < p; ++i) {
        probe[i] = theta[i] + step;
        const double plus = j_at(probe);
        probe[i] = theta[i] - step;
        const double minus = j_at(probe);
        probe[i] = theta[i];
        grad[i] = (plus - minus) / (2.0 * step);
    }
    return grad;
}

// --- instance admission --------------------------------------------------------

/// Primitivity (irreducible + aperiodic) of the union support chain via the
/// Wielandt exponent. Softmax policies put positive mass on every action, so
/// the support of P_theta equals the union support for every finite theta;
/// one check covers the whole parameter space.
inline bool has_primitive_support(const FiniteMdp& mdp) {
    const int n = mdp.n_states;
    Mat support = Mat::Zero(n, n);
    for (const Mat& pa : mdp.transition) support += pa;
    support = (support.array() > 0.0).cast<double>();

    const int wielandt = n * n - 2 * n + 2;
    int exponent = 1;
    while (exponent < wielandt) {
        support = support * support;
        support = (support.array() > 0.0).cast<double>();
        exponent *= 2;
    }
    return support.minCoeff() > 0.0;
}

/// Garnet generation with the ergodicity admission rule: instances whose
/// union support chain is not primitive are rejected and the next seed is
/// tried, so Assumption 2 holds for every softmax policy on the result.
inline FiniteMdp generate_ergodic_garnet(int n_states, int n_actions, int branching,
                                         std::uint64_t seed, double u_r = 1.0,
                                         int max_attempts = 1000) {
    for (int k = 0; k < max_attempts; ++k) {
        FiniteMdp mdp = generate_garnet(n_states, n_actions, branching, seed + k, u_r);
        if (!has_primitive_support(mdp)) continue;
        SoftmaxPolicy policy = make_policy(mdp);
        try {
            InducedChain chain = induced_chain(mdp, policy, Vec::Zero(policy.param_dim()));
            stationary_distribution(chain);
            return mdp;
        } catch (const Error&) {
            continue;
        }
    }
    fail(ErrorKind::Parameter, "generate_ergodic_garnet: no ergodic instance found");
}

} // namespace stac
