#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "stac/oracle.hpp"

using namespace stac;

namespace {

Vec random_theta(const SoftmaxPolicy& policy, Mt64Stream& rng, double scale = 1.0) {
    Vec theta(policy.param_dim());
    for (int i = 0; i < theta.size(); ++i) theta[i] = (2.0 * rng.next() - 1.0) * scale;
    return theta;
}

FiniteMdp constant_reward_mdp(double value) {
    FiniteMdp mdp = generate_ergodic_garnet(4, 2, 2, 5);
    mdp.reward.setConstant(value);
    return mdp;
}

} // namespace

TEST_CASE("M2 fixture bundle matches the hand-derived oracle values") {
    FiniteMdp mdp = make_m2();
    SoftmaxPolicy policy = make_policy(mdp);
    FeatureMap map = make_m2_fixture_features();
    OracleBundle bundle = compute_bundle(mdp, policy, map, Vec::Zero(4));

    CHECK(std::abs(bundle.mu[0] - 0.5) <= 1e-10);
    CHECK(std::abs(bundle.mu[1] - 0.5) <= 1e-10);
    CHECK(std::abs(bundle.j - 0.5) <= 1e-10);
    CHECK(std::abs(bundle.v[0] + 0.5) <= 1e-10);
    CHECK(std::abs(bundle.v[1] - 0.5) <= 1e-10);
    CHECK(std::abs(bundle.q(0, 0) + 0.9) <= 1e-10);
    CHECK(std::abs(bundle.q(0, 1) + 0.1) <= 1e-10);
    CHECK(std::abs(bundle.q(1, 0) - 0.1) <= 1e-10);
    CHECK(std::abs(bundle.q(1, 1) - 0.9) <= 1e-10);
    CHECK(std::abs(bundle.a_mat(0, 0) + 1.0) <= 1e-10);
    CHECK(std::abs(bundle.b_vec[0] + 0.5) <= 1e-10);
    CHECK(std::abs(bundle.omega_star[0] + 0.5) <= 1e-10);
    CHECK(std::abs(bundle.lambda_margin - 1.0) <= 1e-10);
    CHECK(bundle.eps_app_theta <= 1e-10);

    Vec expected_grad(4);
    expected_grad << -0.1, 0.1, -0.1, 0.1;
    CHECK((bundle.grad_j - expected_grad).cwiseAbs().maxCoeff() <= 1e-10);

    // phi(s)^T omega* reproduces V exactly for the fixture map.
    CHECK((map.table * bundle.omega_star - bundle.v).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("identity chain is rejected as non-ergodic") {
    InducedChain chain;
    chain.p_theta = Mat::Identity(3, 3);
    chain.r_theta = Vec::Zero(3);
    CHECK_THROWS_MATCHES(stationary_distribution(chain), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.kind() == ErrorKind::NonErgodic;
                         }));
}

TEST_CASE("stationary distribution satisfies its defining equation on random instances") {
    Mt64Stream rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        FiniteMdp mdp = generate_ergodic_garnet(3 + trial % 8, 2 + trial % 3, 2, 100 + trial);
        SoftmaxPolicy policy = make_policy(mdp);
        Vec theta = random_theta(policy, rng);
        InducedChain chain = induced_chain(mdp, policy, theta);
        Vec mu = stationary_distribution(chain);
        REQUIRE(mu.minCoeff() >= 0.0);
        REQUIRE(std::abs(mu.sum() - 1.0) <= 1e-12);
        REQUIRE((chain.p_theta.transpose() * mu - mu).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("constant reward collapses V, Q, b, omega*, and the gradient") {
    FiniteMdp mdp = constant_reward_mdp(0.25);
    SoftmaxPolicy policy = make_policy(mdp);
    FeatureMap map = make_centered_onehot(mdp.n_states);
    Mt64Stream rng(7);
    Vec theta = random_theta(policy, rng);
    OracleBundle bundle = compute_bundle(mdp, policy, map, theta);
    CHECK(std::abs(bundle.j - 0.25) <= 1e-12);
    CHECK(bundle.v.cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(bundle.q.cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(bundle.b_vec.cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(bundle.omega_star.cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(bundle.grad_j.cwiseAbs().maxCoeff() <= 1e-10);

    FiniteMdp zero = constant_reward_mdp(0.0);
    InducedChain chain = induced_chain(zero, policy, theta);
    Vec mu = stationary_distribution(chain);
    CHECK(std::abs(average_reward(mu, chain.r_theta)) <= 1e-15);
}

TEST_CASE("bundle identities hold across random instances and parameters") {
    Mt64Stream rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        FiniteMdp mdp = generate_ergodic_garnet(3 + trial % 6, 2 + trial % 3, 2, 300 + trial);
        SoftmaxPolicy policy = make_policy(mdp);
        FeatureMap map = make_centered_onehot(mdp.n_states);
        Vec theta = random_theta(policy, rng);
        OracleBundle bundle = compute_bundle(mdp, policy, map, theta);
        InducedChain chain = induced_chain(mdp, policy, theta);

        // Poisson equation and normalization.
        Vec poisson = (Mat::Identity(mdp.n_states, mdp.n_states) - chain.p_theta) * bundle.v -
                      (chain.r_theta - Vec::Constant(mdp.n_states, bundle.j));
        REQUIRE(poisson.cwiseAbs().maxCoeff() <= 1e-10);
        REQUIRE(std::abs(bundle.mu.dot(bundle.v)) <= 1e-10);

        // Bellman consistency: sum_a pi Q = V.
        Mat probs = policy.prob_table(theta);
        Vec v_from_q = (probs.array() * bundle.q.array()).rowwise().sum();
        REQUIRE((v_from_q - bundle.v).cwiseAbs().maxCoeff() <= 1e-10);

        // TD fixed point residual and the norm bounds from the assumptions.
        REQUIRE((bundle.b_vec + bundle.a_mat * bundle.omega_star).cwiseAbs().maxCoeff() <= 1e-10);
        REQUIRE(std::abs(bundle.j) <= mdp.u_r + 1e-12);
        REQUIRE(bundle.omega_star.norm() <=
                2.0 * mdp.u_r / bundle.lambda_margin + 1e-9);
    }
}

TEST_CASE("M2 TD matrices at theta = 0 with the fixture map") {
    FiniteMdp mdp = make_m2();
    SoftmaxPolicy policy = make_policy(mdp);
    InducedChain chain = induced_chain(mdp, policy, Vec::Zero(4));
    Vec mu = stationary_distribution(chain);
    const double j = average_reward(mu, chain.r_theta);
    auto [a, b] = td_matrices(chain, make_m2_fixture_features(), mu, j);
    CHECK(std::abs(a(0, 0) + 1.0) <= 1e-12);
    CHECK(std::abs(b[0] + 0.5) <= 1e-12);
}

TEST_CASE("monte-carlo mean of the TD increment matches b + A omega") {
    FiniteMdp mdp = make_m2();
    SoftmaxPolicy policy = make_policy(mdp);
    FeatureMap map = make_m2_fixture_features();
    Mt64Stream rng(19);
    Vec theta = random_theta(policy, rng, 0.5);
    OracleBundle bundle = compute_bundle(mdp, policy, map, theta);
    Mat probs = policy.prob_table(theta);
    Vec omega(1);
    omega << 0.37;
    Vec expected = bundle.b_vec + bundle.a_mat * omega;

    const int n = 1000000;
    Mt64Stream draws(101);
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const int s = sample_categorical(bundle.mu, draws.next());
        const int a = sample_categorical(probs.row(s), draws.next());
        const int s_next = sample_categorical(mdp.transition[a].row(s), draws.next());
        const double g = (mdp.r(s, a) - bundle.j +
                          (map.table.row(s_next) - map.table.row(s)).dot(omega)) *
                         map.table(s, 0);
        sum += g;
        sum_sq += g * g;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum_sq / n - mean * mean) / n);
    REQUIRE(std::abs(mean - expected[0]) <= 4.0 * se);
}

TEST_CASE("td_fixed_point solves b = 0 and keeps residuals tight on garnets") {
    Mat a(2, 2);
    a << -1.0, 0.2, -0.1, -0.8;
    CHECK(td_fixed_point(a, Vec::Zero(2)).cwiseAbs().maxCoeff() == 0.0);

    Mt64Stream rng(29);
    for (int trial = 0; trial < 20; ++trial) {
        FiniteMdp mdp = generate_ergodic_garnet(4 + trial % 5, 2, 2, 500 + trial);
        SoftmaxPolicy policy = make_policy(mdp);
        FeatureMap map = make_centered_onehot(mdp.n_states);
        Vec theta = random_theta(policy, rng);
        InducedChain chain = induced_chain(mdp, policy, theta);
        Vec mu = stationary_distribution(chain);
        const double j = average_reward(mu, chain.r_theta);
        auto [a_mat, b_vec] = td_matrices(chain, map, mu, j);
        Vec omega_star = td_fixed_point(a_mat, b_vec);
        REQUIRE((b_vec + a_mat * omega_star).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("exploration margin is 1 for the fixture and rejects degenerate A") {
    Mat a(1, 1);
    a << -1.0;
    CHECK(std::abs(exploration_margin(a) - 1.0) <= 1e-12);
    CHECK_THROWS_MATCHES(exploration_margin(Mat::Zero(2, 2)), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.kind() == ErrorKind::AssumptionOneViolated;
                         }));
}

TEST_CASE("uncentered one-hot features violate Assumption 1 on M2") {
    FiniteMdp mdp = make_m2();
    SoftmaxPolicy policy = make_policy(mdp);
    InducedChain chain = induced_chain(mdp, policy, Vec::Zero(4));
    Vec mu = stationary_distribution(chain);
    const double j = average_reward(mu, chain.r_theta);
    FeatureMap onehot;
    onehot.dim = 2;
    onehot.kind = FeatureKind::Custom;
    onehot.table = Mat::Identity(2, 2);
    auto [a_mat, b_vec] = td_matrices(chain, onehot, mu, j);
    CHECK(max_symmetric_eigenvalue(a_mat) >= -1e-10);  // lambda <= 1e-10
    CHECK_THROWS_AS(exploration_margin(a_mat), Error);
}

TEST_CASE("exact policy gradient matches central finite differences") {
    Mt64Stream rng(37);
    for (int instance = 0; instance < 5; ++instance) {
        FiniteMdp mdp =
            generate_ergodic_garnet(3 + instance % 5, 2 + instance % 2, 2, 700 + instance);
        SoftmaxPolicy policy = make_policy(mdp);
        for (int trial = 0; trial < 10; ++trial) {
            Vec theta = random_theta(policy, rng);
            Vec grad = exact_policy_gradient(mdp, policy, theta);
            Vec fd = finite_difference_gradient(mdp, policy, theta);
            REQUIRE((grad - fd).norm() <= 1e-6 * std::max(1.0, grad.norm()));
        }
    }
}

TEST_CASE("baseline shift leaves the exact gradient unchanged") {
    FiniteMdp mdp = generate_ergodic_garnet(5, 3, 2, 11);
    SoftmaxPolicy policy = make_policy(mdp);
    FeatureMap map = make_centered_onehot(5);
    Mt64Stream rng(41);
    Vec theta = random_theta(policy, rng);
    OracleBundle bundle = compute_bundle(mdp, policy, map, theta);
    Mat advantage = bundle.q;
    for (int a = 0; a < mdp.n_actions; ++a) advantage.col(a) -= bundle.v;
    Vec grad_adv =
        exact_policy_gradient(mdp, policy, bundle.mu, policy.prob_table(theta), advantage);
    REQUIRE((grad_adv - bundle.grad_j).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("approximation error is zero for the fixture at theta 0 and positive when rank deficient") {
    FiniteMdp mdp = make_m2();
    SoftmaxPolicy policy = make_policy(mdp);
    FeatureMap map = make_m2_fixture_features();
    std::vector<Vec> probe = {Vec::Zero(4)};
    CHECK(approximation_error(mdp, policy, map, probe) <= 1e-10);

    FiniteMdp garnet = generate_ergodic_garnet(5, 3, 2, 11);
    SoftmaxPolicy gp = make_policy(garnet);
    FeatureMap thin = make_random_bounded(5, 1, 2);
    std::vector<Vec> probes = {Vec::Zero(gp.param_dim())};
    CHECK(approximation_error(garnet, gp, thin, probes) > 1e-4);

    // Singleton probe equals the local value.
    OracleBundle bundle = compute_bundle(garnet, gp, thin, probes[0]);
    CHECK(approximation_error(garnet, gp, thin, probes) ==
          Catch::Approx(bundle.eps_app_theta).margin(1e-15));
}

TEST_CASE("mixing estimate degenerates for the one-step-mixing M2 chain") {
    FiniteMdp mdp = make_m2();
    SoftmaxPolicy policy = make_policy(mdp);
    MixingEstimate est = mixing_estimate(induced_chain(mdp, policy, Vec::Zero(4)));
    CHECK(est.rho == 1e-6);
    CHECK(est.m == 1.0);
    CHECK(est.tv[0] <= 1e-14);
}

TEST_CASE("mixing estimate recovers the second eigenvalue of a two-state chain") {
    InducedChain chain;
    chain.p_theta = Mat(2, 2);
    chain.p_theta << 0.9, 0.1, 0.2, 0.8;
    chain.r_theta = Vec::Zero(2);
    MixingEstimate est = mixing_estimate(chain);
    CHECK(std::abs(est.rho - 0.7) <= 0.05);
    for (std::size_t i = 0; i < est.tv.size(); ++i)
        REQUIRE(est.tv[i] <= est.m * std::pow(est.rho, static_cast<double>(i + 1)) + 1e-12);
}

TEST_CASE("mixing bound holds on random garnet chains") {
    Mt64Stream rng(43);
    for (int trial = 0; trial < 10; ++trial) {
        FiniteMdp mdp = generate_ergodic_garnet(4 + trial % 4, 2, 2, 900 + trial);
        SoftmaxPolicy policy = make_policy(mdp);
        MixingEstimate est = mixing_estimate(induced_chain(mdp, policy, random_theta(policy, rng)));
        for (std::size_t i = 0; i < est.tv.size(); ++i)
            REQUIRE(est.tv[i] <= est.m * std::pow(est.rho, static_cast<double>(i + 1)) + 1e-12);
    }
}

TEST_CASE("critic target jacobian vanishes for constant rewards") {
    FiniteMdp mdp = constant_reward_mdp(0.5);
    SoftmaxPolicy policy = make_policy(mdp);
    FeatureMap map = make_centered_onehot(mdp.n_states);
    Mt64Stream rng(47);
    Mat jac = critic_target_jacobian(mdp, policy, map, random_theta(policy, rng));
    CHECK(jac.cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("critic target jacobian passes a step-halving Richardson check") {
    FiniteMdp mdp = make_m2();
    SoftmaxPolicy policy = make_policy(mdp);
    FeatureMap map = make_m2_fixture_features();
    Vec theta = Vec::Zero(4);
    Mat coarse = critic_target_jacobian(mdp, policy, map, theta, 1e-5);
    Mat fine = critic_target_jacobian(mdp, policy, map, theta, 5e-6);
    CHECK((coarse - fine).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("critic target jacobian matches directional secants") {
    FiniteMdp mdp = generate_ergodic_garnet(4, 2, 2, 21);
    SoftmaxPolicy policy = make_policy(mdp);
    FeatureMap map = make_centered_onehot(4);
    Mt64Stream rng(53);
    Vec theta = random_theta(policy, rng, 0.5);
    Mat jac = critic_target_jacobian(mdp, policy, map, theta);
    for (int trial = 0; trial < 3; ++trial) {
        Vec dir = random_theta(policy, rng, 1.0);
        dir /= dir.norm();
        const double h = 1e-5;
        Vec plus = compute_bundle(mdp, policy, map, theta + h * dir).omega_star;
        Vec minus = compute_bundle(mdp, policy, map, theta - h * dir).omega_star;
        Vec secant = (plus - minus) / (2.0 * h);
        REQUIRE((jac * dir - secant).cwiseAbs().maxCoeff() <= 1e-5);
    }
}

TEST_CASE("primitive support probe accepts M2 and rejects a disconnected chain") {
    CHECK(has_primitive_support(make_m2()));
    FiniteMdp split;
    split.n_states = 2;
    split.n_actions = 1;
    split.u_r = 1.0;
    split.transition = {Mat::Identity(2, 2)};
    split.reward = Mat::Zero(2, 1);
    CHECK_FALSE(has_primitive_support(split));
}
