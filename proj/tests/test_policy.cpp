#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>

#include "stac/policy.hpp"

using namespace stac;

namespace {

Vec random_theta(const SoftmaxPolicy& policy, Mt64Stream& rng, double scale = 4.0) {
    Vec theta(policy.param_dim());
    for (int i = 0; i < theta.size(); ++i) theta[i] = (2.0 * rng.next() - 1.0) * scale;
    return theta;
}

} // namespace

TEST_CASE("zero logits give the uniform policy") {
    SoftmaxPolicy policy{3, 4};
    Vec probs = policy.action_probs(Vec::Zero(12), 1);
    for (int a = 0; a < 4; ++a) CHECK(probs[a] == Catch::Approx(0.25).margin(1e-15));
}

TEST_CASE("softmax of (ln 3, 0) is (0.75, 0.25)") {
    SoftmaxPolicy policy{1, 2};
    Vec theta(2);
    theta << std::log(3.0), 0.0;
    Vec probs = policy.action_probs(theta, 0);
    CHECK(probs[0] == Catch::Approx(0.75).margin(1e-12));
    CHECK(probs[1] == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("action probabilities sum to one and are shift invariant") {
    SoftmaxPolicy policy{2, 3};
    Mt64Stream rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        Vec theta = random_theta(policy, rng);
        Vec probs = policy.action_probs(theta, 0);
        REQUIRE(std::abs(probs.sum() - 1.0) <= 1e-12);
        REQUIRE(probs.minCoeff() > 0.0);
        Vec shifted = theta;
        for (int a = 0; a < 3; ++a) shifted[policy.coord(0, a)] += 7.25;
        Vec probs_shifted = policy.action_probs(shifted, 0);
        REQUIRE((probs - probs_shifted).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("log gradient at zero logits puts +-1/2 on the state block") {
    SoftmaxPolicy policy{2, 2};
    Vec grad = policy.log_grad(Vec::Zero(4), 0, 0);
    CHECK(grad[policy.coord(0, 0)] == Catch::Approx(0.5).margin(1e-15));
    CHECK(grad[policy.coord(0, 1)] == Catch::Approx(-0.5).margin(1e-15));
    CHECK(grad[policy.coord(1, 0)] == 0.0);
    CHECK(grad[policy.coord(1, 1)] == 0.0);
    CHECK(grad.norm() == Catch::Approx(std::sqrt(0.5)).margin(1e-12));
}

TEST_CASE("score function is mean zero under the policy") {
    SoftmaxPolicy policy{3, 3};
    Mt64Stream rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        Vec theta = random_theta(policy, rng);
        for (int s = 0; s < 3; ++s) {
            Vec probs = policy.action_probs(theta, s);
            Vec mean = Vec::Zero(policy.param_dim());
            for (int a = 0; a < 3; ++a) mean += probs[a] * policy.log_grad(theta, s, a);
            REQUIRE(mean.cwiseAbs().maxCoeff() <= 1e-10);
        }
    }
}

TEST_CASE("log gradient matches central finite differences of log probabilities") {
    SoftmaxPolicy policy{2, 3};
    Mt64Stream rng(23);
    const double step = 1e-5;
    for (int trial = 0; trial < 20; ++trial) {
        Vec theta = random_theta(policy, rng, 2.0);
        const int s = trial % 2;
        const int a = trial % 3;
        Vec analytic = policy.log_grad(theta, s, a);
        Vec fd(policy.param_dim());
        Vec probe = theta;
        for (int i = 0; i < policy.param_dim(); ++i) {
            probe[i] = theta[i] + step;
            const double plus = std::log(policy.action_probs(probe, s)[a]);
            probe[i] = theta[i] - step;
            const double minus = std::log(policy.action_probs(probe, s)[a]);
            probe[i] = theta[i];
            fd[i] = (plus - minus) / (2.0 * step);
        }
        REQUIRE((analytic - fd).norm() <= 1e-6 * std::max(1.0, analytic.norm()));
    }
}

TEST_CASE("gradient of the dominant action vanishes in the deterministic limit") {
    SoftmaxPolicy policy{1, 2};
    Vec theta(2);
    theta << 20.0, 0.0;
    CHECK(policy.log_grad(theta, 0, 0).norm() <= 1e-8);
}

TEST_CASE("inverse-CDF sampling follows the documented tie rule") {
    SoftmaxPolicy policy{1, 2};
    Vec theta = Vec::Zero(2);
    std::array<double, 3> script = {0.49, 0.51, 0.5};
    ScriptedStream stream(script);
    CHECK(policy.sample_action(theta, 0, stream) == 0);
    CHECK(policy.sample_action(theta, 0, stream) == 1);
    CHECK(policy.sample_action(theta, 0, stream) == 0);  // boundary resolves low
}

TEST_CASE("empirical action frequencies match the probabilities") {
    SoftmaxPolicy policy{1, 3};
    Vec theta(3);
    theta << 0.3, -0.4, 1.1;
    Vec probs = policy.action_probs(theta, 0);
    const int n = 1000000;
    Mt64Stream stream(77);
    Vec counts = Vec::Zero(3);
    for (int i = 0; i < n; ++i) counts[policy.sample_action(theta, 0, stream)] += 1.0;
    for (int a = 0; a < 3; ++a) {
        const double freq = counts[a] / n;
        const double se = std::sqrt(probs[a] * (1.0 - probs[a]) / n);
        REQUIRE(std::abs(freq - probs[a]) <= 4.0 * se);
    }
}

TEST_CASE("analytic constants bound the probed quantities") {
    SoftmaxPolicy policy{2, 2};
    PolicyConstants consts = policy_constants(2, 2);
    CHECK(consts.b_bound == 2.0);
    CHECK(consts.l_l == 2.0);
    CHECK(consts.l_pi == 2.0);
    PolicyProbe probe = probe_policy_constants(policy, 1000, 5);
    CHECK(probe.b_max <= consts.b_bound);
    CHECK(probe.l_l_max <= consts.l_l);
    CHECK(probe.l_pi_max <= consts.l_pi);
    CHECK(probe.b_max > 0.0);
}

TEST_CASE("probed log-gradient norms never exceed B on a larger policy") {
    SoftmaxPolicy policy{4, 5};
    PolicyProbe probe = probe_policy_constants(policy, 1000, 9);
    CHECK(probe.b_max <= policy_constants(4, 5).b_bound);
}

TEST_CASE("in-place scaled log-gradient update matches the dense gradient") {
    SoftmaxPolicy policy{3, 3};
    Mt64Stream rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        Vec theta = random_theta(policy, rng);
        const int s = trial % 3;
        const int a = (trial / 3) % 3;
        const double scale = 2.0 * rng.next() - 1.0;
        Vec expected = theta + scale * policy.log_grad(theta, s, a);
        Vec probs = policy.action_probs(theta, s);
        Vec updated = theta;
        const double norm = policy.add_scaled_log_grad(updated, probs, s, a, scale);
        REQUIRE((updated - expected).cwiseAbs().maxCoeff() <= 1e-15);
        REQUIRE(norm == Catch::Approx(policy.log_grad(theta, s, a).norm()).margin(1e-12));
    }
}
