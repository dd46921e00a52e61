#include <catch2/catch_amalgamated.hpp>

#include "stac/mdp.hpp"
#include "stac/policy.hpp"

using namespace stac;

TEST_CASE("validate accepts the M2 fixture") {
    REQUIRE(validate(make_m2()).valid());
}

TEST_CASE("validate flags a non-stochastic row") {
    FiniteMdp mdp = make_m2();
    mdp.transition[0](1, 0) = 0.89;  // row (s=1, a=0) now sums to 0.99
    ValidationReport report = validate(mdp);
    REQUIRE_FALSE(report.valid());
    REQUIRE(report.stochasticity.size() == 1);
    CHECK(report.stochasticity[0].s == 1);
    CHECK(report.stochasticity[0].a == 0);
    CHECK(report.stochasticity[0].row_sum == Catch::Approx(0.99));
    CHECK(report.reward_bounds.empty());
}

TEST_CASE("validate flags a reward outside the bound") {
    FiniteMdp mdp = make_m2();
    mdp.reward(0, 1) = 1.5;  // u_r stays 1
    ValidationReport report = validate(mdp);
    REQUIRE_FALSE(report.valid());
    REQUIRE(report.reward_bounds.size() == 1);
    CHECK(report.reward_bounds[0].s == 0);
    CHECK(report.reward_bounds[0].a == 1);
    CHECK(report.stochasticity.empty());
}

TEST_CASE("garnet rows have exactly the requested branching and sum to one") {
    FiniteMdp mdp = generate_garnet(5, 3, 2, 7);
    REQUIRE(validate(mdp).valid());
    for (int a = 0; a < 3; ++a) {
        for (int s = 0; s < 5; ++s) {
            int nonzeros = 0;
            for (int t = 0; t < 5; ++t)
                if (mdp.transition[a](s, t) > 0.0) ++nonzeros;
            CHECK(nonzeros == 2);
            CHECK(mdp.transition[a].row(s).sum() == Catch::Approx(1.0).margin(1e-12));
        }
    }
}

TEST_CASE("garnet with one state is the absorbing chain") {
    FiniteMdp mdp = generate_garnet(1, 1, 1, 0);
    REQUIRE(mdp.transition[0](0, 0) == 1.0);
}

TEST_CASE("garnet generation is bitwise deterministic") {
    FiniteMdp a = generate_garnet(6, 2, 3, 123);
    FiniteMdp b = generate_garnet(6, 2, 3, 123);
    for (int k = 0; k < 2; ++k) REQUIRE(a.transition[k] == b.transition[k]);
    REQUIRE(a.reward == b.reward);
}

TEST_CASE("garnet rejects branching out of range") {
    CHECK_THROWS_AS(generate_garnet(3, 2, 0, 1), Error);
    CHECK_THROWS_AS(generate_garnet(3, 2, 4, 1), Error);
}

TEST_CASE("induced chain of M2 at theta = 0 is the half-half mixture") {
    FiniteMdp mdp = make_m2();
    SoftmaxPolicy policy = make_policy(mdp);
    InducedChain chain = induced_chain(mdp, policy, Vec::Zero(4));
    for (int s = 0; s < 2; ++s)
        for (int t = 0; t < 2; ++t)
            CHECK(chain.p_theta(s, t) == Catch::Approx(0.5).margin(1e-15));
    CHECK(chain.r_theta[0] == Catch::Approx(0.0).margin(1e-15));
    CHECK(chain.r_theta[1] == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("deterministic policy reduces the mixture to one kernel") {
    FiniteMdp mdp = make_m2();
    Mat probs(2, 2);
    probs << 1.0, 0.0, 1.0, 0.0;  // both states always pick action L
    InducedChain chain = induced_chain(mdp, probs);
    REQUIRE(chain.p_theta == mdp.transition[0]);
}

TEST_CASE("induced chain rejects a policy of the wrong shape") {
    FiniteMdp mdp = make_m2();
    CHECK_THROWS_AS(induced_chain(mdp, Mat::Constant(3, 2, 0.5)), Error);
}

TEST_CASE("induced chain rows sum to one for random policies") {
    FiniteMdp mdp = generate_garnet(7, 3, 3, 42);
    SoftmaxPolicy policy = make_policy(mdp);
    Mt64Stream rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        Vec theta(policy.param_dim());
        for (int i = 0; i < theta.size(); ++i) theta[i] = (2.0 * rng.next() - 1.0) * 5.0;
        InducedChain chain = induced_chain(mdp, policy, theta);
        for (int s = 0; s < mdp.n_states; ++s)
            REQUIRE(std::abs(chain.p_theta.row(s).sum() - 1.0) <= 1e-12);
    }
}

TEST_CASE("mdp json round-trip is bit exact") {
    FiniteMdp mdp = generate_garnet(4, 2, 2, 99, 0.7);
    json j = json::parse(mdp_to_json(mdp).dump());
    FiniteMdp back = mdp_from_json(j);
    REQUIRE(back.n_states == mdp.n_states);
    REQUIRE(back.n_actions == mdp.n_actions);
    REQUIRE(back.u_r == mdp.u_r);
    for (int a = 0; a < mdp.n_actions; ++a) REQUIRE(back.transition[a] == mdp.transition[a]);
    REQUIRE(back.reward == mdp.reward);
}
