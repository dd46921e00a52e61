#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include "stac/features.hpp"

using namespace stac;

TEST_CASE("centered one-hot for two states is the +-1 fixture map") {
    FeatureMap map = make_centered_onehot(2);
    REQUIRE(map.dim == 1);
    CHECK(map.table(0, 0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(map.table(1, 0) == Catch::Approx(-1.0).margin(1e-12));
}

TEST_CASE("centered one-hot rows are unit norm, sum to zero, and span the mean-zero subspace") {
    for (int n : {2, 3, 5, 9}) {
        FeatureMap map = make_centered_onehot(n);
        REQUIRE(map.dim == n - 1);
        for (int s = 0; s < n; ++s)
            CHECK(map.table.row(s).norm() == Catch::Approx(1.0).margin(1e-12));
        // Constant direction excluded: table^T 1 = 0.
        CHECK((map.table.transpose() * Vec::Ones(n)).cwiseAbs().maxCoeff() <= 1e-10);
        // Full column rank, so representable functions form the whole
        // (n-1)-dimensional mean-zero subspace.
        Eigen::FullPivLU<Mat> lu(map.table);
        CHECK(lu.rank() == n - 1);
        // Coordinates of (e_s - 1/n) recombine to the centered one-hots:
        // pairwise inner products of rows must match the centered Gram.
        const double diag = 1.0;
        const double off = (-1.0 / n) / (1.0 - 1.0 / n);
        for (int s = 0; s < n; ++s)
            for (int t = 0; t < n; ++t) {
                const double expected = s == t ? diag : off;
                REQUIRE(map.table.row(s).dot(map.table.row(t)) ==
                        Catch::Approx(expected).margin(1e-12));
            }
    }
}

TEST_CASE("centered one-hot needs at least two states") {
    CHECK_THROWS_AS(make_centered_onehot(1), Error);
}

TEST_CASE("random bounded rows have exactly unit norm") {
    FeatureMap map = make_random_bounded(5, 2, 3);
    REQUIRE(map.dim == 2);
    for (int s = 0; s < 5; ++s)
        CHECK(map.table.row(s).norm() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("random bounded is deterministic in the seed") {
    FeatureMap a = make_random_bounded(5, 2, 3);
    FeatureMap b = make_random_bounded(5, 2, 3);
    REQUIRE(a.table == b.table);
    FeatureMap c = make_random_bounded(5, 2, 4);
    REQUIRE(a.table != c.table);
}

TEST_CASE("square random bounded map is generically full rank") {
    FeatureMap map = make_random_bounded(5, 5, 1);
    Eigen::FullPivLU<Mat> lu(map.table);
    CHECK(lu.rank() == 5);
}

TEST_CASE("phi returns table rows and rejects out-of-range states") {
    FeatureMap fixture = make_m2_fixture_features();
    CHECK(phi(fixture, 0)[0] == 1.0);
    CHECK(phi(fixture, 1)[0] == -1.0);
    FeatureMap onehot = make_centered_onehot(3);
    CHECK(phi(onehot, 0) == onehot.table.row(0).transpose());
    CHECK_THROWS_AS(phi(onehot, 3), Error);
    CHECK_THROWS_AS(phi(onehot, -1), Error);
}

TEST_CASE("all constructors respect the unit feature bound") {
    Mt64Stream rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.next() * 8);
        const int d = 1 + static_cast<int>(rng.next() * n);
        FeatureMap random = make_random_bounded(n, d, trial);
        FeatureMap centered = make_centered_onehot(n);
        for (int s = 0; s < n; ++s) {
            REQUIRE(random.table.row(s).norm() <= 1.0 + 1e-12);
            REQUIRE(centered.table.row(s).norm() <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("custom maps reject rows above unit norm") {
    Mat bad(1, 2);
    bad << 1.0, 1.0;
    CHECK_THROWS_AS(make_custom(bad), Error);
}

TEST_CASE("feature map json round-trip is bit exact") {
    FeatureMap map = make_random_bounded(4, 3, 11);
    FeatureMap back = features_from_json(json::parse(features_to_json(map).dump()));
    REQUIRE(back.table == map.table);
    REQUIRE(back.dim == map.dim);
    REQUIRE(back.kind == map.kind);
}
