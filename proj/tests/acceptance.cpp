// Acceptance suite: every criterion runs at its stated tolerance and prints
// one pass/fail line with the measured values. The expensive trend cells are
// shared across criteria through the cached report.

#include <catch2/catch_amalgamated.hpp>

#include <iostream>

#include "stac/acceptance.hpp"

using namespace stac;

namespace {

const AcceptanceReport& full_report() {
    static AcceptanceReport report = run_acceptance(/*full=*/true, &std::cout);
    return report;
}

const CriterionResult& criterion(int id) {
    for (const CriterionResult& c : full_report().criteria)
        if (c.id == id) return c;
    FAIL("criterion " << id << " missing from the report");
    static CriterionResult dummy;
    return dummy;
}

} // namespace

TEST_CASE("criterion 1: oracle self-consistency") {
    const CriterionResult& c = criterion(1);
    INFO(c.detail);
    CHECK(c.pass);
}

TEST_CASE("criterion 2: exact gradient vs finite differences") {
    const CriterionResult& c = criterion(2);
    INFO(c.detail);
    CHECK(c.pass);
}

TEST_CASE("criterion 3: worked fixture values") {
    const CriterionResult& c = criterion(3);
    INFO(c.detail);
    CHECK(c.pass);
}

TEST_CASE("criterion 4: iid unbiasedness of the noise functionals") {
    const CriterionResult& c = criterion(4);
    INFO(c.detail);
    CHECK(c.pass);
}

TEST_CASE("criterion 5: convergence trend under iid sampling") {
    const CriterionResult& c = criterion(5);
    INFO(c.detail);
    CHECK(c.pass);
}

TEST_CASE("criterion 6: convergence trend under markovian sampling") {
    const CriterionResult& c = criterion(6);
    INFO(c.detail);
    CHECK(c.pass);
}

TEST_CASE("criterion 7: approximation-error floor") {
    const CriterionResult& c = criterion(7);
    INFO(c.detail);
    CHECK(c.pass);
}

TEST_CASE("criterion 8: stability under the threshold stepsize") {
    const CriterionResult& c = criterion(8);
    INFO(c.detail);
    CHECK(c.pass);
}

TEST_CASE("criterion 9: determinism of repeated cells") {
    const CriterionResult& c = criterion(9);
    INFO(c.detail);
    CHECK(c.pass);
}
