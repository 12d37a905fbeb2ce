#include <doctest.h>

#include "entlaw/zerotest.hpp"
#include "helpers.hpp"

using namespace entlaw;
using namespace testutil;

TEST_CASE("x - x is identically zero for any sampler") {
    Expr x = variable("x");
    DomainSampler s;
    s.add_base("x", -5, 5);
    auto v = is_identically_zero(x - x, s, 50, 1e-9);
    CHECK(v.zero);
    CHECK(v.max_normalized == 0.0);
}

TEST_CASE("x - 2 on (0,1) is nonzero with a witness") {
    Expr x = variable("x");
    DomainSampler s;
    s.add_base("x", 0, 1);
    auto v = is_identically_zero(x - num(2), s, 50, 1e-9);
    CHECK_FALSE(v.zero);
    REQUIRE(v.witness.has_value());
    double w = v.witness->state.at("x");
    CHECK(w > 0.0);
    CHECK(w < 1.0);
    CHECK(v.witness->value == doctest::Approx(w - 2.0));
}

TEST_CASE("normalization by largest additive term defeats cancellation masking") {
    // r = K*x - K*x + eps: raw residual eps looks tiny against terms of
    // size K; the normalized residual is eps/(1+K|x|), caught only if the
    // tolerance accounts for the big terms. Conversely a genuinely zero
    // combination of huge terms must still test zero.
    Expr x = variable("x");
    Expr big = num(1000000) * x;
    DomainSampler s;
    s.add_base("x", 1, 2);

    auto exact = is_identically_zero(big - big, s, 50, 1e-12);
    CHECK(exact.zero);

    auto off = is_identically_zero(big - big + frac(1, 100), s, 50, 1e-9);
    CHECK_FALSE(off.zero);
}

TEST_CASE("inadmissible draws are resampled, persistent failure reported") {
    Expr x = variable("x");
    DomainSampler s;
    s.add_base("x", -1, 1);
    s.add_derived("lx", ln(x));  // fails for x <= 0 about half the time
    auto v = is_identically_zero(variable("lx") - ln(x), s, 30, 1e-9);
    CHECK(v.zero);

    DomainSampler bad;
    bad.add_base("x", -2, -1);
    bad.add_derived("lx", ln(x));  // never admissible
    CHECK_THROWS_AS(is_identically_zero(variable("lx"), bad, 5, 1e-9), SamplingError);
}

TEST_CASE("deterministic given the seed") {
    Expr x = variable("x"), y = variable("y");
    DomainSampler s;
    s.seed = 321;
    s.add_base("x", 0, 1);
    s.add_base("y", 2, 3);
    auto a = is_identically_zero(x * y - num(10), s, 20, 1e-9);
    auto b = is_identically_zero(x * y - num(10), s, 20, 1e-9);
    REQUIRE(a.witness.has_value());
    REQUIRE(b.witness.has_value());
    CHECK(a.witness->state.at("x") == b.witness->state.at("x"));
    CHECK(a.witness->sample_index == b.witness->sample_index);
    CHECK(a.max_normalized == b.max_normalized);
}
