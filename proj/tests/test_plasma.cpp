#include <doctest.h>

#include "entlaw/plasma.hpp"
#include "helpers.hpp"

using namespace entlaw;
using namespace testutil;

namespace {

const plasma::Params prm{};

plasma::State sample_state(std::uint64_t& s) {
    plasma::State st;
    st.rhoh = rng_in(s, 0.6, 1.4);
    st.u = rng_in(s, -0.3, 0.3);
    st.Th = rng_in(s, 0.5, 1.5);
    st.rhoe = rng_in(s, 0.05, 0.3);
    st.Te = rng_in(s, 0.5, 1.5);
    return st;
}

}  // namespace

TEST_CASE("model invariants and printed Jacobian rows") {
    ModelSpec m = plasma::model_spec(prm);
    CHECK(m.dim() == 5);
    CHECK(validate(m).empty());
    SystemQL sys = plasma::build_system(prm);

    // Jacobian row 1 is (0, 1, 0, 0, 0)
    CHECK(is_zero(sys.jac[0][0]));
    CHECK(is_one(sys.jac[0][1]));
    CHECK(is_zero(sys.jac[0][2]));
    CHECK(is_zero(sys.jac[0][3]));
    CHECK(is_zero(sys.jac[0][4]));

    // row-wise evaluation matches the printed entries at 50 states
    std::uint64_t s = 9;
    double kap = prm.kappa().to_double();
    for (int t = 0; t < 50; ++t) {
        plasma::State st = sample_state(s);
        Assignment a = sys.sampler.at(plasma::state_values(prm, st));
        double u = st.u, rhoh = st.rhoh, rhoe = st.rhoe;
        double ee = a.at("ee"), htot = a.at("htot");
        double expected[5][5] = {
            {0, 1, 0, 0, 0},
            {(kap / 2 - 1) * u * u, (2 - kap) * u, kap, 0, 0},
            {(kap / 2 * u * u - htot / rhoh) * u, htot / rhoh - kap * u * u, (1 + kap) * u, 0, 0},
            {-(rhoe / rhoh) * u, rhoe / rhoh, 0, u, 0},
            {-(ee / rhoh) * u, ee / rhoh, 0, 0, u},
        };
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j)
                CHECK(rel_close(evaluate(sys.jac[i][j], a), expected[i][j], 1e-12, 1e-13));

        // Z row 5 as printed: (-(ee/rhoh) kappa u, (ee/rhoh) kappa, 0, 0, 0)
        CHECK(rel_close(evaluate(sys.noncons[4][0], a), -(ee / rhoh) * kap * u, 1e-12, 1e-13));
        CHECK(rel_close(evaluate(sys.noncons[4][1], a), (ee / rhoh) * kap, 1e-12, 1e-13));
    }
}

TEST_CASE("entropic variables: fifth slot is 1/Th - 1/Te, electron slot has no kinetic part") {
    ModelSpec m = plasma::model_spec(prm);
    SystemQL sys = plasma::build_system(prm);
    Expr S = plasma::entropy(prm).S;
    auto v = entropic_variables(S, sys);

    std::uint64_t s = 21;
    for (int t = 0; t < 50; ++t) {
        plasma::State st = sample_state(s);
        Assignment a = sys.sampler.at(plasma::state_values(prm, st));
        double Th = a.at("Th"), Te = a.at("Te"), gh = a.at("gh"), ge = a.at("ge");
        CHECK(rel_close(evaluate(v[0], a), (gh - 0.5 * st.u * st.u) / Th, 1e-9, 1e-11));
        CHECK(rel_close(evaluate(v[1], a), st.u / Th, 1e-9, 1e-11));
        CHECK(rel_close(evaluate(v[2], a), -1.0 / Th, 1e-9, 1e-11));
        CHECK(rel_close(evaluate(v[3], a), ge / Te, 1e-9, 1e-11));
        CHECK(rel_close(evaluate(v[4], a), 1.0 / Th - 1.0 / Te, 1e-9, 1e-11));
    }

    // at thermal equilibrium the fifth entropic variable vanishes
    plasma::State eq{1.0, 0.2, 0.9, 0.1, 0.9};
    Assignment a = sys.sampler.at(plasma::state_values(prm, eq));
    CHECK(std::abs(evaluate(v[4], a)) < 1e-12);
}

TEST_CASE("entropy is additive in the electron partial term") {
    SystemQL sys = plasma::build_system(prm);
    Expr S = plasma::entropy(prm).S;
    std::uint64_t s = 33;
    for (int t = 0; t < 10; ++t) {
        plasma::State st = sample_state(s);
        plasma::State doubled = st;
        doubled.rhoe *= 2;  // fixed intensive electron state (Te unchanged)
        Assignment a = sys.sampler.at(plasma::state_values(prm, st));
        Assignment b = sys.sampler.at(plasma::state_values(prm, doubled));
        double se = a.at("se");
        double se2 = b.at("se");
        // the heavy contribution is unchanged; S shifts by the electron term only
        double shift = (-(2 * st.rhoe) * se2) - (-st.rhoe * se);
        CHECK(rel_close(evaluate(S, b) - evaluate(S, a), shift, 1e-9, 1e-11));
    }
}

TEST_CASE("the unique gamma closes C1 and C2; zero at thermal equilibrium") {
    SystemQL sys = plasma::build_system(prm);
    auto [cand, gamma] = plasma::entropy_flux_pair(prm);
    AnalyzeOptions opt;
    opt.samples = 200;
    AnalysisReport rep = check_supplementary_law(sys, cand.S, gamma, opt);
    CHECK(rep.find("C1")->pass);
    CHECK(rep.find("C1")->max_residual < 1e-9);
    CHECK(rep.find("C2")->pass);
    CHECK(rep.find("C2")->max_residual < 1e-9);

    // gamma vanishes identically at Te = Th
    plasma::State eq{1.1, -0.15, 0.8, 0.2, 0.8};
    Assignment a = sys.sampler.at(plasma::state_values(prm, eq));
    CHECK(std::abs(evaluate(gamma.comps[0], a)) < 1e-12);
    CHECK(std::abs(evaluate(gamma.comps[1], a)) < 1e-12);

    // and dS.Z contributes nothing there either
    Expr S = cand.S;
    auto r = c2_residual(sys, S, zero_transfer(5));
    CHECK(std::abs(evaluate(r[0], a)) < 1e-12);
    CHECK(std::abs(evaluate(r[1], a)) < 1e-12);

    // with gamma = 0 the system is genuinely non-conservative for this S
    CHECK(conservative_reduction_check(sys, S) == ReductionVerdict::NonConservative);
}

TEST_CASE("entropy flux pair: compatibility, G = S*u, and path integration") {
    ModelSpec m = plasma::model_spec(prm);
    SystemQL sys = plasma::build_system(prm);
    auto [cand, gamma] = plasma::entropy_flux_pair(prm);
    REQUIRE(cand.G.has_value());

    AnalysisReport rep = analyze(sys, cand, gamma);
    CHECK(rep.pass());
    CHECK(rep.find("flux_compatibility")->max_residual < 1e-9);

    // G = S*u as expressions
    Expr Su = cand.S * inline_aux(m, variable("u"));
    std::uint64_t s = 12;
    for (int t = 0; t < 50; ++t) {
        plasma::State st = sample_state(s);
        Assignment a = sys.sampler.at(plasma::state_values(prm, st));
        CHECK(rel_close(evaluate(*cand.G, a), evaluate(Su, a), 1e-12));
    }

    // broken flux (missing the velocity factor) fails with a witness
    EntropyCandidate broken = cand;
    broken.G = cand.S;
    AnalysisReport rb = analyze(sys, broken, gamma);
    CHECK_FALSE(rb.find("flux_compatibility")->pass);
    CHECK(rb.find("flux_compatibility")->witness.has_value());

    // path-integrated G difference matches the closed form between pairs
    for (int t = 0; t < 10; ++t) {
        Assignment a = sys.sampler.sample(2 * t);
        Assignment b = sys.sampler.sample(2 * t + 1);
        std::vector<double> ra, rb2;
        for (auto& v : sys.vars) {
            ra.push_back(a.at(v));
            rb2.push_back(b.at(v));
        }
        double seg = integrate_entropy_flux(sys, cand.S, gamma, ra, rb2, PathKind::Segment);
        double stc = integrate_entropy_flux(sys, cand.S, gamma, ra, rb2, PathKind::Staircase);
        double closed = evaluate(*cand.G, b) - evaluate(*cand.G, a);
        CHECK(rel_close(seg, closed, 1e-6, 1e-9));
        CHECK(rel_close(stc, closed, 1e-6, 1e-9));
        CHECK(rel_close(seg, stc, 1e-6, 1e-9));
    }
}

TEST_CASE("velocity parity: u -> -u flips gamma1 and G, fixes gamma2") {
    SystemQL sys = plasma::build_system(prm);
    auto [cand, gamma] = plasma::entropy_flux_pair(prm);
    std::uint64_t s = 44;
    for (int t = 0; t < 20; ++t) {
        plasma::State st = sample_state(s);
        plasma::State neg_u = st;
        neg_u.u = -st.u;
        Assignment a = sys.sampler.at(plasma::state_values(prm, st));
        Assignment b = sys.sampler.at(plasma::state_values(prm, neg_u));
        CHECK(rel_close(evaluate(gamma.comps[0], b), -evaluate(gamma.comps[0], a), 1e-11, 1e-13));
        CHECK(rel_close(evaluate(gamma.comps[1], b), evaluate(gamma.comps[1], a), 1e-11, 1e-13));
        CHECK(rel_close(evaluate(*cand.G, b), -evaluate(*cand.G, a), 1e-11, 1e-13));
    }
}

TEST_CASE("diffusion block is stored as inert data, outside the analysis") {
    auto D = plasma::diffusion_matrix(prm);
    // sparsity as printed: rows 3 and 5 coincide, row 4 couples to ee only
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 3; ++j) CHECK(is_zero(D[i][j]));
    CHECK(expr_equal(D[2][3], D[4][3]));
    CHECK(expr_equal(D[2][4], D[4][4]));

    SystemQL sys = plasma::build_system(prm);
    std::uint64_t s = 61;
    plasma::State st = sample_state(s);
    Assignment a = sys.sampler.at(plasma::state_values(prm, st));
    a["lambda_e"] = 0.7;
    a["D_e"] = 0.3;
    double kap = prm.kappa().to_double();
    double lam_term = 0.7 * kap * a.at("epse") / st.rhoe;
    CHECK(rel_close(evaluate(D[2][3], a), -lam_term, 1e-12));
    CHECK(rel_close(evaluate(D[2][4], a), lam_term + prm.gamma.to_double() * 0.3, 1e-12));
    CHECK(rel_close(evaluate(D[3][4], a), 0.3 * kap / a.at("Te"), 1e-12));

    // the analyzed system itself carries no diffusive terms
    AnalysisReport rep = check_supplementary_law(sys, plasma::entropy(prm).S,
                                                 plasma::gamma_unique(prm));
    CHECK(rep.pass());
}

TEST_CASE("uniqueness probe: any nonzero free function breaks C2") {
    AnalyzeOptions opt;
    opt.samples = 100;

    // F1 = F2 = 0 passes
    auto ok = plasma::uniqueness_probe(prm, num(0), num(0), num(0), opt);
    CHECK(ok.pass);

    // F1 = 1 (constant): integral term is 0, C2 fails in slot 2
    auto p1 = plasma::uniqueness_probe(prm, num(1), num(0), num(0), opt);
    CHECK_FALSE(p1.pass);
    REQUIRE(p1.report.find("C2")->witness.has_value());
    CHECK(p1.report.find("C2")->witness->col == 1);

    // F2 = rhoh: C2 fails in slot 1
    auto p2 = plasma::uniqueness_probe(prm, num(0), num(0), variable("rhoh"), opt);
    CHECK_FALSE(p2.pass);
    REQUIRE(p2.report.find("C2")->witness.has_value());
    CHECK(p2.report.find("C2")->witness->col == 0);

    // a state-dependent F1 = rhoh*u with its hand-computed antiderivative
    // I(rhoh, u) = integral of (-u * rhoh + rhoh * u) du = 0
    auto p3 = plasma::uniqueness_probe(prm, variable("rhoh") * variable("u"), num(0), num(0), opt);
    CHECK_FALSE(p3.pass);

    // perturbing a single gamma component by 1e-3*u breaks a condition
    SystemQL sys = plasma::build_system(prm);
    auto [cand, gamma] = plasma::entropy_flux_pair(prm);
    ModelSpec m = plasma::model_spec(prm);
    for (std::size_t slot = 0; slot < 5; ++slot) {
        TransferVector g = gamma;
        g.comps[slot] = g.comps[slot] + frac(1, 1000) * inline_aux(m, variable("u"));
        AnalysisReport rep = check_supplementary_law(sys, cand.S, g, opt);
        INFO("slot ", slot);
        CHECK_FALSE(rep.pass());
    }
}
