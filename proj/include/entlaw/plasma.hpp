#pragma once

#include <string>
#include <vector>

#include "entlaw/analysis.hpp"
#include "entlaw/model.hpp"
#include "entlaw/system.hpp"

namespace entlaw::plasma {

/// Two-temperature plasma model: heavy species resolved hydrodynamically,
/// electrons in a low-Mach limit sharing the bulk velocity, with the
/// electron-energy equation carrying the non-conservative term pe*d_x(u).
/// V = (rhoh, qh, E, rhoe, ee) with qh = rhoh*u and ee = rhoe*eps_e.
/// Both species are ideal gases with the same isentropic coefficient;
/// the adimensionalization fixes r = cv*kappa = 1, so cv = 1/kappa.
struct Params {
    Rational gamma{5, 3};
    Rational kappa() const { return gamma - Rational(1); }
    Rational cv() const { return Rational(1) / kappa(); }
};

inline ModelSpec model_spec(const Params& prm = {}) {
    ModelSpec m;
    m.name = "plasma";
    m.vars = {{"rhoh", Interval{0.5, 1.5}},
              {"qh", Interval{-0.3, 0.3}},
              {"E", Interval{1.2, 2.2}},
              {"rhoe", Interval{0.05, 0.3}},
              {"ee", Interval{0.1, 0.5}}};
    m.constants = {{"gamma", prm.gamma}, {"kappa", prm.kappa()}, {"cv", prm.cv()}, {"r", Rational(1)}};

    Expr rhoh = variable("rhoh"), qh = variable("qh"), E = variable("E");
    Expr rhoe = variable("rhoe"), ee = variable("ee");
    Expr kap = variable("kappa"), cv = variable("cv"), r = variable("r");

    m.aux = {
        {"u", qh / rhoh},
        {"epse", ee / rhoe},
        {"epsh", (E - qh * qh / (num(2) * rhoh) - ee) / rhoh},
        {"ph", kap * rhoh * variable("epsh")},
        {"pe", kap * ee},
        {"Th", kap * variable("epsh") / r},
        {"Te", kap * variable("epse") / r},
        {"htot", E + variable("ph") + variable("pe")},
        {"sh", cv * ln(variable("ph") / (kap * power(rhoh, prm.gamma)))},
        {"se", cv * ln(variable("pe") / (kap * power(rhoe, prm.gamma)))},
        {"gh", variable("epsh") + variable("ph") / rhoh - variable("Th") * variable("sh")},
        {"ge", variable("epse") + variable("pe") / rhoe - variable("Te") * variable("se")},
    };

    Expr u = variable("u"), htot = variable("htot");
    // Jacobian given directly; there is no flux form for the electron energy.
    m.jacobian = {{
        {num(0), num(1), num(0), num(0), num(0)},
        {(kap / num(2) - num(1)) * u * u, (num(2) - kap) * u, kap, num(0), num(0)},
        {(kap / num(2) * u * u - htot / rhoh) * u, htot / rhoh - kap * u * u,
         (num(1) + kap) * u, num(0), num(0)},
        {neg(rhoe / rhoh) * u, rhoe / rhoh, num(0), u, num(0)},
        {neg(ee / rhoh) * u, ee / rhoh, num(0), num(0), u},
    }};

    m.noncons.assign(5, std::vector<Expr>(5, num(0)));
    m.noncons[4][0] = neg(ee / rhoh) * kap * u;
    m.noncons[4][1] = (ee / rhoh) * kap;

    m.entropy = neg(rhoh * variable("sh") + rhoe * variable("se"));
    m.entropy_flux = neg(rhoh * variable("sh") + rhoe * variable("se")) * u;

    Expr coeff = (rhoe / rhoh) * (num(1) - variable("Te") / variable("Th"));
    m.transfer = {{coeff * u, neg(coeff), num(0), num(0), num(0)}};
    return m;
}

inline SystemQL build_system(const Params& prm = {}) {
    return entlaw::build_system(model_spec(prm));
}

inline EntropyCandidate entropy(const Params& prm = {}) {
    return entropy_candidate(model_spec(prm));
}

/// The unique transfer vector closing C1 and C2 for the two-gas entropy:
/// gamma = ((rhoe/rhoh)(1 - Te/Th) u, -(rhoe/rhoh)(1 - Te/Th), 0, 0, 0).
inline TransferVector gamma_unique(const Params& prm = {}) {
    return transfer_vector(model_spec(prm));
}

inline std::pair<EntropyCandidate, TransferVector> entropy_flux_pair(const Params& prm = {}) {
    return {entropy(prm), gamma_unique(prm)};
}

/// Second-order (diffusive) block of the full model, kept as inert data
/// with the electron thermal conductivity and diffusion coefficient as
/// free symbols lambda_e and D_e. It takes no part in the homogeneous
/// conservation-law analysis.
inline ExprMatrix diffusion_matrix(const Params& prm = {}) {
    Expr kap = variable("kappa"), epse = variable("epse"), rhoe = variable("rhoe");
    Expr Te = variable("Te");
    Expr lam = variable("lambda_e"), D = variable("D_e");
    Expr gam = constant(prm.gamma);
    Expr lam_term = lam * kap * epse / rhoe;
    ExprMatrix M(5, std::vector<Expr>(5, num(0)));
    M[2][3] = neg(lam_term);
    M[2][4] = lam_term + gam * D;
    M[3][4] = D * kap / Te;
    M[4][3] = neg(lam_term);
    M[4][4] = lam_term + gam * D;
    return M;
}

/// Pointwise thermodynamic state in primitive quantities.
struct State {
    double rhoh, u, Th;
    double rhoe, Te;
};

inline std::vector<std::pair<std::string, double>> state_values(const Params& prm, const State& s) {
    double kap = prm.kappa().to_double();
    double epsh = s.Th / kap;  // r = 1
    double epse = s.Te / kap;
    double E = s.rhoh * epsh + 0.5 * s.rhoh * s.u * s.u + s.rhoe * epse;
    return {{"rhoh", s.rhoh}, {"qh", s.rhoh * s.u}, {"E", E}, {"rhoe", s.rhoe},
            {"ee", s.rhoe * epse}};
}

/// Probe for the uniqueness argument: the general C1 solution carries two
/// free functions, gamma2 += F1(rhoh, u) and gamma1 += I(rhoh, u) + F2(rhoh)
/// with I the antiderivative of -u d_u F1 + rhoh d_rhoh F1 in u (supplied
/// by the caller for the concrete F1). C2 then fails unless F1 = F2 = 0.
struct ProbeResult {
    bool pass = false;  // true iff C2 still closes
    AnalysisReport report;
};

inline ProbeResult uniqueness_probe(const Params& prm, const Expr& F1, const Expr& integral_term,
                                    const Expr& F2, const AnalyzeOptions& opt = {}) {
    ModelSpec m = model_spec(prm);
    SystemQL sys = entlaw::build_system(m);
    EntropyCandidate cand = entropy_candidate(m);
    TransferVector gamma = transfer_vector(m);
    gamma.comps[0] = gamma.comps[0] + inline_aux(m, integral_term) + inline_aux(m, F2);
    gamma.comps[1] = gamma.comps[1] + inline_aux(m, F1);

    ProbeResult out;
    AnalysisReport rep = check_supplementary_law(sys, cand.S, gamma, opt);
    out.pass = rep.find("C2")->pass;
    out.report = std::move(rep);
    return out;
}

}  // namespace entlaw::plasma
