#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "entlaw/analysis.hpp"
#include "entlaw/model.hpp"
#include "entlaw/system.hpp"

namespace entlaw::bn {

/// Seven-equation two-phase flow model: volume fraction alpha2 advected at
/// the interfacial velocity, plus per-phase mass/momentum/energy in
/// conservative variables V = (alpha2, m2, q2, e2, m1, q1, e1) with
/// m = alpha*rho, q = alpha*rho*u, e = alpha*rho*E. The non-conservative
/// matrix acts on d_x alpha2 through the interfacial pair (uI, pI).
struct Params {
    Rational gamma1{7, 5};
    Rational cv1{3};
    Rational gamma2{5, 3};
    Rational cv2{2};
    Rational r1() const { return cv1 * (gamma1 - Rational(1)); }
    Rational r2() const { return cv2 * (gamma2 - Rational(1)); }
};

/// Interfacial closure (uI, pI) as expressions over the primitive
/// auxiliaries (u1, u2, p1, p2, T1, T2, Z1, Z2, ...). sigma stands for
/// sgn(d_x alpha1) in the impedance-weighted closure.
struct Closure {
    std::string label;
    Expr uI;
    Expr pI;
    int sigma = 0;  // only meaningful for the DEM closure
};

/// Unary function slot: psi_k mixing terms and the free function F(alpha2).
/// `value` and `deriv` build psi(a) and psi'(a) for a given argument
/// expression; they must stay consistent as a function/derivative pair.
/// psi_k carries entropy-per-mass units (like the phase entropy s_k), so
/// alpha_k*rho_k*psi_k' terms in the closure condition are entropy-density
/// rates; r*ln(alpha) has exactly this scaling.
struct UnaryFunc {
    std::function<Expr(const Expr&)> value;
    std::function<Expr(const Expr&)> deriv;
};

inline UnaryFunc zero_func() {
    return {[](const Expr&) { return num(0); }, [](const Expr&) { return num(0); }};
}

/// psi(a) = r*ln(a), the quasi-miscible mixing entropy.
inline UnaryFunc rlog_func(const Rational& r) {
    return {[r](const Expr& a) { return constant(r) * ln(a); },
            [r](const Expr& a) { return constant(r) / a; }};
}

/// psi(a) = f(a) for a declared abstract symbol f; derivative f_d1.
inline UnaryFunc abstract_func(const std::string& symbol) {
    return {[symbol](const Expr& a) { return call(symbol, {a}); },
            [symbol](const Expr& a) { return call(formal_derivative_name(symbol, 0), {a}); }};
}

/// psi1(a1) = phi(1 - a1): realizes the shared-mixing-function constraint
/// psi1(alpha1) = psi2(alpha2) when psi2 = phi.
inline UnaryFunc mirrored_abstract_func(const std::string& symbol) {
    return {[symbol](const Expr& a) { return call(symbol, {num(1) - a}); },
            [symbol](const Expr& a) {
                return neg(call(formal_derivative_name(symbol, 0), {num(1) - a}));
            }};
}

// -- closure catalog ---------------------------------------------------------

inline Closure closure_u2_p1() { return {"uI=u2, pI=p1", variable("u2"), variable("p1")}; }
inline Closure closure_u1_p2() { return {"uI=u1, pI=p2", variable("u1"), variable("p2")}; }

/// Negative control: not entropy-compatible.
inline Closure closure_u1_p1() { return {"uI=u1, pI=p1", variable("u1"), variable("p1")}; }

/// Mass-averaged velocity, beta = alpha1*rho1/rho, with the matching
/// mu-weighted pressure mu = (1-beta)T2 / (beta T1 + (1-beta) T2).
inline Closure closure_mass_averaged() {
    Expr m1 = variable("m1"), m2 = variable("m2");
    Expr beta = m1 / (m1 + m2);
    Expr uI = beta * variable("u1") + (num(1) - beta) * variable("u2");
    Expr T1 = variable("T1"), T2 = variable("T2");
    Expr mu = ((num(1) - beta) * T2) / (beta * T1 + (num(1) - beta) * T2);
    Expr pI = mu * variable("p1") + (num(1) - mu) * variable("p2");
    return {"mass-averaged uI, mu-pressure", uI, pI};
}

/// Temperature-averaged velocity beta = T2/(T2-T1); pI unconstrained under
/// the r*ln(alpha) mixing entropy (a representative choice is used).
inline Closure closure_temperature_averaged(Expr pI_choice = (variable("p1") + variable("p2")) / num(2)) {
    Expr T1 = variable("T1"), T2 = variable("T2");
    Expr beta = T2 / (T2 - T1);
    Expr uI = beta * variable("u1") + (num(1) - beta) * variable("u2");
    return {"temperature-averaged uI, pI free", uI, pI_choice};
}

/// pI = 0 with unconstrained uI: the alpha2 equation decouples and the
/// system becomes conservative (uI field assumed linearly degenerate).
inline Closure closure_conservative(Expr uI_choice = frac(7, 10) * variable("u1") +
                                                     frac(3, 10) * variable("u2")) {
    return {"pI=0, uI free (conservative)", uI_choice, num(0)};
}

/// Impedance-weighted closure from the Discrete Element Method, with
/// sgn(d_x alpha1) frozen to sigma at the algebra level.
inline Closure dem_closure(int sigma) {
    if (sigma != 1 && sigma != -1) throw std::invalid_argument("dem_closure: sigma must be +-1");
    Expr Z1 = variable("Z1"), Z2 = variable("Z2");
    Expr u1 = variable("u1"), u2 = variable("u2");
    Expr p1 = variable("p1"), p2 = variable("p2");
    Expr zsum = Z1 + Z2;
    Expr sg = num(sigma);
    Closure c;
    c.label = sigma > 0 ? "DEM (sigma=+1)" : "DEM (sigma=-1)";
    c.uI = (Z1 * u1 + Z2 * u2) / zsum + sg * (p2 - p1) / zsum;
    c.pI = (Z2 * p1 + Z1 * p2) / zsum + sg * Z1 * Z2 * (u2 - u1) / zsum;
    c.sigma = sigma;
    return c;
}

// -- model -------------------------------------------------------------------

inline ModelSpec model_spec(const Params& prm = {}, const Closure& closure = closure_u2_p1()) {
    ModelSpec m;
    m.name = "baer_nunziato [" + closure.label + "]";
    m.vars = {{"alpha2", Interval{0.25, 0.75}}, {"m2", Interval{0.4, 0.9}},
              {"q2", Interval{-0.15, 0.15}},   {"e2", Interval{0.6, 1.6}},
              {"m1", Interval{0.4, 0.9}},      {"q1", Interval{-0.15, 0.15}},
              {"e1", Interval{0.6, 1.6}}};
    m.constants = {{"gamma1", prm.gamma1}, {"cv1", prm.cv1}, {"r1", prm.r1()},
                   {"gamma2", prm.gamma2}, {"cv2", prm.cv2}, {"r2", prm.r2()}};

    auto phase_aux = [&](int k, const Rational& gamma) {
        std::string s = std::to_string(k);
        Expr alpha = variable("alpha" + s), mk = variable("m" + s), qk = variable("q" + s),
             ek = variable("e" + s);
        Expr g = variable("gamma" + s), cv = variable("cv" + s), r = variable("r" + s);
        m.aux.push_back({"rho" + s, mk / alpha});
        m.aux.push_back({"u" + s, qk / mk});
        m.aux.push_back({"E" + s, ek / mk});
        m.aux.push_back({"eps" + s, variable("E" + s) - variable("u" + s) * variable("u" + s) / num(2)});
        m.aux.push_back({"p" + s, (g - num(1)) * variable("rho" + s) * variable("eps" + s)});
        m.aux.push_back({"T" + s, variable("p" + s) / (variable("rho" + s) * r)});
        m.aux.push_back({"s" + s, cv * ln(variable("p" + s) / power(variable("rho" + s), gamma))});
        m.aux.push_back({"g" + s,
                         variable("eps" + s) + variable("p" + s) / variable("rho" + s) -
                             variable("T" + s) * variable("s" + s)});
        m.aux.push_back({"Z" + s,
                         power(g * variable("p" + s) * variable("rho" + s), Rational(1, 2))});
    };
    m.aux.push_back({"alpha1", num(1) - variable("alpha2")});
    phase_aux(2, prm.gamma2);
    phase_aux(1, prm.gamma1);
    m.aux.push_back({"uI", closure.uI});
    m.aux.push_back({"pI", closure.pI});

    auto phase_flux = [&](int k) {
        std::string s = std::to_string(k);
        Expr mk = variable("m" + s), ek = variable("e" + s);
        Expr alpha = variable("alpha" + s), u = variable("u" + s), p = variable("p" + s);
        m.flux->push_back(mk * u);
        m.flux->push_back(mk * u * u + alpha * p);
        m.flux->push_back((ek + alpha * p) * u);
    };
    m.flux.emplace();
    m.flux->push_back(num(0));
    phase_flux(2);
    phase_flux(1);

    // Z: single nonzero column multiplying d_x alpha2.
    m.noncons.assign(7, std::vector<Expr>(7, num(0)));
    m.noncons[0][0] = variable("uI");
    m.noncons[2][0] = neg(variable("pI"));
    m.noncons[3][0] = neg(variable("pI") * variable("uI"));
    m.noncons[5][0] = variable("pI");
    m.noncons[6][0] = variable("pI") * variable("uI");

    m.abstracts = {{"F", 1}, {"psi1", 1}, {"psi2", 1}, {"phi", 1}};
    return m;
}

inline SystemQL build_system(const Params& prm = {}, const Closure& closure = closure_u2_p1(),
                             Interpretations interps = {}) {
    return entlaw::build_system(model_spec(prm, closure), std::move(interps));
}

// -- entropies and transfer vectors ------------------------------------------

/// Non-miscible mixture entropy S = -(m1*s1 + m2*s2).
inline Expr entropy_immiscible(const ModelSpec& m) {
    return inline_aux(m, neg(variable("m1") * variable("s1") + variable("m2") * variable("s2")));
}

/// Mixing entropy S = -sum_k m_k (s_k - psi_k(alpha_k)).
inline Expr entropy_with_mixing(const ModelSpec& m, const UnaryFunc& psi1, const UnaryFunc& psi2) {
    Expr raw = neg(variable("m1") * (variable("s1") - psi1.value(variable("alpha1"))) +
                   variable("m2") * (variable("s2") - psi2.value(variable("alpha2"))));
    return inline_aux(m, raw);
}

/// Transfer vector of the non-miscible case:
/// gamma_alpha = F(alpha2) + p1*u1/T1 - p2*u2/T2, zeros elsewhere.
inline TransferVector gamma_classic(const ModelSpec& m, const UnaryFunc& F = zero_func()) {
    Expr ga = F.value(variable("alpha2")) +
              variable("p1") * variable("u1") / variable("T1") -
              variable("p2") * variable("u2") / variable("T2");
    TransferVector t = zero_transfer(7);
    t.comps[0] = inline_aux(m, ga);
    return t;
}

/// Transfer vector of the mixing case:
/// gamma_alpha = F(alpha2) + (p1 u1/T1)[1 - (alpha1/r1) psi1'(alpha1)]
///                         - (p2 u2/T2)[1 - (alpha2/r2) psi2'(alpha2)].
inline TransferVector gamma_mixing(const ModelSpec& m, const UnaryFunc& F, const UnaryFunc& psi1,
                                   const UnaryFunc& psi2) {
    Expr a1 = variable("alpha1"), a2 = variable("alpha2");
    Expr ga = F.value(a2) +
              (variable("p1") * variable("u1") / variable("T1")) *
                  (num(1) - (a1 / variable("r1")) * psi1.deriv(a1)) -
              (variable("p2") * variable("u2") / variable("T2")) *
                  (num(1) - (a2 / variable("r2")) * psi2.deriv(a2));
    TransferVector t = zero_transfer(7);
    t.comps[0] = inline_aux(m, ga);
    return t;
}

/// C2 restricted to the alpha2 slot: the scalar whose identical vanishing
/// ties (uI, pI) to the thermodynamics. Assembled from first principles as
/// (dS.Z - gamma)[0] with the mixing entropy and its transfer vector.
inline Expr closure_condition(const Params& prm, const Closure& closure, const UnaryFunc& psi1,
                              const UnaryFunc& psi2, const UnaryFunc& F = zero_func()) {
    ModelSpec m = model_spec(prm, closure);
    SystemQL sys = entlaw::build_system(m);
    Expr S = entropy_with_mixing(m, psi1, psi2);
    TransferVector gamma = gamma_mixing(m, F, psi1, psi2);
    return c2_residual(sys, S, gamma)[0];
}

/// For uI = beta*u1 + (1-beta)*u2 (F = 0, psi = 0) the closure condition is
/// affine in pI; solving it yields pI = mu*p1 + (1-mu)*p2 with
/// mu = (1-beta)T2 / ((1-beta)T2 + beta*T1). The returned expressions are
/// the solved pI and the induced mu = (pI - p2)/(p1 - p2).
struct SolvedPressure {
    Expr pI;
    Expr mu;
};

inline SolvedPressure solve_interfacial_pressure(const Params& prm, const Expr& beta) {
    Expr uI = beta * variable("u1") + (num(1) - beta) * variable("u2");
    Closure c{"pI unknown", uI, variable("pI_unknown")};
    ModelSpec m = model_spec(prm, c);
    // declared as a constant so it survives inlining as a free symbol
    m.constants.push_back({"pI_unknown", Rational(1)});
    SystemQL sys = entlaw::build_system(m);
    Expr S = entropy_immiscible(m);
    TransferVector gamma = gamma_classic(m);
    Expr residual = c2_residual(sys, S, gamma)[0];

    Expr at0 = substitute(residual, {{"pI_unknown", num(0)}});
    Expr at1 = substitute(residual, {{"pI_unknown", num(1)}});
    Expr slope = at1 - at0;  // residual = at0 + slope * pI
    SolvedPressure out;
    out.pI = simplify(neg(at0) / slope);
    out.mu = simplify((out.pI - inline_aux(m, variable("p2"))) /
                      (inline_aux(m, variable("p1")) - inline_aux(m, variable("p2"))));
    return out;
}

// -- closure catalog (Tables 1 and 2) ----------------------------------------

struct CatalogEntry {
    std::string label;
    Closure closure;
    std::string psi_label;
    UnaryFunc psi1;
    UnaryFunc psi2;
    bool verified = false;
    double max_residual = 0.0;
};

/// Interpretations for the abstract mixing symbols used when verifying the
/// catalog: psi2 = 0.8*a^2 + 0.3*a (value/derivative/second derivative),
/// phi likewise, F unused (zero).
inline Interpretations catalog_interps() {
    Interpretations in;
    in.bind_unary_chain("psi2", {[](double a) { return 0.8 * a * a + 0.3 * a; },
                                 [](double a) { return 1.6 * a + 0.3; },
                                 [](double) { return 1.6; },
                                 [](double) { return 0.0; }});
    in.bind_unary_chain("psi1", {[](double a) { return 1.1 * a * a; },
                                 [](double a) { return 2.2 * a; },
                                 [](double) { return 2.2; },
                                 [](double) { return 0.0; }});
    in.bind_unary_chain("phi", {[](double a) { return 0.9 * a * a + 0.2 * a; },
                                [](double a) { return 1.8 * a + 0.2; },
                                [](double) { return 1.8; },
                                [](double) { return 0.0; }});
    in.bind_unary_chain("F", {[](double a) { return a * a; },
                              [](double a) { return 2 * a; },
                              [](double) { return 2.0; },
                              [](double) { return 0.0; }});
    return in;
}

/// The four closure families, each re-verified through closure_condition
/// at construction time:
///   1. (uI, pI) = (u2, p1) with psi2 arbitrary, psi1 = 0
///   2. mass-averaged uI with the mu-pressure, psi1(alpha1) = psi2(alpha2)
///   3. beta = T2/(T2-T1), pI free, psi_k = r_k ln(alpha_k)
///   4. pI = 0, uI free, psi_k = r_k ln(alpha_k)
inline std::vector<CatalogEntry> catalog_closures(const Params& prm = {},
                                                  std::uint64_t samples = 100, double tol = 1e-9,
                                                  std::uint64_t seed = 20240601ull) {
    std::vector<CatalogEntry> out;
    out.push_back({"Case 1: uI=u2, pI=p1, psi=(psi2,0)", closure_u2_p1(), "(psi2, 0)",
                   zero_func(), abstract_func("psi2")});
    out.push_back({"Case 2: mass-averaged, mu-pressure, psi1(a1)=psi2(a2)", closure_mass_averaged(),
                   "shared phi", mirrored_abstract_func("phi"), abstract_func("phi")});
    out.push_back({"Case 3: beta=T2/(T2-T1), pI free, psi=r*ln(alpha)",
                   closure_temperature_averaged(), "r_k ln(alpha_k)", rlog_func(prm.r1()),
                   rlog_func(prm.r2())});
    out.push_back({"Case 4: pI=0, uI free, psi=r*ln(alpha)", closure_conservative(),
                   "r_k ln(alpha_k)", rlog_func(prm.r1()), rlog_func(prm.r2())});

    for (auto& entry : out) {
        Expr cond = closure_condition(prm, entry.closure, entry.psi1, entry.psi2);
        SystemQL sys = build_system(prm, entry.closure, catalog_interps());
        DomainSampler sampler = sys.sampler;
        sampler.seed = seed;
        auto verdict = is_identically_zero(cond, sampler, samples, tol);
        entry.verified = verdict.zero;
        entry.max_residual = verdict.max_normalized;
    }
    return out;
}

/// Numeric convexity probe for a mixing function on an interval: the
/// minimum central second difference over n interior points. Reported,
/// never used as a gate (the catalog's own cases include concave choices
/// such as r*ln(alpha)).
inline double convexity_probe(const UnaryFunc& psi, double lo, double hi, int n,
                              const Interpretations* interps = nullptr) {
    if (n < 1 || !(lo < hi)) throw std::invalid_argument("convexity_probe: bad interval");
    const double h = 1e-4 * (hi - lo);
    Expr arg = variable("alpha_probe");
    Expr e = psi.value(arg);
    double min_dd = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= n; ++i) {
        double a = lo + (hi - lo) * i / (n + 1);
        auto value_at = [&](double x) { return evaluate(e, {{"alpha_probe", x}}, interps); };
        double dd = (value_at(a + h) - 2 * value_at(a) + value_at(a - h)) / (h * h);
        min_dd = std::min(min_dd, dd);
    }
    return min_dd;
}

// -- pointwise thermodynamic state -------------------------------------------

/// Primitive two-phase state and the primitive <-> conservative maps.
struct State {
    double alpha2;
    double rho1, u1, p1;
    double rho2, u2, p2;
};

inline std::array<double, 7> to_conservative(const Params& prm, const State& s) {
    auto pack = [&](double alpha, double rho, double u, double p, const Rational& gamma) {
        double eps = p / ((gamma.to_double() - 1.0) * rho);
        double E = eps + 0.5 * u * u;
        return std::array<double, 3>{alpha * rho, alpha * rho * u, alpha * rho * E};
    };
    double alpha1 = 1.0 - s.alpha2;
    auto c2 = pack(s.alpha2, s.rho2, s.u2, s.p2, prm.gamma2);
    auto c1 = pack(alpha1, s.rho1, s.u1, s.p1, prm.gamma1);
    return {s.alpha2, c2[0], c2[1], c2[2], c1[0], c1[1], c1[2]};
}

inline State from_conservative(const Params& prm, const std::array<double, 7>& v) {
    State s;
    s.alpha2 = v[0];
    double alpha1 = 1.0 - v[0];
    auto unpack = [&](double alpha, double m, double q, double e, const Rational& gamma,
                      double& rho, double& u, double& p) {
        rho = m / alpha;
        u = q / m;
        double eps = e / m - 0.5 * u * u;
        p = (gamma.to_double() - 1.0) * rho * eps;
    };
    unpack(v[0], v[1], v[2], v[3], prm.gamma2, s.rho2, s.u2, s.p2);
    unpack(alpha1, v[4], v[5], v[6], prm.gamma1, s.rho1, s.u1, s.p1);
    return s;
}

/// Assignment of the conservative state variables for a primitive state.
inline std::vector<std::pair<std::string, double>> state_values(const Params& prm, const State& s) {
    auto v = to_conservative(prm, s);
    return {{"alpha2", v[0]}, {"m2", v[1]}, {"q2", v[2]}, {"e2", v[3]},
            {"m1", v[4]},     {"q1", v[5]}, {"e1", v[6]}};
}

// -- DEM dissipation ----------------------------------------------------------

struct DemDissipation {
    double quadratic_form = 0.0;  // the impedance-weighted sum of squares
    double direct_form = 0.0;     // sum_k (p_k - pI)(uI - u_k)/T_k * d_x alpha_k
};

/// Evaluates both printed forms of the DEM entropy production at a state,
/// with d_x alpha1 = sigma (so d_x alpha2 = -sigma). Both are <= 0 and must
/// agree; the quadratic form carries sgn(d_x alpha_k) in the k-th bracket.
inline DemDissipation dem_dissipation(const Params& prm, const State& st, int sigma) {
    if (sigma != 1 && sigma != -1)
        throw std::invalid_argument("dem_dissipation: sigma must be +-1");
    double g1 = prm.gamma1.to_double(), g2 = prm.gamma2.to_double();
    double r1 = prm.r1().to_double(), r2 = prm.r2().to_double();
    double T1 = st.p1 / (st.rho1 * r1), T2 = st.p2 / (st.rho2 * r2);
    double Z1 = std::sqrt(g1 * st.p1 * st.rho1), Z2 = std::sqrt(g2 * st.p2 * st.rho2);
    double zsum = Z1 + Z2;

    double uI = (Z1 * st.u1 + Z2 * st.u2) / zsum + sigma * (st.p2 - st.p1) / zsum;
    double pI = (Z2 * st.p1 + Z1 * st.p2) / zsum + sigma * Z1 * Z2 * (st.u2 - st.u1) / zsum;

    DemDissipation d;
    double dxa1 = sigma, dxa2 = -sigma;
    d.direct_form = (st.p1 - pI) * (uI - st.u1) / T1 * dxa1 +
                    (st.p2 - pI) * (uI - st.u2) / T2 * dxa2;

    auto bracket = [&](double pk, double pkp, double uk, double ukp, double Zkp, int sg) {
        double b = pkp - pk + sg * (ukp - uk) * Zkp;
        return b * b;
    };
    d.quadratic_form = -(Z1 / (T1 * zsum * zsum)) *
                           bracket(st.p1, st.p2, st.u1, st.u2, Z2, sigma) -
                       (Z2 / (T2 * zsum * zsum)) *
                           bracket(st.p2, st.p1, st.u2, st.u1, Z1, -sigma);
    return d;
}

}  // namespace entlaw::bn
