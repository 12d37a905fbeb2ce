#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "entlaw/system.hpp"
#include "entlaw/zerotest.hpp"

namespace entlaw {

// ---------------------------------------------------------------------------
// Residual assembly for the two conditions of the supplementary-law check.
//
// C1 (integrability): M = Hess(S) x A + dgamma must be symmetric, where
// (dgamma)_{ij} = d gamma_j / d V_i. The residual returned is M - M^T.
// C2 (annihilation): the row vector dS . Z - gamma must vanish.
// When a closed-form flux G is supplied, compatibility means
// dG = dS . A + gamma.
// ---------------------------------------------------------------------------

inline ExprMatrix c1_residual(const SystemQL& sys, const Expr& S, const TransferVector& gamma) {
    const std::size_t p = sys.dim();
    if (gamma.comps.size() != p) throw std::invalid_argument("transfer vector has wrong length");
    ExprMatrix H = hessian(S, sys);
    ExprMatrix M(p, std::vector<Expr>(p, num(0)));
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            std::vector<Expr> terms;
            for (std::size_t k = 0; k < p; ++k) terms.push_back(H[i][k] * sys.jac[k][j]);
            terms.push_back(differentiate(gamma.comps[j], sys.vars[i]));
            M[i][j] = sum(std::move(terms));
        }
    // Antisymmetric by construction: zero diagonal, lower triangle the exact
    // negation of the upper.
    ExprMatrix R(p, std::vector<Expr>(p, num(0)));
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j) {
            R[i][j] = M[i][j] - M[j][i];
            R[j][i] = neg(R[i][j]);
        }
    return R;
}

inline std::vector<Expr> c2_residual(const SystemQL& sys, const Expr& S,
                                     const TransferVector& gamma) {
    const std::size_t p = sys.dim();
    if (gamma.comps.size() != p) throw std::invalid_argument("transfer vector has wrong length");
    std::vector<Expr> dS = entropic_variables(S, sys);
    std::vector<Expr> r(p);
    for (std::size_t j = 0; j < p; ++j) {
        std::vector<Expr> terms;
        for (std::size_t k = 0; k < p; ++k) terms.push_back(dS[k] * sys.noncons[k][j]);
        terms.push_back(neg(gamma.comps[j]));
        r[j] = sum(std::move(terms));
    }
    return r;
}

inline std::vector<Expr> flux_compatibility_residual(const SystemQL& sys, const Expr& S,
                                                     const TransferVector& gamma, const Expr& G) {
    const std::size_t p = sys.dim();
    std::vector<Expr> dS = entropic_variables(S, sys);
    std::vector<Expr> r(p);
    for (std::size_t j = 0; j < p; ++j) {
        std::vector<Expr> terms;
        terms.push_back(differentiate(G, sys.vars[j]));
        for (std::size_t k = 0; k < p; ++k) terms.push_back(neg(dS[k] * sys.jac[k][j]));
        terms.push_back(neg(gamma.comps[j]));
        r[j] = sum(std::move(terms));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Verdicts and the analysis report
// ---------------------------------------------------------------------------

struct EntryWitness {
    std::uint64_t sample_index = 0;
    int row = -1;  // -1 for vector residuals
    int col = 0;
    double value = 0.0;
    double normalized = 0.0;
    Assignment state;
};

struct ConditionReport {
    std::string condition;
    bool pass = true;
    double max_residual = 0.0;
    std::optional<EntryWitness> witness;
};

struct AnalyzeOptions {
    std::uint64_t samples = 200;
    double tol = 1e-9;          // normalized residual tolerance for identities
    double quad_tol = 1e-6;     // relative tolerance for quadrature-based checks
    std::uint64_t pairs = 20;   // state pairs for path-independence diagnostics
    std::optional<std::uint64_t> seed;  // overrides the system sampler seed
};

struct AnalysisReport {
    std::string model;
    std::uint64_t seed = 0;
    std::uint64_t samples = 0;
    double tolerance = 0.0;
    std::vector<ConditionReport> conditions;

    bool pass() const {
        for (auto& c : conditions)
            if (!c.pass) return false;
        return true;
    }
    const ConditionReport* find(const std::string& name) const {
        for (auto& c : conditions)
            if (c.condition == name) return &c;
        return nullptr;
    }
};

namespace detail {

struct LabeledExpr {
    int row;
    int col;
    Expr e;
};

/// Zero-tests a batch of residual expressions over shared sample states:
/// one evaluator per state, every entry checked at every state. Witness is
/// the first failure in (sample, entry) order; max is over everything.
inline ConditionReport batch_zero_test(const std::string& name,
                                       const std::vector<LabeledExpr>& entries,
                                       const DomainSampler& sampler, std::uint64_t n, double tol) {
    ConditionReport rep;
    rep.condition = name;
    std::uint64_t drawn = 0, used = 0;
    const std::uint64_t retry_cap = 10 * n + 100;
    while (used < n) {
        if (drawn >= retry_cap)
            throw SamplingError("domain error persists after " + std::to_string(drawn) +
                                " draws while checking " + name);
        std::uint64_t idx = drawn++;
        Assignment state;
        std::vector<std::pair<double, double>> evals;  // (value, normalized)
        evals.reserve(entries.size());
        try {
            state = sampler.sample(idx);
            Evaluator ev(state, &sampler.interps);
            for (auto& le : entries) {
                double value = ev.eval(le.e);
                double scale = residual_scale(le.e, ev);
                evals.push_back({value, std::abs(value) / (1.0 + scale)});
            }
        } catch (const EvalError& err) {
            if (err.kind == EvalError::Kind::UnassignedVariable ||
                err.kind == EvalError::Kind::UninterpretedSymbol)
                throw;  // structural, no point resampling
            continue;   // inadmissible draw; resample
        }
        for (std::size_t k = 0; k < entries.size(); ++k) {
            auto [value, normalized] = evals[k];
            if (normalized > rep.max_residual) rep.max_residual = normalized;
            if (normalized > tol && rep.pass) {
                rep.pass = false;
                rep.witness =
                    EntryWitness{idx, entries[k].row, entries[k].col, value, normalized, state};
            }
        }
        ++used;
    }
    return rep;
}

}  // namespace detail

inline DomainSampler seeded_sampler(const SystemQL& sys, const AnalyzeOptions& opt) {
    DomainSampler s = sys.sampler;
    if (opt.seed) s.seed = *opt.seed;
    return s;
}

/// Checks C1 and C2 by randomized identity testing; pass iff every entry of
/// both residuals tests zero.
inline AnalysisReport check_supplementary_law(const SystemQL& sys, const Expr& S,
                                              const TransferVector& gamma,
                                              const AnalyzeOptions& opt = {}) {
    DomainSampler sampler = seeded_sampler(sys, opt);
    AnalysisReport rep;
    rep.model = sys.name;
    rep.seed = sampler.seed;
    rep.samples = opt.samples;
    rep.tolerance = opt.tol;

    const std::size_t p = sys.dim();
    ExprMatrix R1 = c1_residual(sys, S, gamma);
    std::vector<detail::LabeledExpr> c1;
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j)  // antisymmetric: upper triangle suffices
            c1.push_back({static_cast<int>(i), static_cast<int>(j), R1[i][j]});
    rep.conditions.push_back(detail::batch_zero_test("C1", c1, sampler, opt.samples, opt.tol));

    std::vector<Expr> R2 = c2_residual(sys, S, gamma);
    std::vector<detail::LabeledExpr> c2;
    for (std::size_t j = 0; j < p; ++j) c2.push_back({-1, static_cast<int>(j), R2[j]});
    rep.conditions.push_back(detail::batch_zero_test("C2", c2, sampler, opt.samples, opt.tol));
    return rep;
}

enum class ReductionVerdict {
    Conservative,             // Z is structurally zero
    ConservativeCompatible,   // dS . Z tests zero: gamma = 0 is admissible
    NonConservative,          // dS . Z is nonzero: gamma = 0 cannot satisfy C2
};

/// With gamma = 0, C2 demands dS . Z = 0: decides whether the
/// non-conservative block contributes to the entropy balance at all.
inline ReductionVerdict conservative_reduction_check(const SystemQL& sys, const Expr& S,
                                                     const AnalyzeOptions& opt = {}) {
    bool structurally_zero = true;
    for (auto& row : sys.noncons)
        for (auto& e : row) structurally_zero = structurally_zero && is_zero(simplify(e));
    if (structurally_zero) return ReductionVerdict::Conservative;

    DomainSampler sampler = seeded_sampler(sys, opt);
    auto r = c2_residual(sys, S, zero_transfer(sys.dim()));
    std::vector<detail::LabeledExpr> entries;
    for (std::size_t j = 0; j < r.size(); ++j)
        entries.push_back({-1, static_cast<int>(j), r[j]});
    auto rep = detail::batch_zero_test("dS.Z", entries, sampler, opt.samples, opt.tol);
    return rep.pass ? ReductionVerdict::ConservativeCompatible : ReductionVerdict::NonConservative;
}

// ---------------------------------------------------------------------------
// Entropy-flux construction by path integration of the closed one-form
// omega = dS . A + gamma (closedness is exactly condition C1):
// G(target) - G(ref) = integral over any path of omega . dV.
// ---------------------------------------------------------------------------

enum class PathKind { Segment, Staircase };

struct QuadratureError : std::runtime_error {
    explicit QuadratureError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

// 15-point Gauss-Legendre rule on [-1, 1].
inline const std::array<std::pair<double, double>, 15>& gl15() {
    static const std::array<std::pair<double, double>, 15> rule = {{
        {0.0000000000000000, 0.2025782419255613},
        {-0.2011940939974345, 0.1984314853271116},
        {0.2011940939974345, 0.1984314853271116},
        {-0.3941513470775634, 0.1861610000155622},
        {0.3941513470775634, 0.1861610000155622},
        {-0.5709721726085388, 0.1662692058169939},
        {0.5709721726085388, 0.1662692058169939},
        {-0.7244177313601701, 0.1395706779261543},
        {0.7244177313601701, 0.1395706779261543},
        {-0.8482065834104272, 0.1071592204671719},
        {0.8482065834104272, 0.1071592204671719},
        {-0.9372733924007060, 0.0703660474881081},
        {0.9372733924007060, 0.0703660474881081},
        {-0.9879925180204854, 0.0307532419961173},
        {0.9879925180204854, 0.0307532419961173},
    }};
    return rule;
}

inline double gl15_on(const std::function<double(double)>& f, double a, double b) {
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double acc = 0;
    for (auto& [x, w] : gl15()) acc += w * f(mid + half * x);
    return acc * half;
}

inline double adaptive_quad(const std::function<double(double)>& f, double a, double b,
                            double tol, int depth = 0) {
    double whole = gl15_on(f, a, b);
    double mid = 0.5 * (a + b);
    double split = gl15_on(f, a, mid) + gl15_on(f, mid, b);
    if (std::abs(split - whole) <= tol * (1.0 + std::abs(split))) return split;
    if (depth > 24) throw QuadratureError("adaptive quadrature failed to converge");
    return adaptive_quad(f, a, mid, 0.5 * tol, depth + 1) +
           adaptive_quad(f, mid, b, 0.5 * tol, depth + 1);
}

}  // namespace detail

/// Integrates omega = dS . A + gamma along a path between two states given
/// as base-variable values in sys.vars order. With C1 satisfied the result
/// is path independent and equals G(target) - G(ref).
inline double integrate_entropy_flux(const SystemQL& sys, const Expr& S,
                                     const TransferVector& gamma,
                                     const std::vector<double>& ref,
                                     const std::vector<double>& target,
                                     PathKind path = PathKind::Segment, double quad_tol = 1e-9) {
    const std::size_t p = sys.dim();
    if (ref.size() != p || target.size() != p)
        throw std::invalid_argument("state dimension mismatch in path integration");

    std::vector<Expr> dS = entropic_variables(S, sys);
    std::vector<Expr> omega(p);
    for (std::size_t j = 0; j < p; ++j) {
        std::vector<Expr> terms;
        for (std::size_t k = 0; k < p; ++k) terms.push_back(dS[k] * sys.jac[k][j]);
        terms.push_back(gamma.comps[j]);
        omega[j] = sum(std::move(terms));
    }

    auto omega_at = [&](const std::vector<double>& v, std::size_t j) {
        std::vector<std::pair<std::string, double>> vals;
        for (std::size_t k = 0; k < p; ++k) vals.push_back({sys.vars[k], v[k]});
        Assignment a = sys.sampler.at(vals);
        Evaluator ev(a, &sys.sampler.interps);
        return ev.eval(omega[j]);
    };

    if (path == PathKind::Segment) {
        auto f = [&](double t) {
            std::vector<double> v(p);
            for (std::size_t k = 0; k < p; ++k) v[k] = ref[k] + t * (target[k] - ref[k]);
            double acc = 0;
            for (std::size_t j = 0; j < p; ++j)
                if (target[j] != ref[j]) acc += omega_at(v, j) * (target[j] - ref[j]);
            return acc;
        };
        return detail::adaptive_quad(f, 0.0, 1.0, quad_tol);
    }

    // Staircase: one coordinate at a time. If an intermediate corner leaves
    // the admissible domain, re-route by walking the coordinates in reverse.
    auto walk = [&](const std::vector<std::size_t>& order) {
        std::vector<double> cur = ref;
        double total = 0;
        for (std::size_t j : order) {
            if (target[j] == ref[j]) continue;
            auto f = [&](double t) {
                std::vector<double> v = cur;
                v[j] = t;
                return omega_at(v, j);
            };
            total += detail::adaptive_quad(f, cur[j], target[j], quad_tol);
            cur[j] = target[j];
        }
        return total;
    };
    std::vector<std::size_t> order(p);
    for (std::size_t i = 0; i < p; ++i) order[i] = i;
    try {
        return walk(order);
    } catch (const EvalError&) {
        std::vector<std::size_t> rev(order.rbegin(), order.rend());
        try {
            return walk(rev);
        } catch (const EvalError& e) {
            throw QuadratureError(std::string("staircase path exits the admissible domain "
                                              "in both orderings: ") + e.what());
        }
    }
}

/// Full analysis: C1, C2, then flux compatibility when G is given, or a
/// path-independence probe (segment vs staircase on sampled state pairs)
/// when it is not and C1 passed.
inline AnalysisReport analyze(const SystemQL& sys, const EntropyCandidate& cand,
                              const TransferVector& gamma, const AnalyzeOptions& opt = {}) {
    AnalysisReport rep = check_supplementary_law(sys, cand.S, gamma, opt);
    DomainSampler sampler = seeded_sampler(sys, opt);

    if (cand.G) {
        auto r = flux_compatibility_residual(sys, cand.S, gamma, *cand.G);
        std::vector<detail::LabeledExpr> entries;
        for (std::size_t j = 0; j < r.size(); ++j)
            entries.push_back({-1, static_cast<int>(j), r[j]});
        rep.conditions.push_back(detail::batch_zero_test("flux_compatibility", entries, sampler,
                                                         opt.samples, opt.tol));
    } else if (rep.pass()) {
        ConditionReport pc;
        pc.condition = "path_independence";
        const std::size_t p = sys.dim();
        std::uint64_t done = 0, idx = 0;
        const std::uint64_t cap = 10 * opt.pairs + 100;
        while (done < opt.pairs && idx < cap) {
            std::uint64_t i = idx++;
            try {
                Assignment a = sampler.sample(2 * i);
                Assignment b = sampler.sample(2 * i + 1);
                std::vector<double> ra(p), rb(p);
                for (std::size_t k = 0; k < p; ++k) {
                    ra[k] = a.at(sys.vars[k]);
                    rb[k] = b.at(sys.vars[k]);
                }
                double seg = integrate_entropy_flux(sys, cand.S, gamma, ra, rb, PathKind::Segment);
                double stc = integrate_entropy_flux(sys, cand.S, gamma, ra, rb, PathKind::Staircase);
                double rel = std::abs(seg - stc) / std::max(1.0, std::max(std::abs(seg), std::abs(stc)));
                if (rel > pc.max_residual) pc.max_residual = rel;
                if (rel > opt.quad_tol && pc.pass) {
                    pc.pass = false;
                    pc.witness = EntryWitness{i, -1, 0, seg - stc, rel, a};
                }
                ++done;
            } catch (const EvalError&) {
                continue;
            } catch (const QuadratureError&) {
                continue;
            }
        }
        rep.conditions.push_back(std::move(pc));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// JSON serialization (schema/analysis_report.schema.json)
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const EntryWitness& w, const std::vector<std::string>& vars) {
    nlohmann::json state = nlohmann::json::object();
    for (auto& v : vars)
        if (w.state.count(v)) state[v] = w.state.at(v);
    nlohmann::json j{{"sample_index", w.sample_index},
                     {"value", w.value},
                     {"normalized", w.normalized},
                     {"state", state}};
    if (w.row >= 0) j["entry"] = {w.row, w.col};
    else j["entry"] = {w.col};
    return j;
}

inline nlohmann::json to_json(const AnalysisReport& rep, const std::vector<std::string>& vars) {
    nlohmann::json conditions = nlohmann::json::array();
    for (auto& c : rep.conditions) {
        nlohmann::json jc{{"condition", c.condition},
                          {"verdict", c.pass ? "pass" : "fail"},
                          {"max_residual", c.max_residual}};
        jc["witness_state"] = c.witness ? to_json(*c.witness, vars) : nlohmann::json(nullptr);
        conditions.push_back(std::move(jc));
    }
    return nlohmann::json{{"model", rep.model},
                          {"seed", rep.seed},
                          {"samples", rep.samples},
                          {"tolerance", rep.tolerance},
                          {"verdict", rep.pass() ? "pass" : "fail"},
                          {"conditions", std::move(conditions)}};
}

}  // namespace entlaw
