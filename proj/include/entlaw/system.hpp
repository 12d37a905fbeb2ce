#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "entlaw/model.hpp"
#include "entlaw/sampler.hpp"

namespace entlaw {

using ExprMatrix = std::vector<std::vector<Expr>>;

struct ModelError : std::runtime_error {
    std::vector<Diagnostic> diagnostics;
    explicit ModelError(std::vector<Diagnostic> diags)
        : std::runtime_error(diags.empty() ? "invalid model" : diags.front().str()),
          diagnostics(std::move(diags)) {}
};

/// A PDE system in quasi-linear form d_t V + [A(V) + Z(V)] d_x V = 0 with
/// every expression fully inlined over the state variables (auxiliaries
/// substituted away), plus the sampler describing the admissible domain.
struct SystemQL {
    std::string name;
    std::vector<std::string> vars;
    ExprMatrix jac;                         // A(V)
    std::optional<std::vector<Expr>> flux;  // F(V) when the model is flux-form
    ExprMatrix noncons;                     // Z(V)
    DomainSampler sampler;

    std::size_t dim() const { return vars.size(); }

    std::size_t var_index(const std::string& v) const {
        for (std::size_t i = 0; i < vars.size(); ++i)
            if (vars[i] == v) return i;
        throw std::invalid_argument("unknown state variable '" + v + "'");
    }
};

struct EntropyCandidate {
    Expr S;
    std::optional<Expr> G;
};

struct TransferVector {
    std::vector<Expr> comps;  // row vector, length p
};

inline TransferVector zero_transfer(std::size_t p) {
    TransferVector t;
    t.comps.assign(p, num(0));
    return t;
}

namespace detail {

inline std::map<std::string, Expr> aux_bindings(const ModelSpec& m) {
    std::map<std::string, Expr> b;
    for (auto& [n, e] : m.aux) b[n] = e;
    return b;
}

}  // namespace detail

/// Substitutes all auxiliary definitions of the model into e.
inline Expr inline_aux(const ModelSpec& m, const Expr& e) {
    return substitute(e, detail::aux_bindings(m));
}

/// Builds the quasi-linear system from a validated model. Flux-form models
/// get their Jacobian by exact differentiation of the inlined flux.
inline SystemQL build_system(const ModelSpec& m, Interpretations interps = {}) {
    auto diags = validate(m);
    if (!diags.empty()) throw ModelError(std::move(diags));

    SystemQL sys;
    sys.name = m.name;
    for (auto& v : m.vars) sys.vars.push_back(v.name);
    const std::size_t p = sys.dim();

    auto binds = detail::aux_bindings(m);
    auto inl = [&](const Expr& e) { return substitute(e, binds); };

    if (m.flux) {
        sys.flux.emplace();
        for (auto& f : *m.flux) sys.flux->push_back(inl(f));
        sys.jac.assign(p, std::vector<Expr>(p, num(0)));
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j)
                sys.jac[i][j] = differentiate((*sys.flux)[i], sys.vars[j]);
    } else {
        sys.jac.assign(p, std::vector<Expr>(p, num(0)));
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j) sys.jac[i][j] = inl((*m.jacobian)[i][j]);
    }

    sys.noncons.assign(p, std::vector<Expr>(p, num(0)));
    for (std::size_t i = 0; i < m.noncons.size(); ++i)
        for (std::size_t j = 0; j < m.noncons[i].size(); ++j)
            sys.noncons[i][j] = inl(m.noncons[i][j]);

    for (auto& v : m.vars) sys.sampler.add_base(v.name, v.bounds->lo, v.bounds->hi);
    for (auto& [n, r] : m.constants) sys.sampler.add_fixed(n, r.to_double());
    for (auto& [n, e] : m.aux) sys.sampler.add_derived(n, e);
    sys.sampler.interps = std::move(interps);
    return sys;
}

inline EntropyCandidate entropy_candidate(const ModelSpec& m) {
    if (!m.entropy) throw std::invalid_argument("model declares no entropy");
    EntropyCandidate c;
    c.S = inline_aux(m, *m.entropy);
    if (m.entropy_flux) c.G = inline_aux(m, *m.entropy_flux);
    return c;
}

inline TransferVector transfer_vector(const ModelSpec& m) {
    if (!m.transfer) return zero_transfer(m.dim());
    TransferVector t;
    for (auto& e : *m.transfer) t.comps.push_back(inline_aux(m, e));
    return t;
}

/// Row vector of entropic variables (dS/dV_1, ..., dS/dV_p).
inline std::vector<Expr> entropic_variables(const Expr& S, const SystemQL& sys) {
    std::vector<Expr> v;
    v.reserve(sys.dim());
    for (auto& name : sys.vars) v.push_back(differentiate(S, name));
    return v;
}

/// Hessian of S over the state variables; symmetric by Clairaut.
inline ExprMatrix hessian(const Expr& S, const SystemQL& sys) {
    const std::size_t p = sys.dim();
    std::vector<Expr> grad = entropic_variables(S, sys);
    ExprMatrix H(p, std::vector<Expr>(p, num(0)));
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) H[i][j] = differentiate(grad[i], sys.vars[j]);
    return H;
}

inline const ExprMatrix& jacobian_matrix(const SystemQL& sys) { return sys.jac; }

}  // namespace entlaw
