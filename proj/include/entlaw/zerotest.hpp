#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "entlaw/eval.hpp"
#include "entlaw/expr.hpp"
#include "entlaw/sampler.hpp"

namespace entlaw {

struct ZeroWitness {
    std::uint64_t sample_index = 0;
    Assignment state;
    double value = 0.0;       // raw residual at the witness
    double normalized = 0.0;  // residual / (1 + largest additive term)
};

struct ZeroVerdict {
    bool zero = true;
    double max_normalized = 0.0;
    std::optional<ZeroWitness> witness;
};

struct SamplingError : std::runtime_error {
    explicit SamplingError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

/// Top-level additive terms of an expression (children of a sum, looking
/// through negation). Used to normalize residuals so that cancellation
/// between large terms cannot masquerade as a zero identity.
inline void additive_terms(const Expr& e, std::vector<Expr>& out) {
    if (e->kind == ExprKind::Sum) {
        for (auto& c : e->children) additive_terms(c, out);
    } else if (e->kind == ExprKind::Negate) {
        additive_terms(e->children[0], out);
    } else {
        out.push_back(e);
    }
}

}  // namespace detail

/// Scale for relative normalization: magnitude of the largest additive
/// subterm of e at the given state.
inline double residual_scale(const Expr& e, Evaluator& ev) {
    std::vector<Expr> terms;
    detail::additive_terms(e, terms);
    double scale = 0.0;
    for (auto& t : terms) scale = std::max(scale, std::abs(ev.eval(t)));
    return scale;
}

/// Randomized zero test: evaluates |e| at n sampled states, normalized by
/// 1 + the largest additive subterm magnitude at that state. Inadmissible
/// draws are resampled up to a retry cap.
inline ZeroVerdict is_identically_zero(const Expr& e, const DomainSampler& sampler,
                                       std::uint64_t n, double tol) {
    if (n < 1) throw std::invalid_argument("is_identically_zero: n must be >= 1");
    if (!(tol > 0)) throw std::invalid_argument("is_identically_zero: tol must be > 0");
    ZeroVerdict v;
    std::uint64_t drawn = 0, used = 0;
    const std::uint64_t retry_cap = 10 * n + 100;
    while (used < n) {
        if (drawn >= retry_cap)
            throw SamplingError("domain error persists after " + std::to_string(drawn) +
                                " draws while zero-testing");
        std::uint64_t idx = drawn++;
        Assignment state;
        double value, scale;
        try {
            state = sampler.sample(idx);
            Evaluator ev(state, &sampler.interps);
            value = ev.eval(e);
            scale = residual_scale(e, ev);
        } catch (const EvalError& err) {
            if (err.kind == EvalError::Kind::UnassignedVariable ||
                err.kind == EvalError::Kind::UninterpretedSymbol)
                throw;         // structural, no point resampling
            continue;          // inadmissible draw, resample
        }
        ++used;
        double normalized = std::abs(value) / (1.0 + scale);
        if (normalized > v.max_normalized) v.max_normalized = normalized;
        if (normalized > tol && v.zero) {
            v.zero = false;
            v.witness = ZeroWitness{idx, std::move(state), value, normalized};
        }
    }
    return v;
}

}  // namespace entlaw
