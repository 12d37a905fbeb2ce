#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "entlaw/eval.hpp"
#include "entlaw/expr.hpp"
#include "entlaw/sampler.hpp"

namespace testutil {

using namespace entlaw;

inline std::uint64_t rng_next(std::uint64_t& s) { return s = detail::splitmix64(s); }

inline double rng_unit(std::uint64_t& s) { return detail::unit_double(rng_next(s)); }

inline double rng_in(std::uint64_t& s, double lo, double hi) {
    return lo + (hi - lo) * rng_unit(s);
}

/// Central finite difference of e with respect to var at the given state.
inline double fd_derivative(const Expr& e, const std::string& var, Assignment state,
                            const Interpretations* interps = nullptr, double h = 1e-6) {
    double x = state.at(var);
    state[var] = x + h;
    double fp = evaluate(e, state, interps);
    state[var] = x - h;
    double fm = evaluate(e, state, interps);
    state[var] = x;
    return (fp - fm) / (2 * h);
}

/// Derivative tolerance used throughout: max(1e-6, 1e-4*|value|).
inline bool deriv_close(double symbolic, double fd) {
    return std::abs(symbolic - fd) <= std::max(1e-6, 1e-4 * std::abs(symbolic));
}

/// Random expression over the given variables, total-by-construction: every
/// ln argument and denominator has the form 1 + (...)^2 so any real state is
/// admissible. node_budget roughly bounds the tree size.
inline Expr random_expr(std::uint64_t& s, const std::vector<std::string>& vars, int node_budget) {
    auto leaf = [&]() -> Expr {
        if (rng_unit(s) < 0.4) {
            long long n = static_cast<long long>(rng_in(s, -6, 6));
            long long d = 1 + static_cast<long long>(rng_in(s, 0, 4));
            return frac(n == 0 ? 1 : n, d);
        }
        return variable(vars[rng_next(s) % vars.size()]);
    };
    std::function<Expr(int)> gen = [&](int budget) -> Expr {
        if (budget <= 1) return leaf();
        switch (rng_next(s) % 6) {
            case 0: return gen(budget / 2) + gen(budget / 2);
            case 1: return gen(budget / 2) - gen(budget / 2);
            case 2: return gen(budget / 2) * gen(budget / 2);
            case 3: {
                Expr d = gen(budget / 2 - 1);
                return gen(budget / 2) / (num(1) + d * d);
            }
            case 4: {
                Expr a = gen(budget - 2);
                return ln(num(1) + a * a);
            }
            default: return power(gen(budget - 1), Rational(2 + (rng_next(s) % 2)));
        }
    };
    return gen(node_budget);
}

inline Assignment random_state(std::uint64_t& s, const std::vector<std::string>& vars,
                               double lo = -2.0, double hi = 2.0) {
    Assignment a;
    for (auto& v : vars) a[v] = rng_in(s, lo, hi);
    return a;
}

inline bool rel_close(double a, double b, double rel, double abs_floor = 1e-12) {
    double d = std::abs(a - b);
    return d <= abs_floor || d <= rel * std::max(std::abs(a), std::abs(b));
}

}  // namespace testutil
