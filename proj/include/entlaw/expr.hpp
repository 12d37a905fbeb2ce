#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "entlaw/rational.hpp"

namespace entlaw {

enum class ExprKind : std::uint8_t {
    Constant,   // exact rational
    Variable,   // named symbol
    Negate,     // -child
    Sum,        // child0 + child1 + ... (flattened, >= 2 children)
    Product,    // child0 * child1 * ... (flattened, >= 2 children)
    Quotient,   // child0 / child1
    Power,      // child0 ^ rational exponent
    Ln,         // ln(child0)
    Call,       // abstract function symbol applied to children
};

class ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

class ExprNode {
public:
    ExprKind kind;
    Rational constant;           // Constant
    Rational exponent;           // Power
    std::string name;            // Variable, Call
    std::vector<Expr> children;  // Negate/Sum/Product/Quotient/Power/Ln/Call

    ExprNode(ExprKind k) : kind(k) {}
};

struct ExprError : std::runtime_error {
    explicit ExprError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Constructors. These canonicalize on the way in: rational constants fold,
// sums/products flatten and drop identity elements, so every Expr in the
// program already satisfies the structural invariants.
// ---------------------------------------------------------------------------

inline Expr constant(const Rational& r) {
    auto n = std::make_shared<ExprNode>(ExprKind::Constant);
    n->constant = r;
    return n;
}

inline Expr num(long long v) { return constant(Rational(v)); }
inline Expr frac(long long n, long long d) { return constant(Rational(n, d)); }

inline Expr variable(const std::string& name) {
    auto n = std::make_shared<ExprNode>(ExprKind::Variable);
    n->name = name;
    return n;
}

inline bool is_const(const Expr& e) { return e->kind == ExprKind::Constant; }
inline bool is_zero(const Expr& e) { return is_const(e) && e->constant.is_zero(); }
inline bool is_one(const Expr& e) { return is_const(e) && e->constant.is_one(); }

inline Expr neg(const Expr& e) {
    if (is_const(e)) return constant(-e->constant);
    if (e->kind == ExprKind::Negate) return e->children[0];
    auto n = std::make_shared<ExprNode>(ExprKind::Negate);
    n->children = {e};
    return n;
}

inline Expr sum(std::vector<Expr> terms) {
    std::vector<Expr> flat;
    Rational c(0);
    for (auto& t : terms) {
        if (!t) throw ExprError("null expression in sum");
        if (t->kind == ExprKind::Sum) {
            for (auto& s : t->children) {
                if (is_const(s))
                    c = c + s->constant;
                else
                    flat.push_back(s);
            }
        } else if (is_const(t)) {
            c = c + t->constant;
        } else {
            flat.push_back(t);
        }
    }
    if (!c.is_zero()) flat.push_back(constant(c));
    if (flat.empty()) return num(0);
    if (flat.size() == 1) return flat[0];
    auto n = std::make_shared<ExprNode>(ExprKind::Sum);
    n->children = std::move(flat);
    return n;
}

inline Expr product(std::vector<Expr> factors) {
    std::vector<Expr> flat;
    Rational c(1);
    for (auto& f : factors) {
        if (!f) throw ExprError("null expression in product");
        if (f->kind == ExprKind::Product) {
            for (auto& s : f->children) {
                if (is_const(s))
                    c = c * s->constant;
                else
                    flat.push_back(s);
            }
        } else if (is_const(f)) {
            c = c * f->constant;
        } else {
            flat.push_back(f);
        }
    }
    if (c.is_zero()) return num(0);
    if (flat.empty()) return constant(c);
    if (!c.is_one()) flat.insert(flat.begin(), constant(c));
    if (flat.size() == 1) return flat[0];
    auto n = std::make_shared<ExprNode>(ExprKind::Product);
    n->children = std::move(flat);
    return n;
}

inline Expr quotient(const Expr& n, const Expr& d) {
    if (is_const(d)) {
        if (d->constant.is_zero()) throw ExprError("quotient with structurally zero denominator");
        if (is_const(n)) return constant(n->constant / d->constant);
        if (d->constant.is_one()) return n;
        return product({constant(Rational(1) / d->constant), n});
    }
    if (is_zero(n)) return num(0);
    auto q = std::make_shared<ExprNode>(ExprKind::Quotient);
    q->children = {n, d};
    return q;
}

inline Expr power(const Expr& base, const Rational& exp) {
    if (exp.is_zero()) return num(1);
    if (exp.is_one()) return base;
    if (is_const(base)) {
        if (base->constant.is_zero() && exp.is_negative())
            throw ExprError("0 raised to a negative power");
        if (exp.is_integer()) return constant(Rational::pow(base->constant, exp.num()));
        if (base->constant.is_zero()) return num(0);
    }
    auto n = std::make_shared<ExprNode>(ExprKind::Power);
    n->children = {base};
    n->exponent = exp;
    return n;
}

inline Expr ln(const Expr& arg) {
    if (is_one(arg)) return num(0);
    auto n = std::make_shared<ExprNode>(ExprKind::Ln);
    n->children = {arg};
    return n;
}

inline Expr call(const std::string& symbol, std::vector<Expr> args) {
    auto n = std::make_shared<ExprNode>(ExprKind::Call);
    n->name = symbol;
    n->children = std::move(args);
    return n;
}

/// Name of the formal derivative of abstract symbol `symbol` in argument
/// slot `slot` (0-based). psi1 -> psi1_d1, psi1_d1 -> psi1_d1_d1, ...
inline std::string formal_derivative_name(const std::string& symbol, std::size_t slot) {
    return symbol + "_d" + std::to_string(slot + 1);
}

// Operator sugar for building expressions in the model builders.
inline Expr operator+(const Expr& a, const Expr& b) { return sum({a, b}); }
inline Expr operator-(const Expr& a, const Expr& b) { return sum({a, neg(b)}); }
inline Expr operator*(const Expr& a, const Expr& b) { return product({a, b}); }
inline Expr operator/(const Expr& a, const Expr& b) { return quotient(a, b); }
inline Expr operator-(const Expr& a) { return neg(a); }

// ---------------------------------------------------------------------------
// Structural equality, variable collection, printing
// ---------------------------------------------------------------------------

inline bool expr_equal(const Expr& a, const Expr& b) {
    if (a.get() == b.get()) return true;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case ExprKind::Constant: return a->constant == b->constant;
        case ExprKind::Variable: return a->name == b->name;
        case ExprKind::Power:
            if (a->exponent != b->exponent) return false;
            break;
        case ExprKind::Call:
            if (a->name != b->name) return false;
            break;
        default: break;
    }
    if (a->children.size() != b->children.size()) return false;
    for (std::size_t i = 0; i < a->children.size(); ++i)
        if (!expr_equal(a->children[i], b->children[i])) return false;
    return true;
}

inline void collect_variables(const Expr& e, std::set<std::string>& out) {
    if (e->kind == ExprKind::Variable) out.insert(e->name);
    for (auto& c : e->children) collect_variables(c, out);
}

inline std::set<std::string> variables_of(const Expr& e) {
    std::set<std::string> s;
    collect_variables(e, s);
    return s;
}

inline void collect_call_symbols(const Expr& e, std::set<std::string>& out) {
    if (e->kind == ExprKind::Call) out.insert(e->name);
    for (auto& c : e->children) collect_call_symbols(c, out);
}

namespace detail {

// Precedence levels for printing: 0 sum, 1 product/quotient, 2 unary minus,
// 3 power, 4 atom.
inline int print_prec(const Expr& e) {
    switch (e->kind) {
        case ExprKind::Sum: return 0;
        case ExprKind::Product:
        case ExprKind::Quotient: return 1;
        case ExprKind::Negate: return 2;
        case ExprKind::Power: return 3;
        case ExprKind::Constant:
            return e->constant.is_negative() || !e->constant.is_integer() ? 2 : 4;
        default: return 4;
    }
}

inline void print_expr(const Expr& e, std::string& out, int parent_prec);

inline void print_child(const Expr& e, std::string& out, int parent_prec) {
    bool parens = print_prec(e) < parent_prec;
    if (parens) out += "(";
    print_expr(e, out, 0);
    if (parens) out += ")";
}

inline void print_expr(const Expr& e, std::string& out, int) {
    switch (e->kind) {
        case ExprKind::Constant: out += e->constant.str(); break;
        case ExprKind::Variable: out += e->name; break;
        case ExprKind::Negate:
            out += "-";
            print_child(e->children[0], out, 3);
            break;
        case ExprKind::Sum:
            for (std::size_t i = 0; i < e->children.size(); ++i) {
                const Expr& t = e->children[i];
                if (i == 0) {
                    print_child(t, out, 1);
                } else if (t->kind == ExprKind::Negate) {
                    out += " - ";
                    print_child(t->children[0], out, 2);
                } else if (is_const(t) && t->constant.is_negative()) {
                    out += " - ";
                    out += (-t->constant).str();
                } else {
                    out += " + ";
                    print_child(t, out, 1);
                }
            }
            break;
        case ExprKind::Product:
            for (std::size_t i = 0; i < e->children.size(); ++i) {
                if (i) out += "*";
                print_child(e->children[i], out, 2);
            }
            break;
        case ExprKind::Quotient:
            print_child(e->children[0], out, 2);
            out += "/";
            print_child(e->children[1], out, 3);
            break;
        case ExprKind::Power:
            print_child(e->children[0], out, 4);
            out += "^";
            if (e->exponent.is_integer() && !e->exponent.is_negative()) {
                out += e->exponent.str();
            } else {
                out += "(";
                out += e->exponent.str();
                out += ")";
            }
            break;
        case ExprKind::Ln:
            out += "ln(";
            print_expr(e->children[0], out, 0);
            out += ")";
            break;
        case ExprKind::Call:
            out += e->name;
            out += "(";
            for (std::size_t i = 0; i < e->children.size(); ++i) {
                if (i) out += ", ";
                print_expr(e->children[i], out, 0);
            }
            out += ")";
            break;
    }
}

}  // namespace detail

inline std::string to_string(const Expr& e) {
    std::string out;
    detail::print_expr(e, out, 0);
    return out;
}

// ---------------------------------------------------------------------------
// simplify: bottom-up rebuild through the canonicalizing constructors plus
// local identities (constant folding, 0/1 rules, flattening). Idempotent and
// value-preserving; no term collection or factoring is attempted.
// ---------------------------------------------------------------------------

inline Expr simplify(const Expr& e) {
    switch (e->kind) {
        case ExprKind::Constant:
        case ExprKind::Variable: return e;
        case ExprKind::Negate: return neg(simplify(e->children[0]));
        case ExprKind::Sum: {
            std::vector<Expr> ts;
            ts.reserve(e->children.size());
            for (auto& c : e->children) ts.push_back(simplify(c));
            return sum(std::move(ts));
        }
        case ExprKind::Product: {
            std::vector<Expr> fs;
            fs.reserve(e->children.size());
            for (auto& c : e->children) fs.push_back(simplify(c));
            return product(std::move(fs));
        }
        case ExprKind::Quotient:
            return quotient(simplify(e->children[0]), simplify(e->children[1]));
        case ExprKind::Power: return power(simplify(e->children[0]), e->exponent);
        case ExprKind::Ln: return ln(simplify(e->children[0]));
        case ExprKind::Call: {
            std::vector<Expr> as;
            as.reserve(e->children.size());
            for (auto& c : e->children) as.push_back(simplify(c));
            return call(e->name, std::move(as));
        }
    }
    throw ExprError("unreachable expression kind");
}

// ---------------------------------------------------------------------------
// differentiate: exact partial derivative with respect to a variable name.
// Abstract calls differentiate through the chain rule into formal-derivative
// symbols: d/dx f(a, b) = f_d1(a, b)*da/dx + f_d2(a, b)*db/dx.
// ---------------------------------------------------------------------------

inline Expr differentiate(const Expr& e, const std::string& v) {
    switch (e->kind) {
        case ExprKind::Constant: return num(0);
        case ExprKind::Variable: return e->name == v ? num(1) : num(0);
        case ExprKind::Negate: return neg(differentiate(e->children[0], v));
        case ExprKind::Sum: {
            std::vector<Expr> ts;
            for (auto& c : e->children) ts.push_back(differentiate(c, v));
            return sum(std::move(ts));
        }
        case ExprKind::Product: {
            std::vector<Expr> ts;
            for (std::size_t i = 0; i < e->children.size(); ++i) {
                Expr di = differentiate(e->children[i], v);
                if (is_zero(di)) continue;
                std::vector<Expr> fs;
                for (std::size_t j = 0; j < e->children.size(); ++j)
                    fs.push_back(j == i ? di : e->children[j]);
                ts.push_back(product(std::move(fs)));
            }
            return sum(std::move(ts));
        }
        case ExprKind::Quotient: {
            const Expr& n = e->children[0];
            const Expr& d = e->children[1];
            Expr dn = differentiate(n, v);
            Expr dd = differentiate(d, v);
            if (is_zero(dd)) return quotient(dn, d);
            return quotient(sum({product({dn, d}), neg(product({n, dd}))}), power(d, Rational(2)));
        }
        case ExprKind::Power: {
            const Expr& b = e->children[0];
            Expr db = differentiate(b, v);
            if (is_zero(db)) return num(0);
            return product({constant(e->exponent), power(b, e->exponent - Rational(1)), db});
        }
        case ExprKind::Ln: {
            Expr da = differentiate(e->children[0], v);
            if (is_zero(da)) return num(0);
            return quotient(da, e->children[0]);
        }
        case ExprKind::Call: {
            std::vector<Expr> ts;
            for (std::size_t i = 0; i < e->children.size(); ++i) {
                Expr di = differentiate(e->children[i], v);
                if (is_zero(di)) continue;
                ts.push_back(product({call(formal_derivative_name(e->name, i), e->children), di}));
            }
            return sum(std::move(ts));
        }
    }
    throw ExprError("unreachable expression kind");
}

// ---------------------------------------------------------------------------
// substitute: simultaneous capture-free substitution. Bindings may reference
// each other; they are resolved in dependency order first (cycle -> error),
// so the result contains none of the bound names.
// ---------------------------------------------------------------------------

namespace detail {

inline Expr replace_vars(const Expr& e, const std::map<std::string, Expr>& res,
                         std::map<const ExprNode*, Expr>& memo) {
    if (e->kind == ExprKind::Variable) {
        auto it = res.find(e->name);
        return it != res.end() ? it->second : e;
    }
    if (e->children.empty()) return e;
    auto mit = memo.find(e.get());
    if (mit != memo.end()) return mit->second;
    std::vector<Expr> cs;
    cs.reserve(e->children.size());
    bool changed = false;
    for (auto& c : e->children) {
        Expr r = replace_vars(c, res, memo);
        changed = changed || r.get() != c.get();
        cs.push_back(std::move(r));
    }
    Expr out;
    if (!changed) {
        out = e;
    } else {
        switch (e->kind) {
            case ExprKind::Negate: out = neg(cs[0]); break;
            case ExprKind::Sum: out = sum(std::move(cs)); break;
            case ExprKind::Product: out = product(std::move(cs)); break;
            case ExprKind::Quotient: out = quotient(cs[0], cs[1]); break;
            case ExprKind::Power: out = power(cs[0], e->exponent); break;
            case ExprKind::Ln: out = ln(cs[0]); break;
            case ExprKind::Call: out = call(e->name, std::move(cs)); break;
            default: out = e;
        }
    }
    memo.emplace(e.get(), out);
    return out;
}

}  // namespace detail

/// Resolves bindings against each other in dependency order. Throws
/// ExprError on a cyclic binding chain.
inline std::map<std::string, Expr> resolve_bindings(const std::map<std::string, Expr>& bindings) {
    std::map<std::string, Expr> resolved;
    std::map<std::string, int> state;  // 0 untouched, 1 in progress, 2 done

    std::function<void(const std::string&)> visit = [&](const std::string& name) {
        auto it = bindings.find(name);
        if (it == bindings.end()) return;
        if (it->second->kind == ExprKind::Variable && it->second->name == name) return;
        int& st = state[name];
        if (st == 2) return;
        if (st == 1) throw ExprError("cyclic binding chain through '" + name + "'");
        st = 1;
        for (auto& dep : variables_of(it->second)) visit(dep);
        std::map<const ExprNode*, Expr> memo;
        resolved[name] = detail::replace_vars(it->second, resolved, memo);
        st = 2;
    };
    for (auto& [name, _] : bindings) visit(name);
    return resolved;
}

inline Expr substitute(const Expr& e, const std::map<std::string, Expr>& bindings) {
    auto resolved = resolve_bindings(bindings);
    std::map<const ExprNode*, Expr> memo;
    return simplify(detail::replace_vars(e, resolved, memo));
}

}  // namespace entlaw
