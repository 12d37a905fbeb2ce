#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "entlaw/expr.hpp"

namespace entlaw {

struct EvalError : std::runtime_error {
    enum class Kind {
        UnassignedVariable,
        UninterpretedSymbol,
        LogNonPositive,
        DivisionByZero,
        InvalidPower,
        NonFinite,
    };
    Kind kind;
    EvalError(Kind k, const std::string& what) : std::runtime_error(what), kind(k) {}
};

using Assignment = std::unordered_map<std::string, double>;

/// Concrete evaluator for an abstract function symbol.
using AbstractFn = std::function<double(const std::vector<double>&)>;

struct Interpretations {
    std::unordered_map<std::string, AbstractFn> fns;

    bool has(const std::string& name) const { return fns.count(name) != 0; }

    /// Binds a unary symbol together with its formal-derivative chain:
    /// name, name_d1, name_d1_d1, ... one entry per supplied function.
    void bind_unary_chain(const std::string& name, std::vector<std::function<double(double)>> chain) {
        std::string sym = name;
        for (auto& f : chain) {
            fns[sym] = [f](const std::vector<double>& a) { return f(a.at(0)); };
            sym = formal_derivative_name(sym, 0);
        }
    }
};

/// Tree-walking evaluator with per-instance memoisation keyed on node
/// identity, so shared subtrees are computed once per state. Every
/// expression evaluated through one instance must stay alive as long as
/// the instance does: the memo holds raw node pointers.
class Evaluator {
public:
    Evaluator(const Assignment& values, const Interpretations* interps = nullptr)
        : values_(values), interps_(interps) {}

    double eval(const Expr& e) {
        switch (e->kind) {
            case ExprKind::Constant: return e->constant.to_double();
            case ExprKind::Variable: {
                auto it = values_.find(e->name);
                if (it == values_.end())
                    throw EvalError(EvalError::Kind::UnassignedVariable,
                                    "unassigned variable '" + e->name + "'");
                return it->second;
            }
            default: break;
        }
        auto mit = memo_.find(e.get());
        if (mit != memo_.end()) return mit->second;
        double v = eval_node(e);
        if (!std::isfinite(v))
            throw EvalError(EvalError::Kind::NonFinite,
                            "non-finite value while evaluating " + head_of(e));
        memo_.emplace(e.get(), v);
        return v;
    }

private:
    static std::string head_of(const Expr& e) {
        std::string s = to_string(e);
        if (s.size() > 60) s = s.substr(0, 57) + "...";
        return "'" + s + "'";
    }

    double eval_node(const Expr& e) {
        switch (e->kind) {
            case ExprKind::Negate: return -eval(e->children[0]);
            case ExprKind::Sum: {
                double acc = 0;
                for (auto& c : e->children) acc += eval(c);
                return acc;
            }
            case ExprKind::Product: {
                double acc = 1;
                for (auto& c : e->children) acc *= eval(c);
                return acc;
            }
            case ExprKind::Quotient: {
                double d = eval(e->children[1]);
                if (d == 0.0)
                    throw EvalError(EvalError::Kind::DivisionByZero,
                                    "division by zero in " + head_of(e));
                return eval(e->children[0]) / d;
            }
            case ExprKind::Power: {
                double b = eval(e->children[0]);
                const Rational& r = e->exponent;
                if (r.is_integer()) {
                    if (b == 0.0 && r.is_negative())
                        throw EvalError(EvalError::Kind::InvalidPower,
                                        "0 raised to a negative power in " + head_of(e));
                    return std::pow(b, static_cast<double>(r.num()));
                }
                if (b < 0.0)
                    throw EvalError(EvalError::Kind::InvalidPower,
                                    "negative base with fractional exponent in " + head_of(e));
                if (b == 0.0 && r.is_negative())
                    throw EvalError(EvalError::Kind::InvalidPower,
                                    "0 raised to a negative power in " + head_of(e));
                return std::pow(b, r.to_double());
            }
            case ExprKind::Ln: {
                double a = eval(e->children[0]);
                if (a <= 0.0)
                    throw EvalError(EvalError::Kind::LogNonPositive,
                                    "ln of non-positive argument in " + head_of(e));
                return std::log(a);
            }
            case ExprKind::Call: {
                if (!interps_ || !interps_->has(e->name))
                    throw EvalError(EvalError::Kind::UninterpretedSymbol,
                                    "no interpretation for abstract symbol '" + e->name + "'");
                std::vector<double> args;
                args.reserve(e->children.size());
                for (auto& c : e->children) args.push_back(eval(c));
                return interps_->fns.at(e->name)(args);
            }
            default: throw ExprError("unreachable kind in eval");
        }
    }

    const Assignment& values_;
    const Interpretations* interps_;
    std::unordered_map<const ExprNode*, double> memo_;
};

inline double evaluate(const Expr& e, const Assignment& values,
                       const Interpretations* interps = nullptr) {
    Evaluator ev(values, interps);
    return ev.eval(e);
}

}  // namespace entlaw
