#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "entlaw/eval.hpp"
#include "entlaw/expr.hpp"

namespace entlaw {

/// Expressions compiled to a flat instruction tape with pointer-identity
/// common-subexpression elimination. Used where the tree walker is too slow
/// (per-cell right-hand sides in the time integrator). Domain faults are not
/// diagnosed here; they surface as non-finite outputs which callers check.
class Tape {
public:
    /// `inputs` fixes the slot order of the fast-changing variables;
    /// `fixed` provides values for every other symbol (constants).
    Tape(const std::vector<Expr>& exprs, const std::vector<std::string>& inputs,
         const Assignment& fixed, const Interpretations* interps = nullptr) {
        for (std::size_t i = 0; i < inputs.size(); ++i) input_slot_[inputs[i]] = i;
        n_inputs_ = inputs.size();
        slots_ = n_inputs_;
        fixed_ = &fixed;
        interps_ = interps;
        for (auto& e : exprs) roots_.push_back(compile(e));
        fixed_ = nullptr;
    }

    std::size_t num_inputs() const { return n_inputs_; }
    std::size_t num_outputs() const { return roots_.size(); }

    /// Evaluates all outputs for one input vector. `scratch` must persist
    /// between calls for reuse but needs no initialization.
    void eval(std::span<const double> in, std::span<double> out,
              std::vector<double>& scratch) const {
        scratch.resize(slots_);
        for (std::size_t i = 0; i < n_inputs_; ++i) scratch[i] = in[i];
        for (const Instr& I : code_) {
            double v = 0;
            switch (I.op) {
                case Op::Const: v = I.imm; break;
                case Op::Neg: v = -scratch[I.a]; break;
                case Op::Add: v = scratch[I.a] + scratch[I.b]; break;
                case Op::Mul: v = scratch[I.a] * scratch[I.b]; break;
                case Op::Div: v = scratch[I.a] / scratch[I.b]; break;
                case Op::PowInt: {
                    double b = scratch[I.a];
                    long long e = static_cast<long long>(I.imm);
                    bool inv = e < 0;
                    if (inv) e = -e;
                    double acc = 1;
                    while (e) {
                        if (e & 1) acc *= b;
                        b *= b;
                        e >>= 1;
                    }
                    v = inv ? 1.0 / acc : acc;
                    break;
                }
                case Op::PowReal: v = std::pow(scratch[I.a], I.imm); break;
                case Op::Ln: v = std::log(scratch[I.a]); break;
                case Op::Call: {
                    std::vector<double> args(call_args_[I.a].size());
                    for (std::size_t k = 0; k < args.size(); ++k)
                        args[k] = scratch[call_args_[I.a][k]];
                    v = call_fns_[I.b](args);
                    break;
                }
            }
            scratch[I.dst] = v;
        }
        for (std::size_t i = 0; i < roots_.size(); ++i) out[i] = scratch[roots_[i]];
    }

private:
    enum class Op : std::uint8_t { Const, Neg, Add, Mul, Div, PowInt, PowReal, Ln, Call };
    struct Instr {
        Op op;
        int dst = 0, a = 0, b = 0;
        double imm = 0;
    };

    int fresh() { return static_cast<int>(slots_++); }

    int emit(Op op, int a, int b, double imm) {
        Instr I;
        I.op = op;
        I.a = a;
        I.b = b;
        I.imm = imm;
        I.dst = fresh();
        code_.push_back(I);
        return I.dst;
    }

    int compile(const Expr& e) {
        auto it = memo_.find(e.get());
        if (it != memo_.end()) return it->second;
        int slot = compile_node(e);
        memo_.emplace(e.get(), slot);
        return slot;
    }

    int compile_node(const Expr& e) {
        switch (e->kind) {
            case ExprKind::Constant: return emit(Op::Const, 0, 0, e->constant.to_double());
            case ExprKind::Variable: {
                auto it = input_slot_.find(e->name);
                if (it != input_slot_.end()) return static_cast<int>(it->second);
                auto fit = fixed_->find(e->name);
                if (fit == fixed_->end())
                    throw ExprError("tape: symbol '" + e->name + "' is neither input nor fixed");
                return emit(Op::Const, 0, 0, fit->second);
            }
            case ExprKind::Negate: return emit(Op::Neg, compile(e->children[0]), 0, 0);
            case ExprKind::Sum: {
                int acc = compile(e->children[0]);
                for (std::size_t i = 1; i < e->children.size(); ++i)
                    acc = emit(Op::Add, acc, compile(e->children[i]), 0);
                return acc;
            }
            case ExprKind::Product: {
                int acc = compile(e->children[0]);
                for (std::size_t i = 1; i < e->children.size(); ++i)
                    acc = emit(Op::Mul, acc, compile(e->children[i]), 0);
                return acc;
            }
            case ExprKind::Quotient:
                return emit(Op::Div, compile(e->children[0]), compile(e->children[1]), 0);
            case ExprKind::Power: {
                int b = compile(e->children[0]);
                if (e->exponent.is_integer())
                    return emit(Op::PowInt, b, 0, static_cast<double>(e->exponent.num()));
                return emit(Op::PowReal, b, 0, e->exponent.to_double());
            }
            case ExprKind::Ln: return emit(Op::Ln, compile(e->children[0]), 0, 0);
            case ExprKind::Call: {
                if (!interps_ || !interps_->has(e->name))
                    throw ExprError("tape: no interpretation for '" + e->name + "'");
                std::vector<int> arg_slots;
                for (auto& c : e->children) arg_slots.push_back(compile(c));
                call_args_.push_back(std::move(arg_slots));
                call_fns_.push_back(interps_->fns.at(e->name));
                return emit(Op::Call, static_cast<int>(call_args_.size() - 1),
                            static_cast<int>(call_fns_.size() - 1), 0);
            }
        }
        throw ExprError("unreachable kind in tape compile");
    }

    std::unordered_map<std::string, std::size_t> input_slot_;
    std::unordered_map<const ExprNode*, int> memo_;
    std::vector<Instr> code_;
    std::vector<int> roots_;
    std::vector<std::vector<int>> call_args_;
    std::vector<AbstractFn> call_fns_;
    std::size_t n_inputs_ = 0;
    std::size_t slots_ = 0;
    const Assignment* fixed_ = nullptr;
    const Interpretations* interps_ = nullptr;
};

}  // namespace entlaw
