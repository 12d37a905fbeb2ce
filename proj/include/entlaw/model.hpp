#pragma once

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "entlaw/expr.hpp"
#include "entlaw/sampler.hpp"

namespace entlaw {

struct Diagnostic {
    int line = 0;  // 1-based; 0 when not tied to a source position
    int col = 0;
    std::string message;

    std::string str() const {
        if (line == 0) return message;
        return std::to_string(line) + ":" + std::to_string(col) + ": " + message;
    }
};

struct VarDecl {
    std::string name;
    std::optional<Interval> bounds;
};

struct AbstractDecl {
    std::string name;
    int arity = 1;
};

/// A PDE model as declared in a .model file (or built programmatically):
/// ordered state variables with sampling bounds, auxiliary definitions,
/// flux or Jacobian, non-conservative matrix, optional entropy data.
struct ModelSpec {
    std::string name = "model";
    std::vector<VarDecl> vars;
    std::vector<std::pair<std::string, Expr>> aux;
    std::vector<std::pair<std::string, Rational>> constants;
    std::vector<AbstractDecl> abstracts;
    std::optional<std::vector<Expr>> flux;
    std::optional<std::vector<std::vector<Expr>>> jacobian;
    std::vector<std::vector<Expr>> noncons;  // empty means all-zero
    std::optional<Expr> entropy;
    std::optional<Expr> entropy_flux;
    std::optional<std::vector<Expr>> transfer;

    std::size_t dim() const { return vars.size(); }

    bool has_var(const std::string& n) const {
        for (auto& v : vars)
            if (v.name == n) return true;
        return false;
    }
    bool has_aux(const std::string& n) const {
        for (auto& a : aux)
            if (a.first == n) return true;
        return false;
    }
    bool has_const(const std::string& n) const {
        for (auto& c : constants)
            if (c.first == n) return true;
        return false;
    }

    /// Abstract symbols implicitly declare their formal-derivative chain
    /// (psi1 -> psi1_d1 -> psi1_d1_d1 ...).
    const AbstractDecl* find_abstract(const std::string& n) const {
        std::string base = n;
        for (;;) {
            for (auto& a : abstracts)
                if (a.name == base) return &a;
            auto pos = base.rfind("_d");
            if (pos == std::string::npos || pos == 0) return nullptr;
            bool digits = pos + 2 < base.size();
            for (std::size_t i = pos + 2; i < base.size(); ++i)
                digits = digits && std::isdigit(static_cast<unsigned char>(base[i]));
            if (!digits) return nullptr;
            base = base.substr(0, pos);
        }
    }
};

namespace detail {

inline void check_expr_decls(const ModelSpec& m, const Expr& e, const std::string& where,
                             std::vector<Diagnostic>& out) {
    if (e->kind == ExprKind::Variable) {
        if (!m.has_var(e->name) && !m.has_aux(e->name) && !m.has_const(e->name))
            out.push_back({0, 0, "undeclared identifier '" + e->name + "' in " + where});
    } else if (e->kind == ExprKind::Call) {
        const AbstractDecl* d = m.find_abstract(e->name);
        if (!d) {
            out.push_back({0, 0, "undeclared abstract function '" + e->name + "' in " + where});
        } else if (static_cast<int>(e->children.size()) != d->arity) {
            out.push_back({0, 0, "abstract function '" + e->name + "' called with " +
                                     std::to_string(e->children.size()) + " arguments, declared arity " +
                                     std::to_string(d->arity) + " in " + where});
        }
    }
    for (auto& c : e->children) check_expr_decls(m, c, where, out);
}

}  // namespace detail

/// Semantic checks after a successful parse: undeclared identifiers,
/// dimension mismatches, cyclic auxiliaries, missing bounds. An empty
/// result means the model is analyzable.
inline std::vector<Diagnostic> validate(const ModelSpec& m) {
    std::vector<Diagnostic> out;
    const std::size_t p = m.dim();
    if (p == 0) out.push_back({0, 0, "no state variables declared"});

    if (m.flux && m.jacobian)
        out.push_back({0, 0, "both flux and jacobian given; exactly one is required"});
    if (!m.flux && !m.jacobian)
        out.push_back({0, 0, "neither flux nor jacobian given; exactly one is required"});

    for (auto& v : m.vars)
        if (!v.bounds)
            out.push_back({0, 0, "state variable '" + v.name + "' has no domain bounds"});

    if (m.flux && m.flux->size() != p)
        out.push_back({0, 0, "flux has " + std::to_string(m.flux->size()) + " components, expected " +
                                 std::to_string(p)});
    auto check_matrix = [&](const std::vector<std::vector<Expr>>& mat, const std::string& what) {
        if (mat.size() != p) {
            out.push_back({0, 0, what + " has " + std::to_string(mat.size()) + " rows, expected " +
                                     std::to_string(p)});
            return;
        }
        for (std::size_t i = 0; i < mat.size(); ++i)
            if (mat[i].size() != p)
                out.push_back({0, 0, what + " row " + std::to_string(i + 1) + " has " +
                                         std::to_string(mat[i].size()) + " entries, expected " +
                                         std::to_string(p)});
    };
    if (m.jacobian) check_matrix(*m.jacobian, "jacobian");
    if (!m.noncons.empty()) check_matrix(m.noncons, "noncons");
    if (m.transfer && m.transfer->size() != p)
        out.push_back({0, 0, "transfer has " + std::to_string(m.transfer->size()) +
                                 " components, expected " + std::to_string(p)});

    // auxiliary dependency cycles
    std::map<std::string, Expr> aux_map;
    for (auto& [n, e] : m.aux) aux_map[n] = e;
    try {
        resolve_bindings(aux_map);
    } catch (const ExprError& err) {
        out.push_back({0, 0, std::string("auxiliary definitions: ") + err.what()});
    }

    auto check = [&](const Expr& e, const std::string& where) {
        detail::check_expr_decls(m, e, where, out);
    };
    for (auto& [n, e] : m.aux) check(e, "aux " + n);
    if (m.flux)
        for (std::size_t i = 0; i < m.flux->size(); ++i)
            check((*m.flux)[i], "flux component " + std::to_string(i + 1));
    if (m.jacobian)
        for (auto& row : *m.jacobian)
            for (auto& e : row) check(e, "jacobian");
    for (auto& row : m.noncons)
        for (auto& e : row) check(e, "noncons");
    if (m.entropy) check(*m.entropy, "entropy");
    if (m.entropy_flux) check(*m.entropy_flux, "entropy_flux");
    if (m.transfer)
        for (auto& e : *m.transfer) check(e, "transfer");
    return out;
}

inline std::string format_interval(const Interval& iv) {
    auto fmt = [](double x) {
        char buf[64];
        for (int prec = 6; prec <= 17; ++prec) {
            std::snprintf(buf, sizeof buf, "%.*g", prec, x);
            if (std::strtod(buf, nullptr) == x) break;
        }
        return std::string(buf);
    };
    return "(" + fmt(iv.lo) + ", " + fmt(iv.hi) + ")";
}

/// Canonical text form; reparses to a structurally identical ModelSpec.
inline std::string pretty_print(const ModelSpec& m) {
    std::string out;
    if (!m.constants.empty()) {
        out += "const\n";
        for (auto& [n, r] : m.constants) out += "  " + n + " = " + r.str() + "\n";
    }
    if (!m.abstracts.empty()) {
        out += "abstract\n";
        for (auto& a : m.abstracts) out += "  " + a.name + "/" + std::to_string(a.arity) + "\n";
    }
    out += "vars\n";
    for (auto& v : m.vars) {
        out += "  " + v.name;
        if (v.bounds) out += " in " + format_interval(*v.bounds);
        out += "\n";
    }
    if (!m.aux.empty()) {
        out += "aux\n";
        for (auto& [n, e] : m.aux) out += "  " + n + " = " + to_string(e) + "\n";
    }
    if (m.flux) {
        out += "flux\n";
        for (auto& e : *m.flux) out += "  " + to_string(e) + "\n";
    }
    if (m.jacobian) {
        out += "jacobian\n";
        for (auto& row : *m.jacobian) {
            out += "  ";
            for (std::size_t j = 0; j < row.size(); ++j) {
                if (j) out += ", ";
                out += to_string(row[j]);
            }
            out += "\n";
        }
    }
    if (!m.noncons.empty()) {
        out += "noncons\n";
        for (auto& row : m.noncons) {
            out += "  ";
            for (std::size_t j = 0; j < row.size(); ++j) {
                if (j) out += ", ";
                out += to_string(row[j]);
            }
            out += "\n";
        }
    }
    if (m.entropy) out += "entropy\n  " + to_string(*m.entropy) + "\n";
    if (m.entropy_flux) out += "entropy_flux\n  " + to_string(*m.entropy_flux) + "\n";
    if (m.transfer) {
        out += "transfer\n";
        for (auto& e : *m.transfer) out += "  " + to_string(e) + "\n";
    }
    return out;
}

}  // namespace entlaw
