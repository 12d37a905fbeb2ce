#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <vector>

#include "entlaw/model.hpp"

namespace entlaw {

struct ParseResult {
    std::optional<ModelSpec> spec;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return spec.has_value() && diagnostics.empty(); }
};

namespace detail {

enum class Tok : std::uint8_t {
    Ident, Number, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, Equal, End
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    Rational value;  // Number
    int col = 0;
};

struct ParseFail {
    int col;
    std::string message;
};

/// Tokenizes one line (comments already stripped). Throws ParseFail on a
/// lexical error.
inline std::vector<Token> lex_line(const std::string& line) {
    std::vector<Token> out;
    std::size_t i = 0;
    auto push = [&](Tok k, std::size_t at, std::string text) {
        Token t;
        t.kind = k;
        t.text = std::move(text);
        t.col = static_cast<int>(at) + 1;
        out.push_back(std::move(t));
    };
    while (i < line.size()) {
        char c = line[i];
        if (c == ' ' || c == '\t' || c == '\r') { ++i; continue; }
        std::size_t start = i;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < line.size() &&
                   (std::isalnum(static_cast<unsigned char>(line[i])) || line[i] == '_'))
                ++i;
            push(Tok::Ident, start, line.substr(start, i - start));
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < line.size() && std::isdigit(static_cast<unsigned char>(line[i + 1])))) {
            std::string digits, fracpart;
            while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i])))
                digits += line[i++];
            if (i < line.size() && line[i] == '.') {
                ++i;
                while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i])))
                    fracpart += line[i++];
                if (fracpart.empty())
                    throw ParseFail{static_cast<int>(i) + 1, "expected digits after decimal point"};
            }
            long long exp10 = 0;
            if (i < line.size() && (line[i] == 'e' || line[i] == 'E')) {
                std::size_t save = i;
                ++i;
                long long sign = 1;
                if (i < line.size() && (line[i] == '+' || line[i] == '-')) {
                    if (line[i] == '-') sign = -1;
                    ++i;
                }
                std::string ed;
                while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i])))
                    ed += line[i++];
                if (ed.empty()) {
                    i = save;  // not an exponent, e.g. identifier follows
                } else {
                    if (ed.size() > 2)
                        throw ParseFail{static_cast<int>(save) + 1, "exponent out of range"};
                    exp10 = sign * std::stoll(ed);
                }
            }
            std::string mantissa = digits + fracpart;
            if (mantissa.size() > 18)
                throw ParseFail{static_cast<int>(start) + 1, "numeric literal too long"};
            long long n = mantissa.empty() ? 0 : std::stoll(mantissa);
            long long scale = static_cast<long long>(fracpart.size()) - exp10;
            Rational r(n);
            try {
                if (scale > 0)
                    r = r / Rational::pow(Rational(10), scale);
                else if (scale < 0)
                    r = r * Rational::pow(Rational(10), -scale);
            } catch (const RationalOverflow&) {
                throw ParseFail{static_cast<int>(start) + 1, "numeric literal out of range"};
            }
            Token t;
            t.kind = Tok::Number;
            t.value = r;
            t.text = line.substr(start, i - start);
            t.col = static_cast<int>(start) + 1;
            out.push_back(std::move(t));
            continue;
        }
        ++i;
        switch (c) {
            case '+': push(Tok::Plus, start, "+"); break;
            case '-': push(Tok::Minus, start, "-"); break;
            case '*': push(Tok::Star, start, "*"); break;
            case '/': push(Tok::Slash, start, "/"); break;
            case '^': push(Tok::Caret, start, "^"); break;
            case '(': push(Tok::LParen, start, "("); break;
            case ')': push(Tok::RParen, start, ")"); break;
            case ',': push(Tok::Comma, start, ","); break;
            case '=': push(Tok::Equal, start, "="); break;
            default:
                throw ParseFail{static_cast<int>(start) + 1,
                                std::string("unexpected character '") + c + "'"};
        }
    }
    push(Tok::End, line.size(), "");
    return out;
}

/// Recursive-descent expression parser over one token stream. Precedence:
/// call/ln > ^ > unary - > * / > + -.
class ExprParser {
public:
    ExprParser(const std::vector<Token>& toks, const ModelSpec& spec)
        : toks_(toks), spec_(spec) {}

    Expr parse_expr() {
        Expr lhs = parse_term();
        while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
            bool minus = next().kind == Tok::Minus;
            Expr rhs = parse_term();
            lhs = minus ? lhs - rhs : lhs + rhs;
        }
        return lhs;
    }

    std::vector<Expr> parse_expr_list() {
        std::vector<Expr> out;
        out.push_back(parse_expr());
        while (peek().kind == Tok::Comma) {
            next();
            out.push_back(parse_expr());
        }
        return out;
    }

    void expect_end() {
        if (peek().kind != Tok::End)
            throw ParseFail{peek().col, "unexpected trailing '" + peek().text + "'"};
    }

    const Token& peek() const { return toks_[pos_]; }
    const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

private:
    Expr parse_term() {
        Expr lhs = parse_unary();
        while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
            bool div = next().kind == Tok::Slash;
            Expr rhs = parse_unary();
            try {
                lhs = div ? lhs / rhs : lhs * rhs;
            } catch (const ExprError& e) {
                throw ParseFail{peek().col, e.what()};
            }
        }
        return lhs;
    }

    Expr parse_unary() {
        if (peek().kind == Tok::Minus) {
            next();
            return neg(parse_unary());
        }
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_atom();
        if (peek().kind != Tok::Caret) return base;
        int col = next().col;
        Expr e = parse_exponent_atom();
        if (!is_const(e))
            throw ParseFail{col, "exponent must be a rational constant"};
        try {
            return power(base, e->constant);
        } catch (const ExprError& err) {
            throw ParseFail{col, err.what()};
        }
    }

    // Exponent position: a signed number, a declared constant, or a
    // parenthesized expression folding to a rational constant.
    Expr parse_exponent_atom() {
        if (peek().kind == Tok::Minus) {
            next();
            return neg(parse_exponent_atom());
        }
        if (peek().kind == Tok::Number) return constant(next().value);
        if (peek().kind == Tok::Ident) {
            const Token& t = next();
            for (auto& [n, r] : spec_.constants)
                if (n == t.text) return constant(r);
            throw ParseFail{t.col, "'" + t.text + "' is not a declared constant"};
        }
        if (peek().kind == Tok::LParen) {
            next();
            Expr e = parse_expr();
            expect(Tok::RParen, "')'");
            e = fold_constants(e);
            return e;
        }
        throw ParseFail{peek().col, "expected exponent"};
    }

    Expr fold_constants(const Expr& e) {
        std::map<std::string, Expr> binds;
        for (auto& [n, r] : spec_.constants) binds[n] = constant(r);
        try {
            return substitute(e, binds);
        } catch (const ExprError& err) {
            throw ParseFail{peek().col, err.what()};
        }
    }

    Expr parse_atom() {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::Number: return constant(next().value);
            case Tok::LParen: {
                next();
                Expr e = parse_expr();
                expect(Tok::RParen, "')'");
                return e;
            }
            case Tok::Ident: {
                Token id = next();
                if (id.text == "ln") {
                    expect(Tok::LParen, "'(' after ln");
                    Expr a = parse_expr();
                    expect(Tok::RParen, "')'");
                    return ln(a);
                }
                if (peek().kind == Tok::LParen) {
                    next();
                    std::vector<Expr> args;
                    if (peek().kind != Tok::RParen) {
                        args.push_back(parse_expr());
                        while (peek().kind == Tok::Comma) {
                            next();
                            args.push_back(parse_expr());
                        }
                    }
                    expect(Tok::RParen, "')'");
                    return call(id.text, std::move(args));
                }
                return variable(id.text);
            }
            case Tok::End: throw ParseFail{t.col, "expected operand"};
            default: throw ParseFail{t.col, "expected operand, got '" + t.text + "'"};
        }
    }

    void expect(Tok k, const std::string& what) {
        if (peek().kind != k) throw ParseFail{peek().col, "expected " + what};
        next();
    }

    const std::vector<Token>& toks_;
    const ModelSpec& spec_;
    std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses the line-oriented .model format. Never throws: lexical/syntax
/// faults come back as positioned diagnostics and an empty spec.
inline ParseResult parse_model(const std::string& text) {
    using namespace detail;
    ParseResult res;
    ModelSpec spec;

    enum class Section {
        None, Const, Abstract, Vars, Aux, Flux, Jacobian, Noncons, Entropy, EntropyFlux, Transfer
    };
    Section section = Section::None;
    bool seen_entropy = false, seen_entropy_flux = false;
    std::set<std::string> seen_sections;

    auto fail = [&](int line, int col, const std::string& msg) {
        res.diagnostics.push_back({line, col, msg});
    };

    // split into lines, strip comments
    std::vector<std::string> lines;
    {
        std::string cur;
        for (char c : text) {
            if (c == '\n') {
                lines.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        lines.push_back(cur);
    }

    for (std::size_t li = 0; li < lines.size(); ++li) {
        int lineno = static_cast<int>(li) + 1;
        std::string line = lines[li];
        if (auto pos = line.find('#'); pos != std::string::npos) line = line.substr(0, pos);
        bool blank = true;
        for (char c : line)
            if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
        if (blank) continue;

        std::vector<Token> toks;
        try {
            toks = lex_line(line);
        } catch (const ParseFail& f) {
            fail(lineno, f.col, f.message);
            return res;
        }

        // section header?
        if (toks[0].kind == Tok::Ident) {
            static const std::pair<const char*, Section> names[] = {
                {"const", Section::Const},       {"abstract", Section::Abstract},
                {"vars", Section::Vars},         {"aux", Section::Aux},
                {"flux", Section::Flux},         {"jacobian", Section::Jacobian},
                {"noncons", Section::Noncons},   {"entropy", Section::Entropy},
                {"entropy_flux", Section::EntropyFlux}, {"transfer", Section::Transfer},
            };
            Section matched = Section::None;
            for (auto& [n, s] : names)
                if (toks[0].text == n) matched = s;
            if (matched != Section::None) {
                if (!seen_sections.insert(toks[0].text).second) {
                    fail(lineno, toks[0].col, "duplicate section '" + toks[0].text + "'");
                    return res;
                }
                section = matched;
                if (toks.size() > 1 && toks[1].kind != Tok::End) {
                    // allow the first declaration on the header line
                    toks.erase(toks.begin());
                } else {
                    continue;
                }
            }
        }
        if (section == Section::None) {
            fail(lineno, toks[0].col,
                 "expected a section header (vars, aux, flux, jacobian, noncons, entropy, "
                 "entropy_flux, transfer, const, abstract)");
            return res;
        }

        try {
            ExprParser p(toks, spec);
            switch (section) {
                case Section::Const: {
                    if (p.peek().kind != Tok::Ident)
                        throw ParseFail{p.peek().col, "expected constant name"};
                    std::string name = p.next().text;
                    if (spec.has_const(name))
                        throw ParseFail{toks[0].col, "duplicate constant '" + name + "'"};
                    if (p.peek().kind != Tok::Equal) throw ParseFail{p.peek().col, "expected '='"};
                    p.next();
                    Expr e = p.parse_expr();
                    p.expect_end();
                    std::map<std::string, Expr> binds;
                    for (auto& [n, r] : spec.constants) binds[n] = constant(r);
                    e = substitute(e, binds);
                    if (!is_const(e))
                        throw ParseFail{toks[0].col,
                                        "constant '" + name + "' does not fold to a rational"};
                    spec.constants.push_back({name, e->constant});
                    break;
                }
                case Section::Abstract: {
                    if (p.peek().kind != Tok::Ident)
                        throw ParseFail{p.peek().col, "expected abstract function name"};
                    std::string name = p.next().text;
                    int arity = 1;
                    if (p.peek().kind == Tok::Slash) {
                        p.next();
                        if (p.peek().kind != Tok::Number || !p.peek().value.is_integer())
                            throw ParseFail{p.peek().col, "expected integer arity after '/'"};
                        arity = static_cast<int>(p.next().value.num());
                        if (arity < 1) throw ParseFail{toks[0].col, "arity must be >= 1"};
                    }
                    p.expect_end();
                    if (spec.find_abstract(name))
                        throw ParseFail{toks[0].col, "duplicate abstract function '" + name + "'"};
                    spec.abstracts.push_back({name, arity});
                    break;
                }
                case Section::Vars: {
                    if (p.peek().kind != Tok::Ident)
                        throw ParseFail{p.peek().col, "expected variable name"};
                    VarDecl v;
                    v.name = p.next().text;
                    if (spec.has_var(v.name))
                        throw ParseFail{toks[0].col, "duplicate variable '" + v.name + "'"};
                    if (p.peek().kind == Tok::Ident && p.peek().text == "in") {
                        p.next();
                        auto read_bound = [&]() -> double {
                            double sign = 1;
                            if (p.peek().kind == Tok::Minus) {
                                p.next();
                                sign = -1;
                            }
                            if (p.peek().kind != Tok::Number)
                                throw ParseFail{p.peek().col, "expected numeric bound"};
                            return sign * p.next().value.to_double();
                        };
                        if (p.peek().kind != Tok::LParen)
                            throw ParseFail{p.peek().col, "expected '(' in interval"};
                        p.next();
                        double lo = read_bound();
                        if (p.peek().kind != Tok::Comma)
                            throw ParseFail{p.peek().col, "expected ',' in interval"};
                        p.next();
                        double hi = read_bound();
                        if (p.peek().kind != Tok::RParen)
                            throw ParseFail{p.peek().col, "expected ')' in interval"};
                        p.next();
                        if (!(lo < hi))
                            throw ParseFail{toks[0].col, "empty interval for '" + v.name + "'"};
                        v.bounds = Interval{lo, hi};
                    }
                    p.expect_end();
                    spec.vars.push_back(std::move(v));
                    break;
                }
                case Section::Aux: {
                    if (p.peek().kind != Tok::Ident)
                        throw ParseFail{p.peek().col, "expected auxiliary name"};
                    std::string name = p.next().text;
                    if (spec.has_aux(name))
                        throw ParseFail{toks[0].col, "duplicate auxiliary '" + name + "'"};
                    if (p.peek().kind != Tok::Equal) throw ParseFail{p.peek().col, "expected '='"};
                    p.next();
                    Expr e = p.parse_expr();
                    p.expect_end();
                    spec.aux.push_back({name, e});
                    break;
                }
                case Section::Flux: {
                    if (!spec.flux) spec.flux.emplace();
                    for (auto& e : p.parse_expr_list()) spec.flux->push_back(e);
                    p.expect_end();
                    break;
                }
                case Section::Transfer: {
                    if (!spec.transfer) spec.transfer.emplace();
                    for (auto& e : p.parse_expr_list()) spec.transfer->push_back(e);
                    p.expect_end();
                    break;
                }
                case Section::Jacobian: {
                    if (!spec.jacobian) spec.jacobian.emplace();
                    spec.jacobian->push_back(p.parse_expr_list());
                    p.expect_end();
                    break;
                }
                case Section::Noncons: {
                    spec.noncons.push_back(p.parse_expr_list());
                    p.expect_end();
                    break;
                }
                case Section::Entropy: {
                    if (seen_entropy) throw ParseFail{toks[0].col, "entropy given twice"};
                    seen_entropy = true;
                    spec.entropy = p.parse_expr();
                    p.expect_end();
                    break;
                }
                case Section::EntropyFlux: {
                    if (seen_entropy_flux)
                        throw ParseFail{toks[0].col, "entropy_flux given twice"};
                    seen_entropy_flux = true;
                    spec.entropy_flux = p.parse_expr();
                    p.expect_end();
                    break;
                }
                case Section::None: break;
            }
        } catch (const ParseFail& f) {
            fail(lineno, f.col, f.message);
            return res;
        } catch (const ExprError& e) {
            fail(lineno, 1, e.what());
            return res;
        } catch (const RationalOverflow& e) {
            fail(lineno, 1, e.what());
            return res;
        }
    }

    res.spec = std::move(spec);
    return res;
}

}  // namespace entlaw
