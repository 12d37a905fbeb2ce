#include <doctest.h>

#include "entlaw/eval.hpp"
#include "entlaw/expr.hpp"
#include "entlaw/tape.hpp"
#include "helpers.hpp"

using namespace entlaw;
using namespace testutil;

TEST_CASE("rational constants are reduced with positive denominator") {
    CHECK(Rational(2, 4) == Rational(1, 2));
    CHECK(Rational(3, -6) == Rational(-1, 2));
    CHECK(Rational(0, 7) == Rational(0));
    CHECK((Rational(7, 5) - Rational(2, 5)) == Rational(1));
    CHECK(Rational::pow(Rational(2, 3), -2) == Rational(9, 4));
    CHECK_THROWS_AS(Rational(1, 0), std::domain_error);
}

TEST_CASE("constructors canonicalize: flattening and 0/1 identities") {
    Expr x = variable("x"), y = variable("y");

    Expr s = sum({sum({x, y}), num(0), x});
    REQUIRE(s->kind == ExprKind::Sum);
    CHECK(s->children.size() == 3);  // x, y, x — nested sum flattened, zero dropped

    CHECK(expr_equal(num(0) * x + num(1) * y, y));
    CHECK(expr_equal(frac(2, 4) * x, frac(1, 2) * x));
    CHECK(expr_equal(power(x, Rational(0)), num(1)));
    CHECK(expr_equal(power(x, Rational(1)), x));
    CHECK(expr_equal(quotient(x, num(1)), x));
    CHECK(expr_equal(neg(neg(x)), x));
    CHECK(expr_equal(ln(num(1)), num(0)));
    CHECK_THROWS_AS(quotient(x, num(0)), ExprError);
    CHECK_THROWS_AS(power(num(0), Rational(-1)), ExprError);
}

TEST_CASE("evaluate basics") {
    Expr x = variable("x");
    CHECK(evaluate(x + num(1), {{"x", 2.0}}) == doctest::Approx(3.0));
    CHECK(evaluate(ln(num(1)), {}) == 0.0);

    // p1/T1 - p2/T2 at p1=2, T1=1, p2=3, T2=2 -> 0.5
    Expr e = variable("p1") / variable("T1") - variable("p2") / variable("T2");
    CHECK(evaluate(e, {{"p1", 2}, {"T1", 1}, {"p2", 3}, {"T2", 2}}) == doctest::Approx(0.5));

    CHECK_THROWS_AS(evaluate(ln(variable("x")), {{"x", -1.0}}), EvalError);
    CHECK_THROWS_AS(evaluate(ln(variable("x")), {{"x", 0.0}}), EvalError);
    CHECK_THROWS_AS(evaluate(num(1) / variable("x"), {{"x", 0.0}}), EvalError);
    CHECK_THROWS_AS(evaluate(variable("q"), {}), EvalError);
    CHECK_THROWS_AS(evaluate(call("f", {x}), {{"x", 1.0}}), EvalError);
    CHECK_THROWS_AS(evaluate(power(variable("x"), Rational(1, 2)), {{"x", -1.0}}), EvalError);
}

TEST_CASE("differentiate: power rule, formal derivatives, quotient rule") {
    Expr x = variable("x");

    Expr d = differentiate(x * x, "x");
    for (double v : {0.3, -1.7, 2.5})
        CHECK(evaluate(d, {{"x", v}}) == doctest::Approx(2 * v));

    Expr psi = call("psi1", {variable("a")});
    Expr dpsi = differentiate(psi, "a");
    REQUIRE(dpsi->kind == ExprKind::Call);
    CHECK(dpsi->name == "psi1_d1");
    CHECK(expr_equal(dpsi->children[0], variable("a")));

    // d/drho [cv ln(p/rho^gamma)] at rho=2, p=3, cv=1, gamma=7/5  ->  -0.7
    Expr s = variable("cv") * ln(variable("p") / power(variable("rho"), Rational(7, 5)));
    Expr ds = differentiate(s, "rho");
    Assignment st{{"rho", 2.0}, {"p", 3.0}, {"cv", 1.0}};
    double val = evaluate(ds, st);
    CHECK(val == doctest::Approx(-0.7).epsilon(1e-12));
    CHECK(deriv_close(val, fd_derivative(s, "rho", st)));
}

TEST_CASE("differentiation linearity and finite-difference agreement") {
    std::uint64_t s = 12345;
    std::vector<std::string> vars{"x", "y", "z"};
    for (int trial = 0; trial < 30; ++trial) {
        Expr e1 = random_expr(s, vars, 24);
        Expr e2 = random_expr(s, vars, 24);
        Expr a = frac(3, 7);
        Expr lhs = differentiate(a * e1 + e2, "x");
        Expr rhs = a * differentiate(e1, "x") + differentiate(e2, "x");
        for (int pt = 0; pt < 5; ++pt) {
            Assignment st = random_state(s, vars);
            double l = evaluate(lhs, st), r = evaluate(rhs, st);
            CHECK(rel_close(l, r, 1e-11));
            // every derivative matches a central finite difference
            CHECK(deriv_close(l, fd_derivative(a * e1 + e2, "x", st)));
        }
    }
}

TEST_CASE("Clairaut: mixed partials agree at sampled points") {
    std::uint64_t s = 777;
    std::vector<std::string> vars{"x", "y"};
    for (int trial = 0; trial < 10; ++trial) {
        Expr e = random_expr(s, vars, 32);
        Expr dxy = differentiate(differentiate(e, "x"), "y");
        Expr dyx = differentiate(differentiate(e, "y"), "x");
        for (int pt = 0; pt < 100; ++pt) {
            Assignment st = random_state(s, vars);
            CHECK(rel_close(evaluate(dxy, st), evaluate(dyx, st), 1e-9, 1e-10));
        }
    }
}

TEST_CASE("substitute") {
    Expr u = variable("u"), m = variable("m"), rho = variable("rho");

    Expr e = substitute(u * u, {{"u", m / rho}});
    CHECK(expr_equal(e, (m / rho) * (m / rho)));
    CHECK(evaluate(e, {{"m", 3}, {"rho", 2}}) == doctest::Approx(2.25));

    // identity binding leaves the expression structurally unchanged
    Expr f = u * u + ln(num(1) + u * u);
    CHECK(expr_equal(substitute(f, {{"u", u}}), f));

    // chained bindings resolve in dependency order
    Expr g = substitute(variable("a"), {{"a", variable("b") + num(1)}, {"b", num(2)}});
    CHECK(expr_equal(g, num(3)));

    CHECK_THROWS_AS(substitute(u, {{"a", variable("b")}, {"b", variable("a")}}), ExprError);
}

TEST_CASE("simplify is idempotent and value-preserving") {
    std::uint64_t s = 424242;
    std::vector<std::string> vars{"x", "y", "z"};
    for (int trial = 0; trial < 40; ++trial) {
        Expr e = random_expr(s, vars, 50);
        Expr e1 = simplify(e);
        CHECK(expr_equal(simplify(e1), e1));
        for (int pt = 0; pt < 100; ++pt) {
            Assignment st = random_state(s, vars);
            double a = evaluate(e, st), b = evaluate(e1, st);
            CHECK(rel_close(a, b, 1e-12));
        }
    }
}

TEST_CASE("printer emits reparseable text with correct precedence") {
    Expr x = variable("x"), y = variable("y");
    CHECK(to_string(x + y * y) == "x + y*y");
    CHECK(to_string((x + y) * y) == "(x + y)*y");
    CHECK(to_string(x - (y - x)) == "x - (y - x)");
    CHECK(to_string(power(x, Rational(3, 2))) == "x^(3/2)");
    CHECK(to_string(num(1) / (x * y)) == "1/(x*y)");
    CHECK(to_string(neg(x + y)) == "-(x + y)");
}

TEST_CASE("tape evaluation matches the tree walker") {
    std::uint64_t s = 99;
    std::vector<std::string> vars{"x", "y", "z"};
    Assignment fixed{{"c", 2.5}};
    for (int trial = 0; trial < 20; ++trial) {
        Expr e = random_expr(s, vars, 40) + variable("c") * random_expr(s, vars, 10);
        Tape tape({e}, vars, fixed);
        std::vector<double> scratch;
        for (int pt = 0; pt < 20; ++pt) {
            Assignment st = random_state(s, vars);
            double in[3] = {st["x"], st["y"], st["z"]};
            double out[1];
            tape.eval(std::span<const double>(in, 3), std::span<double>(out, 1), scratch);
            st["c"] = 2.5;
            CHECK(rel_close(out[0], evaluate(e, st), 1e-13));
        }
    }
}
