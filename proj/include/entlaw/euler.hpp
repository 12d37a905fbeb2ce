#pragma once

#include "entlaw/analysis.hpp"
#include "entlaw/model.hpp"
#include "entlaw/system.hpp"

namespace entlaw::euler {

/// 1D compressible Euler with an ideal gas, in conservative variables
/// (rho, q, E) = (density, momentum, total energy). The classical entropy
/// pair S = -rho*s, G = -rho*s*u with gamma = 0 transfer: the conservative
/// sanity case of the theory.
struct Params {
    Rational gamma{7, 5};
    Rational cv{5, 2};
    Rational r() const { return cv * (gamma - Rational(1)); }
};

inline ModelSpec model_spec(const Params& prm = {}) {
    ModelSpec m;
    m.name = "euler";
    m.vars = {{"rho", Interval{0.5, 2.0}}, {"q", Interval{-0.5, 0.5}}, {"E", Interval{1.0, 3.0}}};
    m.constants = {{"gamma", prm.gamma}, {"cv", prm.cv}, {"r", prm.r()}};

    Expr rho = variable("rho"), q = variable("q"), E = variable("E");
    Expr gamma = variable("gamma"), cv = variable("cv"), rr = variable("r");
    Expr u = q / rho;
    Expr p = (gamma - num(1)) * (E - q * q / (num(2) * rho));
    m.aux = {
        {"u", u},
        {"p", p},
        {"T", variable("p") / (rho * rr)},
        {"s", cv * ln(variable("p") / power(rho, prm.gamma))},
    };
    m.flux = {{q, q * q / rho + variable("p"), (E + variable("p")) * variable("u")}};
    m.entropy = neg(rho * variable("s"));
    m.entropy_flux = neg(rho * variable("s") * variable("u"));
    return m;
}

inline SystemQL build_system(const Params& prm = {}) { return entlaw::build_system(model_spec(prm)); }

}  // namespace entlaw::euler
