#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "entlaw/system.hpp"
#include "entlaw/tape.hpp"

namespace entlaw::fv {

/// Method-of-lines run on a periodic grid: RK4 in time, second-order
/// centered differences in space, quasi-linear right-hand side
/// dV/dt = -(A(V) + Z(V)) D_x V. Smooth short-horizon runs only; the
/// integrator aborts on domain exit or norm blow-up instead of limiting.
struct SimConfig {
    int N = 128;                     // cells; refinement studies double this
    double length = 1.0;             // periodic domain [0, L)
    double dt_over_dx = 0.2;         // dt = dt_over_dx * dx
    double t_end = 0.1;
    std::vector<double> background;  // size p
    std::vector<double> amplitude;   // size p, perturbation per variable
    std::uint64_t seed = 7;          // fixes the perturbation phases
    int store_every = 1;             // store every k-th step (first/last always)
    double growth_factor = 100.0;    // instability guard on max |V|
};

struct Trajectory {
    int N = 0;
    double dx = 0.0;
    double dt = 0.0;
    std::size_t p = 0;
    std::vector<double> times;
    std::vector<std::vector<double>> states;  // per stored time, cell-major: v[i*p + k]
    bool completed = false;
    std::string abort_reason;
    double abort_time = 0.0;
    int abort_cell = -1;
};

struct SimulationError : std::runtime_error {
    explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline double perturbation_phase(std::uint64_t seed, std::size_t var) {
    return 2.0 * M_PI * entlaw::detail::unit_double(
                            entlaw::detail::splitmix64(seed ^ (0x51ed2701ull + var * 0x9e3779b9ull)));
}

}  // namespace detail

/// Initial condition: background plus a single-mode sinusoidal perturbation
/// per variable, phases derived from the seed.
inline std::vector<double> initial_state(const SystemQL& sys, const SimConfig& cfg) {
    const std::size_t p = sys.dim();
    if (cfg.background.size() != p || cfg.amplitude.size() != p)
        throw std::invalid_argument("SimConfig background/amplitude must have length p");
    std::vector<double> v(static_cast<std::size_t>(cfg.N) * p);
    for (int i = 0; i < cfg.N; ++i) {
        double x = cfg.length * i / cfg.N;
        for (std::size_t k = 0; k < p; ++k) {
            double phase = detail::perturbation_phase(cfg.seed, k);
            v[i * p + k] =
                cfg.background[k] +
                cfg.amplitude[k] * std::sin(2.0 * M_PI * x / cfg.length + phase);
        }
    }
    return v;
}

inline Trajectory simulate(const SystemQL& sys, const SimConfig& cfg) {
    const std::size_t p = sys.dim();
    if (cfg.N < 16 || (cfg.N & (cfg.N - 1)) != 0)
        throw std::invalid_argument("grid size must be a power of two >= 16");

    // one tape for all p*p entries of A + Z
    std::vector<Expr> entries;
    entries.reserve(p * p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) entries.push_back(sys.jac[i][j] + sys.noncons[i][j]);
    Assignment fixed = sys.sampler.fixed_values();
    Tape tape(entries, sys.vars, fixed, &sys.sampler.interps);

    // Admissibility probe: the sampler's derived quantities (pressures,
    // temperatures, phase entropies) inlined over the state variables. A
    // non-finite probe value marks a state outside the physical domain even
    // where the quasi-linear matrix itself stays finite.
    std::optional<Tape> probe;
    try {
        std::map<std::string, Expr> defs;
        for (auto& [name, def] : sys.sampler.derived()) defs[name] = def;
        auto resolved = resolve_bindings(defs);
        std::vector<Expr> probes;
        for (auto& [name, e] : resolved) probes.push_back(e);
        if (!probes.empty()) probe.emplace(probes, sys.vars, fixed, &sys.sampler.interps);
    } catch (const ExprError&) {
        probe.reset();  // uninterpreted abstract symbols in aux: skip probing
    }
    std::vector<double> probe_out(probe ? probe->num_outputs() : 0);

    Trajectory traj;
    traj.N = cfg.N;
    traj.p = p;
    traj.dx = cfg.length / cfg.N;
    traj.dt = cfg.dt_over_dx * traj.dx;

    std::vector<double> v = initial_state(sys, cfg);
    double vmax0 = 0.0;
    for (double x : v) vmax0 = std::max(vmax0, std::abs(x));

    std::vector<double> scratch;
    std::vector<double> M(p * p), rhs(v.size()), k1(v.size()), k2(v.size()), k3(v.size()),
        k4(v.size()), tmp(v.size());

    // RHS = -(A+Z)(V_i) * (V_{i+1} - V_{i-1}) / (2 dx); returns the first
    // offending cell on a non-finite value, -1 if clean.
    auto eval_rhs = [&](const std::vector<double>& w, std::vector<double>& out) -> int {
        const double inv2dx = 1.0 / (2.0 * traj.dx);
        for (int i = 0; i < cfg.N; ++i) {
            int im = i == 0 ? cfg.N - 1 : i - 1;
            int ip = i == cfg.N - 1 ? 0 : i + 1;
            tape.eval(std::span<const double>(&w[i * p], p), std::span<double>(M.data(), p * p),
                      scratch);
            for (std::size_t r = 0; r < p; ++r) {
                double acc = 0;
                for (std::size_t c = 0; c < p; ++c)
                    acc += M[r * p + c] * (w[ip * p + c] - w[im * p + c]);
                double val = -acc * inv2dx;
                if (!std::isfinite(val)) return i;
                out[i * p + r] = val;
            }
        }
        return -1;
    };

    // stored states must lie in the admissible domain
    auto admissible_cell = [&](const std::vector<double>& w) -> int {
        if (!probe) return -1;
        for (int i = 0; i < cfg.N; ++i) {
            probe->eval(std::span<const double>(&w[i * p], p),
                        std::span<double>(probe_out.data(), probe_out.size()), scratch);
            for (double x : probe_out)
                if (!std::isfinite(x)) return i;
        }
        return -1;
    };
    auto store = [&](double t, const std::vector<double>& w) -> bool {
        int bad = admissible_cell(w);
        if (bad >= 0) {
            traj.abort_reason = "domain exit (state left the admissible region)";
            traj.abort_time = t;
            traj.abort_cell = bad;
            return false;
        }
        traj.times.push_back(t);
        traj.states.push_back(w);
        return true;
    };

    const long long steps = static_cast<long long>(std::ceil(cfg.t_end / traj.dt - 1e-12));
    double t = 0.0;
    if (!store(t, v)) return traj;
    for (long long n = 0; n < steps; ++n) {
        double dt = std::min(traj.dt, cfg.t_end - t);
        int bad = -1;
        if ((bad = eval_rhs(v, k1)) < 0) {
            for (std::size_t i = 0; i < v.size(); ++i) tmp[i] = v[i] + 0.5 * dt * k1[i];
            if ((bad = eval_rhs(tmp, k2)) < 0) {
                for (std::size_t i = 0; i < v.size(); ++i) tmp[i] = v[i] + 0.5 * dt * k2[i];
                if ((bad = eval_rhs(tmp, k3)) < 0) {
                    for (std::size_t i = 0; i < v.size(); ++i) tmp[i] = v[i] + dt * k3[i];
                    bad = eval_rhs(tmp, k4);
                }
            }
        }
        if (bad >= 0) {
            traj.abort_reason = "domain exit (non-finite state derivative)";
            traj.abort_time = t;
            traj.abort_cell = bad;
            return traj;
        }
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        t += dt;

        double vmax = 0.0;
        int worst = 0;
        for (std::size_t i = 0; i < v.size(); ++i)
            if (std::abs(v[i]) > vmax) {
                vmax = std::abs(v[i]);
                worst = static_cast<int>(i / p);
            }
        if (!std::isfinite(vmax) || vmax > cfg.growth_factor * (1.0 + vmax0)) {
            traj.abort_reason = "instability detected (norm growth)";
            traj.abort_time = t;
            traj.abort_cell = worst;
            return traj;
        }
        bool last = n == steps - 1;
        if (last || (cfg.store_every > 0 && (n + 1) % cfg.store_every == 0))
            if (!store(t, v)) return traj;
    }
    traj.completed = true;
    return traj;
}

/// Trapezoid-rule spatial integral of a scalar expression over a stored
/// frame (on a periodic uniform grid this is dx * sum).
inline double integrate_scalar(const SystemQL& sys, const Trajectory& traj, const Expr& e,
                               std::size_t frame) {
    Assignment fixed = sys.sampler.fixed_values();
    Tape tape({e}, sys.vars, fixed, &sys.sampler.interps);
    std::vector<double> scratch;
    const auto& w = traj.states.at(frame);
    double acc = 0, out;
    for (int i = 0; i < traj.N; ++i) {
        tape.eval(std::span<const double>(&w[i * traj.p], traj.p), std::span<double>(&out, 1),
                  scratch);
        if (!std::isfinite(out))
            throw SimulationError("stored state left the admissible domain at cell " +
                                  std::to_string(i));
        acc += out;
    }
    return acc * traj.dx;
}

/// |∫S dx at t_end - ∫S dx at 0|: for a verified pair on a periodic domain
/// the exact invariant, so the discrete drift isolates discretization error.
inline double entropy_drift(const SystemQL& sys, const Trajectory& traj, const Expr& S) {
    if (!traj.completed) throw SimulationError("trajectory incomplete: " + traj.abort_reason);
    double s0 = integrate_scalar(sys, traj, S, 0);
    double s1 = integrate_scalar(sys, traj, S, traj.states.size() - 1);
    return std::abs(s1 - s0);
}

struct ConvergenceResult {
    std::vector<int> grids;
    std::vector<double> dxs;
    std::vector<double> drifts;
    double order = 0.0;           // least-squares slope of log(drift) vs log(dx)
    bool beyond_measurement = false;  // drift at round-off on the coarsest grid
};

/// Refinement study: rerun with each grid size (dt scales with dx through
/// dt_over_dx) and fit the drift order.
inline ConvergenceResult convergence_order(const SystemQL& sys, const Expr& S, SimConfig cfg,
                                           const std::vector<int>& grids) {
    if (grids.size() < 3) throw std::invalid_argument("need at least 3 grids");
    ConvergenceResult res;
    res.grids = grids;
    for (int N : grids) {
        cfg.N = N;
        Trajectory traj = simulate(sys, cfg);
        if (!traj.completed)
            throw SimulationError("run aborted at t=" + std::to_string(traj.abort_time) + " cell " +
                                  std::to_string(traj.abort_cell) + ": " + traj.abort_reason);
        res.dxs.push_back(traj.dx);
        res.drifts.push_back(entropy_drift(sys, traj, S));
    }
    if (res.drifts.front() < 1e-13) {
        res.beyond_measurement = true;
        return res;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = res.dxs.size();
    for (std::size_t i = 0; i < n; ++i) {
        double x = std::log(res.dxs[i]);
        double y = std::log(std::max(res.drifts[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    res.order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return res;
}

/// CSV diagnostics: t, total_entropy, max_state_residual. The residual is
/// the semi-discrete entropy balance dS/dt + D_x G per cell when a closed
/// flux G is available, else 0.
inline std::string trajectory_csv(const SystemQL& sys, const Trajectory& traj, const Expr& S,
                                  const std::optional<Expr>& G) {
    const std::size_t p = traj.p;
    std::vector<Expr> items;
    items.push_back(S);
    std::vector<Expr> grad = entropic_variables(S, sys);
    for (auto& g : grad) items.push_back(g);
    std::vector<Expr> mat;
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) mat.push_back(sys.jac[i][j] + sys.noncons[i][j]);
    for (auto& e : mat) items.push_back(e);
    if (G) items.push_back(*G);

    Assignment fixed = sys.sampler.fixed_values();
    Tape tape(items, sys.vars, fixed, &sys.sampler.interps);
    std::vector<double> scratch, out(items.size());

    std::string csv = "t,total_entropy,max_state_residual\n";
    const double inv2dx = 1.0 / (2.0 * traj.dx);
    std::vector<double> Gvals(traj.N);
    for (std::size_t f = 0; f < traj.states.size(); ++f) {
        const auto& w = traj.states[f];
        double total = 0;
        for (int i = 0; i < traj.N; ++i) {
            tape.eval(std::span<const double>(&w[i * p], p), std::span<double>(out.data(), out.size()),
                      scratch);
            total += out[0];
            if (G) Gvals[i] = out[1 + p + p * p];
        }
        double max_res = 0;
        if (G) {
            // second pass: rhs needs neighbor states
            for (int i = 0; i < traj.N; ++i) {
                int im = i == 0 ? traj.N - 1 : i - 1;
                int ip = i == traj.N - 1 ? 0 : i + 1;
                tape.eval(std::span<const double>(&w[i * p], p),
                          std::span<double>(out.data(), out.size()), scratch);
                double ds_dt = 0;
                for (std::size_t r = 0; r < p; ++r) {
                    double acc = 0;
                    for (std::size_t c = 0; c < p; ++c)
                        acc += out[1 + p + r * p + c] * (w[ip * p + c] - w[im * p + c]);
                    ds_dt += out[1 + r] * (-acc * inv2dx);
                }
                double dxG = (Gvals[ip] - Gvals[im]) * inv2dx;
                max_res = std::max(max_res, std::abs(ds_dt + dxG));
            }
        }
        char line[128];
        std::snprintf(line, sizeof line, "%.12g,%.17g,%.12g\n", traj.times[f], total * traj.dx,
                      max_res);
        csv += line;
    }
    return csv;
}

inline nlohmann::json summary_json(const SystemQL& sys, const Trajectory& traj, const Expr& S) {
    nlohmann::json j{{"model", sys.name},   {"N", traj.N},
                     {"dx", traj.dx},       {"dt", traj.dt},
                     {"completed", traj.completed}};
    if (traj.completed) {
        j["entropy_initial"] = integrate_scalar(sys, traj, S, 0);
        j["entropy_final"] = integrate_scalar(sys, traj, S, traj.states.size() - 1);
        j["entropy_drift"] = entropy_drift(sys, traj, S);
        j["t_end"] = traj.times.back();
    } else {
        j["abort_reason"] = traj.abort_reason;
        j["abort_time"] = traj.abort_time;
        j["abort_cell"] = traj.abort_cell;
    }
    return j;
}

}  // namespace entlaw::fv
