#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "entlaw/eval.hpp"
#include "entlaw/expr.hpp"

namespace entlaw {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Uniform draw in (0,1), bit-stable across platforms.
inline double unit_double(std::uint64_t bits) {
    double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
}

}  // namespace detail

/// Deterministic sampler over an axis-aligned box of base variables, with
/// derived quantities (auxiliaries, named constants) computed on top of each
/// draw. Sample i depends only on (seed, i, slot), so draws can be consumed
/// in any order or split across workers without changing the stream.
class DomainSampler {
public:
    std::uint64_t seed = 20240601ull;

    void add_base(const std::string& name, double lo, double hi) {
        base_.push_back({name, {lo, hi}});
    }
    void add_fixed(const std::string& name, double value) { fixed_.push_back({name, value}); }
    void add_derived(const std::string& name, Expr def) { derived_.push_back({name, std::move(def)}); }

    const std::vector<std::pair<std::string, Interval>>& base() const { return base_; }
    const std::vector<std::pair<std::string, Expr>>& derived() const { return derived_; }

    /// Fixed symbols (named constants) as an assignment.
    Assignment fixed_values() const {
        Assignment a;
        for (const auto& [name, v] : fixed_) a[name] = v;
        return a;
    }

    Interpretations interps;

    /// Draws the base variables of sample `index`.
    Assignment sample_base(std::uint64_t index) const {
        Assignment a;
        for (std::size_t k = 0; k < base_.size(); ++k) {
            const auto& [name, iv] = base_[k];
            std::uint64_t bits =
                detail::splitmix64(seed ^ detail::splitmix64(index * 0x100 + k + 1));
            a[name] = iv.lo + (iv.hi - iv.lo) * detail::unit_double(bits);
        }
        for (const auto& [name, v] : fixed_) a[name] = v;
        return a;
    }

    /// Extends a base assignment with the derived quantities, in declaration
    /// order. Propagates EvalError on inadmissible states.
    void complete(Assignment& a) const {
        for (const auto& [name, def] : derived_) {
            Evaluator ev(a, &interps);
            a[name] = ev.eval(def);
        }
    }

    Assignment sample(std::uint64_t index) const {
        Assignment a = sample_base(index);
        complete(a);
        return a;
    }

    /// Assignment for explicitly given base-variable values.
    Assignment at(const std::vector<std::pair<std::string, double>>& values) const {
        Assignment a;
        for (const auto& [name, v] : values) a[name] = v;
        for (const auto& [name, v] : fixed_) a[name] = v;
        complete(a);
        return a;
    }

    /// Midpoint of the sampling box.
    std::vector<std::pair<std::string, double>> center() const {
        std::vector<std::pair<std::string, double>> c;
        for (const auto& [name, iv] : base_) c.push_back({name, 0.5 * (iv.lo + iv.hi)});
        return c;
    }

private:
    std::vector<std::pair<std::string, Interval>> base_;
    std::vector<std::pair<std::string, double>> fixed_;
    std::vector<std::pair<std::string, Expr>> derived_;
};

}  // namespace entlaw
