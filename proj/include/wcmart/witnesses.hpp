#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cancellation.hpp"
#include "errors.hpp"
#include "martingale.hpp"
#include "tensor_space.hpp"
#include "tree_model.hpp"

namespace wcmart {

/// A finitely supported R^ell-valued measure on 𝕋.
struct AtomicMeasure {
    ModelParams params;
    std::vector<std::pair<TreePath, RatVector>> support;

    /// Σ |weight|_2 over the support points (exact for distinct points).
    double total_variation() const {
        double tv = 0.0;
        for (const auto& [path, w] : support) tv += euclidean_norm(w);
        return tv;
    }
};

/// F_n = Σ_ω μ(ω) m^n χ_ω, truncated at depth N. Linear in μ.
inline FiniteMartingale measure_to_martingale(const AtomicMeasure& mu, int depth) {
    FiniteMartingale f(mu.params, depth);
    const Rational mass(integer_power(mu.params.m, depth));
    for (const auto& [path, weight] : mu.support) {
        path.validate(mu.params.m);
        if (weight.size() != static_cast<std::size_t>(mu.params.ell)) throw DimensionError("measure weight must lie in R^ell");
        f.add_to_leaf(path.atom(depth).index(mu.params.m), scaled(weight, mass));
    }
    return f;
}

/// The martingale of a·δ_path: a m^N on the depth-N atom containing the path.
inline FiniteMartingale delta_martingale(const TreePath& path, const RatVector& a, int depth, const ModelParams& params) {
    if (depth < 1) throw PreconditionError("delta_martingale: depth must be at least 1");
    return measure_to_martingale(AtomicMeasure{params, {{path, a}}}, depth);
}

/// F_n = a m^n χ_{ω_n}, ω_n the atom with digits j, ..., j.
inline FiniteMartingale necessity_martingale(int j, const RatVector& a, int depth, const ModelParams& params) {
    params.validate();
    detail::check_digit(j, params.m);
    return delta_martingale(TreePath::constant(j), a, depth, params);
}

struct CurvePoint {
    int depth = 0;
    Rational lhs;     // transform value on the all-j atom
    double rhs = 0.0; // ‖F_N‖_{L_1}
    double ratio = 0.0;
};

struct WitnessReport {
    int j = 0;
    RatVector a;
    Rational theta;
    std::vector<CurvePoint> curve;
};

/// Evaluates the φ-transform of the stopped counterexample on the all-j atom
/// for N = 1..n_max and asserts the exact value N·θ.
inline WitnessReport blow_up_curve(const WSpace& w, const PhiMap& phi, int j, const RatVector& a, int n_max) {
    const ModelParams& p = w.params();
    const TensorVW dja = rank_one(nasty_vector(j, p), a);
    if (!w.contains(dja)) throw PreconditionError("blow_up_curve: D_j (x) a is not in W");
    WitnessReport report;
    report.j = j;
    report.a = a;
    report.theta = phi.apply(dja)[static_cast<std::size_t>(j - 1)];
    if (sgn(report.theta) == 0)
        throw PreconditionError("blow_up_curve: theta = 0, no blow-up along this direction");
    for (int n = 1; n <= n_max; ++n) {
        const FiniteMartingale f = necessity_martingale(j, a, n, p);
        const ScalarTreeFunction t = transform(f, phi);
        CurvePoint pt;
        pt.depth = n;
        pt.lhs = t.value_at(TreePath::constant(j).atom(n));
        if (pt.lhs != n * report.theta)
            throw InvariantError("blow_up_curve: transform at depth " + std::to_string(n) + " is " + to_string(pt.lhs) +
                                 ", expected " + to_string(Rational(n * report.theta)));
        pt.rhs = sobolev_norm(f);
        pt.ratio = pt.lhs.get_d() / pt.rhs;
        report.curve.push_back(std::move(pt));
    }
    return report;
}

struct DisjointSupportReport {
    bool disjoint = true;
    std::optional<int> level;  // first n whose summand is nonzero on ω_{n+1}
    std::optional<int> digit;  // the digit j_{n+1} at that level
};

/// For the delta martingale of a·δ_path, checks that the level-n summand of
/// the Φ-transform vanishes on ω_{n+1} for every n < N. Since all later
/// increments live inside ω_{n+1}, this makes the summands disjointly supported.
inline DisjointSupportReport disjoint_support_check(const ExtendedMap& ext, const TreePath& path, const RatVector& a,
                                                    int depth) {
    const ModelParams& p = ext.params();
    const FiniteMartingale f = delta_martingale(path, a, depth, p);
    const TransformSummands s = transform_summands(f, ext.matrix());
    for (int n = 0; n < depth; ++n) {
        const std::uint64_t on_path = path.atom(n + 1).index(p.m);
        const auto& level = s.by_level[static_cast<std::size_t>(n)];
        if (level.count(on_path)) return {false, n, path.digit(static_cast<std::size_t>(n))};
    }
    return {};
}

/// An exact nonnegative quantity reported through its square.
struct NormValue {
    Rational squared;
    std::optional<Rational> exact;  // set when the square root is rational
    double value = 0.0;

    static NormValue from_squared(Rational sq) {
        NormValue v;
        v.exact = exact_sqrt(sq);
        v.value = v.exact ? v.exact->get_d() : std::sqrt(sq.get_d());
        v.squared = std::move(sq);
        return v;
    }
};

/// Exact operator norm of F ↦ Φ-transform from L_1 to L_∞ at depth N.
///
/// The transform is linear in the limiting measure and the L_∞ norm is convex,
/// so the supremum over the unit ball is attained at unit-weight deltas. For a
/// delta a·δ_t the value at a depth-N atom x depends only on where x leaves t:
/// if x agrees with t on k digits and then takes digit i ≠ t_{k+1}, the value
/// is Σ_{n<k} c(t_{n+1}, t_{n+1})·a + c(t_{k+1}, i)·a, with
/// c(j, i)·a = (Φ(D_j ⊗ a))_i; x = t gives the full diagonal sum. The norm is the
/// largest Euclidean norm of these row vectors. Prefix sums are shared along a
/// depth-first walk over t.
inline NormValue transform_norm(const ExtendedMap& ext, int depth) {
    if (depth < 1) throw PreconditionError("transform_norm: depth must be at least 1");
    const ModelParams& p = ext.params();
    std::vector<std::vector<RatVector>> c(static_cast<std::size_t>(p.m));
    for (int j = 1; j <= p.m; ++j)
        for (int i = 1; i <= p.m; ++i) c[static_cast<std::size_t>(j - 1)].push_back(ext.nasty_functional(j, i));

    Rational best(0);
    auto consider = [&](const RatVector& v) {
        const Rational sq = squared_norm(v);
        if (sq > best) best = sq;
    };
    std::function<void(int, const RatVector&)> walk = [&](int k, const RatVector& prefix_sum) {
        for (int d = 0; d < p.m; ++d) {
            const auto& row = c[static_cast<std::size_t>(d)];
            for (int i = 0; i < p.m; ++i)
                if (i != d) consider(prefix_sum + row[static_cast<std::size_t>(i)]);
            const RatVector next = prefix_sum + row[static_cast<std::size_t>(d)];
            if (k + 1 == depth)
                consider(next);
            else
                walk(k + 1, next);
        }
    };
    walk(0, zero_vector(static_cast<std::size_t>(p.ell)));
    return NormValue::from_squared(best);
}

/// max over j and i ≠ j of |a ↦ (Φ(D_j ⊗ a))_i|, the depth-independent value
/// of transform_norm when Φ vanishes in coordinate j on every D_j ⊗ a.
inline NormValue off_diagonal_norm(const ExtendedMap& ext) {
    Rational best(0);
    for (int j = 1; j <= ext.params().m; ++j)
        for (int i = 1; i <= ext.params().m; ++i) {
            if (i == j) continue;
            const Rational sq = squared_norm(ext.nasty_functional(j, i));
            if (sq > best) best = sq;
        }
    return NormValue::from_squared(best);
}

}  // namespace wcmart
