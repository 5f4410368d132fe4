#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "exact_linalg.hpp"
#include "random.hpp"
#include "rational.hpp"
#include "tensor_space.hpp"
#include "tree_model.hpp"

namespace wcmart {

namespace detail {

inline bool scalar_is_zero(const Rational& x) { return sgn(x) == 0; }
inline bool scalar_is_zero(double x) { return x == 0.0; }
inline double scalar_to_double(const Rational& x) { return x.get_d(); }
inline double scalar_to_double(double x) { return x; }

template <class Scalar>
bool all_zero(const std::vector<Scalar>& v) {
    return std::all_of(v.begin(), v.end(), [](const Scalar& x) { return scalar_is_zero(x); });
}

/// Neumaier compensated sum.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            c_ += (sum_ - t) + x;
        else
            c_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + c_; }

private:
    double sum_ = 0.0;
    double c_ = 0.0;
};

}  // namespace detail

/// Values on the atoms of one generation, keyed by lexicographic atom index.
/// Atoms without an entry carry the zero vector.
template <class Scalar>
struct BasicLevelData {
    int level = 0;
    std::map<std::uint64_t, std::vector<Scalar>> values;

    const std::vector<Scalar>* find(std::uint64_t index) const {
        auto it = values.find(index);
        return it == values.end() ? nullptr : &it->second;
    }
};

/// A depth-N martingale adapted to the m-uniform filtration, stored by its
/// R^ell-valued leaf values F_N. Leaves are sparse: missing leaves are zero.
/// F_n for n < N is always derived by averaging, so the martingale property
/// holds by construction.
template <class Scalar>
class BasicMartingale {
public:
    BasicMartingale(const ModelParams& params, int depth) : params_(params), depth_(depth) {
        params_.validate();
        if (depth < 0) throw PreconditionError("martingale depth must be nonnegative");
        leaf_count_ = level_size(params_.m, depth_);
    }

    const ModelParams& params() const { return params_; }
    int depth() const { return depth_; }
    std::uint64_t leaf_count() const { return leaf_count_; }
    const std::map<std::uint64_t, std::vector<Scalar>>& leaves() const { return leaves_; }

    std::vector<Scalar> leaf(std::uint64_t index) const {
        auto it = leaves_.find(index);
        return it == leaves_.end() ? std::vector<Scalar>(static_cast<std::size_t>(params_.ell), Scalar(0)) : it->second;
    }

    void set_leaf(std::uint64_t index, std::vector<Scalar> value) {
        check(index, value);
        if (detail::all_zero(value))
            leaves_.erase(index);
        else
            leaves_[index] = std::move(value);
    }

    void add_to_leaf(std::uint64_t index, const std::vector<Scalar>& value) {
        check(index, value);
        auto current = leaf(index);
        for (std::size_t k = 0; k < value.size(); ++k) current[k] += value[k];
        set_leaf(index, std::move(current));
    }

    /// F_0, ..., F_N.
    std::vector<BasicLevelData<Scalar>> levels() const {
        std::vector<BasicLevelData<Scalar>> out(static_cast<std::size_t>(depth_) + 1);
        out.back().level = depth_;
        out.back().values = leaves_;
        const Scalar inv_m = Scalar(1) / Scalar(params_.m);
        const auto m = static_cast<std::uint64_t>(params_.m);
        for (int n = depth_ - 1; n >= 0; --n) {
            auto& coarse = out[static_cast<std::size_t>(n)];
            coarse.level = n;
            for (const auto& [idx, v] : out[static_cast<std::size_t>(n) + 1].values) {
                auto& acc = coarse.values[idx / m];
                if (acc.empty()) acc.assign(v.size(), Scalar(0));
                for (std::size_t k = 0; k < v.size(); ++k) acc[k] += v[k];
            }
            for (auto it = coarse.values.begin(); it != coarse.values.end();) {
                for (auto& x : it->second) x *= inv_m;
                if (detail::all_zero(it->second))
                    it = coarse.values.erase(it);
                else
                    ++it;
            }
        }
        return out;
    }

    friend bool operator==(const BasicMartingale& a, const BasicMartingale& b) {
        return a.params_ == b.params_ && a.depth_ == b.depth_ && a.leaves_ == b.leaves_;
    }

private:
    void check(std::uint64_t index, const std::vector<Scalar>& value) const {
        if (index >= leaf_count_) throw PreconditionError("leaf index out of range");
        if (value.size() != static_cast<std::size_t>(params_.ell)) throw DimensionError("leaf value must lie in R^ell");
    }

    ModelParams params_;
    int depth_ = 0;
    std::uint64_t leaf_count_ = 1;
    std::map<std::uint64_t, std::vector<Scalar>> leaves_;
};

using LevelData = BasicLevelData<Rational>;
using FloatLevelData = BasicLevelData<double>;
using FiniteMartingale = BasicMartingale<Rational>;
using FloatMartingale = BasicMartingale<double>;

/// Visits, in increasing parent index, every generation-n atom ω on which
/// f_{n+1}|_ω is nonzero, passing J_ω^{-1}[f_{n+1}|_ω] flattened row-major.
template <class Fn>
void for_each_increment(const std::vector<LevelData>& levels, int n, const ModelParams& params, Fn&& fn) {
    const auto m = static_cast<std::uint64_t>(params.m);
    const auto ell = static_cast<std::size_t>(params.ell);
    const LevelData& coarse = levels[static_cast<std::size_t>(n)];
    const LevelData& fine = levels[static_cast<std::size_t>(n) + 1];
    std::set<std::uint64_t> parents;
    for (const auto& kv : coarse.values) parents.insert(kv.first);
    for (const auto& kv : fine.values) parents.insert(kv.first / m);
    RatVector flat(params.tensor_dim());
    for (std::uint64_t p : parents) {
        const RatVector* base = coarse.find(p);
        bool nonzero = false;
        for (std::uint64_t i = 0; i < m; ++i) {
            const RatVector* child = fine.find(p * m + i);
            for (std::size_t k = 0; k < ell; ++k) {
                Rational& slot = flat[i * ell + k];
                slot = child ? (*child)[k] : Rational(0);
                if (base) slot -= (*base)[k];
                if (sgn(slot) != 0) nonzero = true;
            }
        }
        if (nonzero) fn(p, static_cast<const RatVector&>(flat));
    }
}

/// f_0 = F_0 and f_n = F_n - F_{n-1}, n = 1..N.
inline std::vector<LevelData> differences(const FiniteMartingale& f) {
    const auto levels = f.levels();
    const auto m = static_cast<std::uint64_t>(f.params().m);
    const auto ell = static_cast<std::size_t>(f.params().ell);
    std::vector<LevelData> out(levels.size());
    out[0] = levels[0];
    for (int n = 0; n < f.depth(); ++n) {
        auto& d = out[static_cast<std::size_t>(n) + 1];
        d.level = n + 1;
        for_each_increment(levels, n, f.params(), [&](std::uint64_t p, const RatVector& flat) {
            for (std::uint64_t i = 0; i < m; ++i) {
                RatVector v(flat.begin() + static_cast<std::ptrdiff_t>(i * ell),
                            flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * ell));
                if (!is_zero(v)) d.values.emplace(p * m + i, std::move(v));
            }
        });
    }
    return out;
}

/// The n-th martingale difference (n = 0 gives F_0).
inline LevelData difference(const FiniteMartingale& f, int n) {
    if (n < 0 || n > f.depth())
        throw PreconditionError("difference level " + std::to_string(n) + " outside [0.." + std::to_string(f.depth()) + "]");
    return differences(f)[static_cast<std::size_t>(n)];
}

/// Exponent p ∈ [1, ∞]; p = 1 is the L_1 norm of the Sobolev space.
inline void check_exponent(double p) {
    if (!(p >= 1.0)) throw PreconditionError("L_p exponent must lie in [1, inf], got " + std::to_string(p));
}

constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// L_p norm of level data on the probability space: each generation-n atom
/// has mass m^{-n}, and |·| on R^ell is Euclidean.
template <class Scalar>
double lp_norm(const BasicLevelData<Scalar>& level, int m, double p) {
    check_exponent(p);
    // m^n is an exact double for every tree small enough to store.
    const double atoms = std::pow(static_cast<double>(m), static_cast<double>(level.level));
    detail::CompensatedSum acc;
    double sup = 0.0;
    for (const auto& kv : level.values) {
        double sq = 0.0;
        for (const auto& x : kv.second) {
            const double d = detail::scalar_to_double(x);
            sq += d * d;
        }
        const double norm = std::sqrt(sq);
        if (std::isinf(p))
            sup = std::max(sup, norm);
        else
            acc.add(std::pow(norm, p) / atoms);
    }
    if (std::isinf(p)) return sup;
    return std::pow(acc.value(), 1.0 / p);
}

/// ‖F‖ in the Sobolev space at finite depth: ‖F_N‖_{L_1}.
template <class Scalar>
double sobolev_norm(const BasicMartingale<Scalar>& f) {
    BasicLevelData<Scalar> top;
    top.level = f.depth();
    top.values = f.leaves();
    return lp_norm(top, f.params().m, 1.0);
}

struct SobolevVerdict {
    bool member = true;
    std::optional<Atom> atom;  // first ω (by generation, then index) with f_{n+1}|_ω ∉ J_ω[W]
};

/// Exact check of f_{n+1}|_ω ∈ J_ω[W] for all n < N and all generation-n atoms.
inline SobolevVerdict validate_sobolev(const FiniteMartingale& f, const WSpace& w) {
    if (!(f.params() == w.params())) throw DimensionError("martingale and W have different m/ell");
    const auto levels = f.levels();
    for (int n = 0; n < f.depth(); ++n) {
        std::optional<std::uint64_t> bad;
        for_each_increment(levels, n, f.params(), [&](std::uint64_t p, const RatVector& flat) {
            if (!bad && !w.contains_flat(flat)) bad = p;
        });
        if (bad) return {false, Atom::from_index(*bad, n, f.params().m)};
    }
    return {};
}

/// Samples a martingale in the Sobolev space of W: random F_0, then on every
/// atom an increment J_ω[Σ c_b B_b] with small random rational c_b.
/// Deterministic in the seed.
inline FiniteMartingale random_sobolev(const WSpace& w, int depth, std::uint64_t seed) {
    const ModelParams& p = w.params();
    Rng rng(seed);
    const auto m = static_cast<std::uint64_t>(p.m);
    const auto ell = static_cast<std::size_t>(p.ell);
    std::vector<RatVector> current{random_vector(rng, ell, 4)};
    for (int n = 0; n < depth; ++n) {
        std::vector<RatVector> next;
        next.reserve(current.size() * m);
        for (const auto& base : current) {
            RatVector inc = zero_vector(p.tensor_dim());
            for (const auto& b : w.flat_basis()) add_scaled(inc, b, random_rational(rng, 3, 2));
            for (std::uint64_t i = 0; i < m; ++i) {
                RatVector child(base);
                for (std::size_t k = 0; k < ell; ++k) child[k] += inc[i * ell + k];
                next.push_back(std::move(child));
            }
        }
        current = std::move(next);
    }
    FiniteMartingale f(p, depth);
    for (std::uint64_t i = 0; i < current.size(); ++i) f.set_leaf(i, std::move(current[i]));
    return f;
}

/// m^{-α} when it is rational: α = p/q needs m^p to be a perfect q-th power.
inline std::optional<Rational> level_factor(int m, const Rational& alpha) {
    if (sgn(alpha) < 0) throw PreconditionError("alpha must be nonnegative");
    const mpz_class& num = alpha.get_num();
    const mpz_class& den = alpha.get_den();
    if (!num.fits_ulong_p() || !den.fits_ulong_p()) return std::nullopt;
    const mpz_class power = integer_power(m, static_cast<int>(num.get_ui()));
    mpz_class root;
    if (mpz_root(root.get_mpz_t(), power.get_mpz_t(), den.get_ui()) == 0) return std::nullopt;
    Rational out(mpz_class(1), root);
    out.canonicalize();
    return out;
}

namespace detail {

/// Leaves of Σ_{k<=N} c^k f_k, propagated generation by generation.
template <class Scalar, class Convert>
BasicMartingale<Scalar> scaled_difference_sum(const FiniteMartingale& f, const Scalar& c, Convert convert) {
    const auto diffs = differences(f);
    const auto m = static_cast<std::uint64_t>(f.params().m);
    std::map<std::uint64_t, std::vector<Scalar>> g;
    for (const auto& [idx, v] : diffs[0].values) g[idx] = convert(v);
    Scalar weight(1);
    for (int n = 1; n <= f.depth(); ++n) {
        weight *= c;
        std::map<std::uint64_t, std::vector<Scalar>> next;
        for (const auto& [idx, v] : g)
            for (std::uint64_t i = 0; i < m; ++i) next[idx * m + i] = v;
        for (const auto& [idx, v] : diffs[static_cast<std::size_t>(n)].values) {
            auto add = convert(v);
            auto& slot = next[idx];
            if (slot.empty()) slot.assign(add.size(), Scalar(0));
            for (std::size_t k = 0; k < add.size(); ++k) slot[k] += weight * add[k];
        }
        g = std::move(next);
    }
    BasicMartingale<Scalar> out(f.params(), f.depth());
    for (auto& [idx, v] : g) out.set_leaf(idx, std::move(v));
    return out;
}

}  // namespace detail

/// I_α[F]: the martingale whose n-th element is Σ_{k<=n} m^{-αk} f_k.
/// Exact; requires m^{-α} rational (see riesz_potential_approx otherwise).
inline FiniteMartingale riesz_potential(const FiniteMartingale& f, const Rational& alpha) {
    const auto factor = level_factor(f.params().m, alpha);
    if (!factor)
        throw PreconditionError("m^(-alpha) is irrational for alpha = " + to_string(alpha) + "; use riesz_potential_approx");
    return detail::scaled_difference_sum<Rational>(f, *factor, [](const RatVector& v) { return v; });
}

inline FloatMartingale riesz_potential_approx(const FiniteMartingale& f, double alpha) {
    if (!(alpha >= 0.0)) throw PreconditionError("alpha must be nonnegative");
    const double factor = std::pow(static_cast<double>(f.params().m), -alpha);
    return detail::scaled_difference_sum<double>(f, factor, [](const RatVector& v) {
        std::vector<double> out;
        out.reserve(v.size());
        for (const auto& x : v) out.push_back(x.get_d());
        return out;
    });
}

/// Σ_{n=0}^{N} m^{-n(p-1)/p} ‖f_n‖_{L_p}; the weight is m^{-n} for p = ∞.
inline double stronger_embedding_lhs(const std::vector<LevelData>& diffs, int m, double p) {
    if (!(p > 1.0)) throw PreconditionError("stronger embedding needs p in (1, inf]");
    const double exponent = std::isinf(p) ? 1.0 : (p - 1.0) / p;
    detail::CompensatedSum acc;
    for (const auto& d : diffs) acc.add(std::pow(static_cast<double>(m), -exponent * d.level) * lp_norm(d, m, p));
    return acc.value();
}

inline double stronger_embedding_lhs(const FiniteMartingale& f, double p) {
    return stronger_embedding_lhs(differences(f), f.params().m, p);
}

/// ‖I_{(p-1)/p}[F]‖_{L_p}, evaluated on the final element of the sequence.
inline double embedding_lhs(const FiniteMartingale& f, double p) {
    if (!(p > 1.0)) throw PreconditionError("embedding needs p in (1, inf]");
    const double alpha = std::isinf(p) ? 1.0 : (p - 1.0) / p;
    const FloatMartingale potential = riesz_potential_approx(f, alpha);
    FloatLevelData top;
    top.level = f.depth();
    top.values = potential.leaves();
    return lp_norm(top, f.params().m, p);
}

/// Generation and lexicographic index of an atom.
struct AtomKey {
    int generation = 0;
    std::uint64_t index = 0;
    friend auto operator<=>(const AtomKey&, const AtomKey&) = default;
};

/// A scalar function on the depth-N atoms, stored as a finite sum of
/// constants on atoms: value(x) = Σ pieces[ω] over atoms ω ∋ x.
/// This keeps functions built from sparse martingales small at any depth.
class ScalarTreeFunction {
public:
    ScalarTreeFunction(const ModelParams& params, int depth) : params_(params), depth_(depth) {
        level_size(params_.m, depth_);
    }

    const ModelParams& params() const { return params_; }
    int depth() const { return depth_; }
    const std::map<AtomKey, Rational>& pieces() const { return pieces_; }
    bool is_zero() const { return pieces_.empty(); }

    void add_piece(int generation, std::uint64_t index, const Rational& value) {
        if (generation < 0 || generation > depth_) throw PreconditionError("piece generation out of range");
        if (sgn(value) == 0) return;
        auto [it, inserted] = pieces_.emplace(AtomKey{generation, index}, value);
        if (!inserted) {
            it->second += value;
            if (sgn(it->second) == 0) pieces_.erase(it);
        }
    }

    Rational value_at_index(std::uint64_t leaf) const {
        Rational v(0);
        const auto m = static_cast<std::uint64_t>(params_.m);
        std::uint64_t idx = leaf;
        for (int g = depth_; g >= 0; --g) {
            auto it = pieces_.find(AtomKey{g, idx});
            if (it != pieces_.end()) v += it->second;
            idx /= m;
        }
        return v;
    }

    Rational value_at(const Atom& leaf) const {
        if (leaf.generation() != depth_) throw PreconditionError("value_at needs a depth-N atom");
        return value_at_index(leaf.index(params_.m));
    }

    /// Exact max over depth-N atoms of |value|.
    Rational sup_norm() const {
        Rational best(0);
        walk([&](const Rational& value, int) {
            const Rational a = abs(value);
            if (a > best) best = a;
        });
        return best;
    }

    /// Max over depth-N atoms of the number of pieces covering the atom.
    int max_overlap() const {
        int best = 0;
        walk([&](const Rational&, int count) { best = std::max(best, count); });
        return best;
    }

    /// All m^N values; only for small trees.
    std::vector<Rational> to_dense() const {
        const std::uint64_t n = level_size(params_.m, depth_);
        if (n > (std::uint64_t{1} << 24)) throw PreconditionError("to_dense: tree too large");
        std::vector<Rational> out(n);
        for (std::uint64_t i = 0; i < n; ++i) out[i] = value_at_index(i);
        return out;
    }

    friend bool operator==(const ScalarTreeFunction& a, const ScalarTreeFunction& b) {
        return a.params_ == b.params_ && a.depth_ == b.depth_ && a.pieces_ == b.pieces_;
    }

private:
    // Visits every maximal region of constant value once, with that value and
    // the number of pieces covering it. Only ancestors of pieces are expanded.
    template <class Visit>
    void walk(Visit&& visit) const {
        const auto m = static_cast<std::uint64_t>(params_.m);
        std::set<AtomKey> active;
        active.insert(AtomKey{0, 0});
        for (const auto& kv : pieces_) {
            AtomKey k = kv.first;
            while (active.insert(k).second && k.generation > 0) k = AtomKey{k.generation - 1, k.index / m};
        }
        std::function<void(AtomKey, Rational, int)> rec = [&](AtomKey node, Rational value, int count) {
            auto it = pieces_.find(node);
            if (it != pieces_.end()) {
                value += it->second;
                ++count;
            }
            if (node.generation == depth_) {
                visit(value, count);
                return;
            }
            bool uncovered = false;
            for (std::uint64_t i = 0; i < m; ++i) {
                const AtomKey child{node.generation + 1, node.index * m + i};
                if (active.count(child))
                    rec(child, value, count);
                else
                    uncovered = true;
            }
            if (uncovered) visit(value, count);
        };
        rec(AtomKey{0, 0}, Rational(0), 0);
    }

    ModelParams params_;
    int depth_ = 0;
    std::map<AtomKey, Rational> pieces_;
};

/// The summands of the φ-transform, level by level: by_level[n] maps each
/// generation-(n+1) atom to m^{-n} (Φ(J_ω^{-1}[f_{n+1}|_ω]))_i, ω its parent
/// and i its digit. Zero values are omitted.
struct TransformSummands {
    int depth = 0;
    std::vector<std::map<std::uint64_t, Rational>> by_level;
};

inline TransformSummands transform_summands(const FiniteMartingale& f, const RatMatrix& map) {
    const ModelParams& p = f.params();
    if (map.rows() != static_cast<std::size_t>(p.m) || map.cols() != p.tensor_dim())
        throw DimensionError("transform: map must be m x (m*ell)");
    const auto m = static_cast<std::uint64_t>(p.m);
    const auto levels = f.levels();
    TransformSummands out;
    out.depth = f.depth();
    out.by_level.resize(static_cast<std::size_t>(f.depth()));
    for (int n = 0; n < f.depth(); ++n) {
        const Rational scale = inverse_power(p.m, n);
        auto& level = out.by_level[static_cast<std::size_t>(n)];
        for_each_increment(levels, n, p, [&](std::uint64_t parent, const RatVector& flat) {
            const RatVector y = map.apply(flat);
            for (std::uint64_t i = 0; i < m; ++i)
                if (sgn(y[i]) != 0) level.emplace(parent * m + i, scale * y[i]);
        });
    }
    return out;
}

inline ScalarTreeFunction assemble(const ModelParams& params, const TransformSummands& s) {
    ScalarTreeFunction out(params, s.depth);
    for (std::size_t n = 0; n < s.by_level.size(); ++n)
        for (const auto& [idx, v] : s.by_level[n]) out.add_piece(static_cast<int>(n) + 1, idx, v);
    return out;
}

/// Σ_{n<N} m^{-n} Σ_ω J_ω[Φ(J_ω^{-1}[f_{n+1}|_ω])] for an extension Φ on all of V ⊗ R^ell.
inline ScalarTreeFunction transform(const FiniteMartingale& f, const ExtendedMap& ext) {
    if (!(f.params() == ext.params())) throw DimensionError("transform: m/ell mismatch");
    return assemble(f.params(), transform_summands(f, ext.matrix()));
}

/// Same sum with φ itself; F must lie in the Sobolev space of φ's domain.
inline ScalarTreeFunction transform(const FiniteMartingale& f, const PhiMap& phi) {
    const SobolevVerdict v = validate_sobolev(f, phi.domain());
    if (!v.member) throw PreconditionError("transform: increment on atom '" + v.atom->to_string() + "' is not in W");
    return assemble(f.params(), transform_summands(f, phi.matrix_on_w()));
}

}  // namespace wcmart
