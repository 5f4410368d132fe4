#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "cancellation.hpp"
#include "errors.hpp"
#include "exact_linalg.hpp"
#include "tensor_space.hpp"

namespace wcmart {

/// Singular-value threshold for complex ranks and the tolerance of the
/// floating-point Fourier verdicts.
constexpr double kFourierTolerance = 1e-9;

/// A finite abelian group Z_{n_1} × ... × Z_{n_k} laid over the digits [1..m].
/// Digit j is the element whose mixed-radix digits (last factor fastest)
/// encode j - 1; digit 1 is the identity.
class GroupStructure {
public:
    explicit GroupStructure(std::vector<int> cyclic_orders) : orders_(std::move(cyclic_orders)) {
        if (orders_.empty()) throw ValidationError("group needs at least one cyclic factor");
        order_ = 1;
        for (int n : orders_) {
            if (n < 2) throw ValidationError("cyclic order " + std::to_string(n) + " is below 2");
            order_ *= n;
        }
    }

    static GroupStructure cyclic(int m) { return GroupStructure({m}); }

    int order() const { return order_; }
    const std::vector<int>& cyclic_orders() const { return orders_; }

    bool is_elementary_two_group() const {
        for (int n : orders_)
            if (n != 2) return false;
        return true;
    }

    std::vector<int> element(int digit) const {
        if (digit < 1 || digit > order_) throw PreconditionError("digit outside the group");
        std::vector<int> x(orders_.size());
        int code = digit - 1;
        for (std::size_t i = orders_.size(); i-- > 0;) {
            x[i] = code % orders_[i];
            code /= orders_[i];
        }
        return x;
    }

    int digit(const std::vector<int>& x) const {
        int code = 0;
        for (std::size_t i = 0; i < orders_.size(); ++i) code = code * orders_[i] + ((x[i] % orders_[i]) + orders_[i]) % orders_[i];
        return code + 1;
    }

    /// Digit of x - g.
    int subtract(int x_digit, int g_digit) const {
        auto x = element(x_digit);
        const auto g = element(g_digit);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= g[i];
        return digit(x);
    }

private:
    std::vector<int> orders_;
    int order_ = 1;
};

struct Character {
    std::vector<int> gamma;
    std::vector<std::complex<double>> values;  // values[j - 1] = χ_γ(digit j)
    bool is_trivial() const {
        for (int g : gamma)
            if (g != 0) return false;
        return true;
    }
};

/// χ_γ(x) = exp(2πi Σ γ_i x_i / n_i); γ is indexed like the group elements,
/// so the trivial character comes first.
inline std::vector<Character> characters(const GroupStructure& g) {
    std::vector<Character> out;
    for (int gd = 1; gd <= g.order(); ++gd) {
        Character chi;
        chi.gamma = g.element(gd);
        for (int xd = 1; xd <= g.order(); ++xd) {
            const auto x = g.element(xd);
            double phase = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i)
                phase += static_cast<double>(chi.gamma[i] * x[i] % g.cyclic_orders()[i]) / g.cyclic_orders()[i];
            chi.values.push_back(std::polar(1.0, 2.0 * std::numbers::pi * phase));
        }
        out.push_back(std::move(chi));
    }
    return out;
}

/// Exact ±1 value of a character of an elementary abelian 2-group.
inline int real_character_value(const GroupStructure& g, const std::vector<int>& gamma, int x_digit) {
    const auto x = g.element(x_digit);
    int parity = 0;
    for (std::size_t i = 0; i < x.size(); ++i) parity += gamma[i] * x[i];
    return parity % 2 == 0 ? 1 : -1;
}

/// (τ_g t)(x) = t(x - g).
inline TensorVW translate(const TensorVW& t, const GroupStructure& g, int g_digit) {
    const ModelParams& p = t.params();
    RatMatrix e(static_cast<std::size_t>(p.m), static_cast<std::size_t>(p.ell));
    for (int x = 1; x <= p.m; ++x) {
        const auto src = static_cast<std::size_t>(g.subtract(x, g_digit) - 1);
        for (std::size_t k = 0; k < e.cols(); ++k) e(static_cast<std::size_t>(x - 1), k) = t(src, k);
    }
    return TensorVW::from_matrix(p, std::move(e));
}

inline RatVector translate(const RatVector& v, const GroupStructure& g, int g_digit) {
    RatVector out(v.size());
    for (int x = 1; x <= static_cast<int>(v.size()); ++x)
        out[static_cast<std::size_t>(x - 1)] = v[static_cast<std::size_t>(g.subtract(x, g_digit) - 1)];
    return out;
}

namespace detail {

inline void check_group(const ModelParams& p, const GroupStructure& g) {
    if (g.order() != p.m)
        throw DimensionError("group order " + std::to_string(g.order()) + " differs from m = " + std::to_string(p.m));
}

}  // namespace detail

/// W is mapped onto itself by every translation.
inline bool is_translation_invariant(const WSpace& w, const GroupStructure& g) {
    detail::check_group(w.params(), g);
    for (int gd = 2; gd <= g.order(); ++gd)
        for (const auto& b : w.basis())
            if (!w.contains(translate(b, g, gd))) return false;
    return true;
}

/// φ ∘ τ_g = τ_g ∘ φ on W (and W itself translation invariant).
inline bool is_translation_invariant(const PhiMap& phi, const GroupStructure& g) {
    const WSpace& w = phi.domain();
    if (!is_translation_invariant(w, g)) return false;
    for (int gd = 2; gd <= g.order(); ++gd)
        for (std::size_t b = 0; b < w.dim(); ++b)
            if (phi.apply(translate(w.basis()[b], g, gd)) != translate(phi.images()[b], g, gd)) return false;
    return true;
}

/// ŵ(γ) = Σ_x w(x) conj(χ_γ(x)) ∈ C^ell.
inline Eigen::VectorXcd fourier_coefficient(const TensorVW& w, const Character& chi) {
    const ModelParams& p = w.params();
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(p.ell);
    for (int x = 0; x < p.m; ++x)
        for (int k = 0; k < p.ell; ++k)
            out(k) += w(static_cast<std::size_t>(x), static_cast<std::size_t>(k)).get_d() *
                      std::conj(chi.values[static_cast<std::size_t>(x)]);
    return out;
}

inline std::complex<double> fourier_coefficient(const RatVector& v, const Character& chi) {
    std::complex<double> out = 0.0;
    for (std::size_t x = 0; x < v.size(); ++x) out += v[x].get_d() * std::conj(chi.values[x]);
    return out;
}

/// Orthonormal basis (columns) of the column span, rank by singular values.
inline Eigen::MatrixXcd orthonormal_span(const Eigen::MatrixXcd& columns) {
    if (columns.cols() == 0 || columns.rows() == 0) return Eigen::MatrixXcd(columns.rows(), 0);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(columns, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    const double cutoff = kFourierTolerance * std::max(1.0, s.size() ? s(0) : 0.0);
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > cutoff) ++r;
    return svd.matrixU().leftCols(r);
}

/// Intersection of two subspaces given by orthonormal columns.
inline Eigen::MatrixXcd intersect_spans(const Eigen::MatrixXcd& q1, const Eigen::MatrixXcd& q2) {
    if (q1.cols() == 0 || q2.cols() == 0) return Eigen::MatrixXcd(q1.rows(), 0);
    Eigen::MatrixXcd stacked(q1.rows(), q1.cols() + q2.cols());
    stacked << q1, -q2;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(stacked, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    std::vector<Eigen::Index> null_cols;
    for (Eigen::Index c = 0; c < stacked.cols(); ++c)
        if (c >= s.size() || s(c) <= kFourierTolerance) null_cols.push_back(c);
    Eigen::MatrixXcd candidates(q1.rows(), static_cast<Eigen::Index>(null_cols.size()));
    for (std::size_t i = 0; i < null_cols.size(); ++i)
        candidates.col(static_cast<Eigen::Index>(i)) = q1 * svd.matrixV().col(null_cols[i]).head(q1.cols());
    return orthonormal_span(candidates);
}

struct CharacterFiber {
    std::vector<int> gamma;
    Eigen::MatrixXcd basis;  // ell × dim, orthonormal columns
    Eigen::Index dim() const { return basis.cols(); }
};

/// W_γ = {ŵ(γ) : w ∈ W} for every nontrivial γ, in character order.
inline std::vector<CharacterFiber> fibers(const WSpace& w, const GroupStructure& g) {
    if (!is_translation_invariant(w, g)) throw PreconditionError("fibers: W is not translation invariant");
    std::vector<CharacterFiber> out;
    for (const auto& chi : characters(g)) {
        if (chi.is_trivial()) continue;
        Eigen::MatrixXcd coeffs(w.params().ell, static_cast<Eigen::Index>(w.dim()));
        for (std::size_t b = 0; b < w.dim(); ++b) coeffs.col(static_cast<Eigen::Index>(b)) = fourier_coefficient(w.basis()[b], chi);
        out.push_back(CharacterFiber{chi.gamma, orthonormal_span(coeffs)});
    }
    return out;
}

/// ⋂_{γ≠0} W_γ as orthonormal columns.
inline Eigen::MatrixXcd fiber_intersection(const std::vector<CharacterFiber>& fs, int ell) {
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Identity(ell, ell);
    for (const auto& f : fs) acc = intersect_spans(acc, f.basis);
    return acc;
}

/// The fiber functionals φ_γ as row vectors: φ_γ[u] = c_γ u on W_γ.
inline std::vector<Eigen::RowVectorXcd> fiber_functionals(const PhiMap& phi, const GroupStructure& g) {
    const WSpace& w = phi.domain();
    std::vector<Eigen::RowVectorXcd> out;
    for (const auto& chi : characters(g)) {
        if (chi.is_trivial()) continue;
        Eigen::MatrixXcd u(w.params().ell, static_cast<Eigen::Index>(w.dim()));
        Eigen::RowVectorXcd s(static_cast<Eigen::Index>(w.dim()));
        for (std::size_t b = 0; b < w.dim(); ++b) {
            u.col(static_cast<Eigen::Index>(b)) = fourier_coefficient(w.basis()[b], chi);
            s(static_cast<Eigen::Index>(b)) = fourier_coefficient(phi.images()[b], chi);
        }
        if (w.dim() == 0) {
            out.push_back(Eigen::RowVectorXcd::Zero(w.params().ell));
            continue;
        }
        // c u_b = s_b for all b: least squares on u^T c^T = s^T.
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(u.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd.setThreshold(kFourierTolerance);
        out.push_back(svd.solve(s.transpose()).transpose());
    }
    return out;
}

enum class FourierMode { Auto, Float, Exact };

namespace detail {

inline bool use_exact(FourierMode mode, const GroupStructure& g) {
    if (mode == FourierMode::Exact && !g.is_elementary_two_group())
        throw PreconditionError("exact Fourier mode needs real characters (an elementary abelian 2-group)");
    return mode == FourierMode::Exact || (mode == FourierMode::Auto && g.is_elementary_two_group());
}

/// Exact coefficient vectors ŵ_b(γ) for real characters.
inline std::vector<RatVector> exact_coefficients(const WSpace& w, const GroupStructure& g, const std::vector<int>& gamma) {
    std::vector<RatVector> out;
    for (const auto& b : w.basis()) {
        RatVector c = zero_vector(static_cast<std::size_t>(w.params().ell));
        for (int x = 1; x <= w.params().m; ++x) {
            const int sign = real_character_value(g, gamma, x);
            for (std::size_t k = 0; k < c.size(); ++k) c[k] += sign * b(static_cast<std::size_t>(x - 1), k);
        }
        out.push_back(std::move(c));
    }
    return out;
}

inline Rational exact_scalar_coefficient(const RatVector& v, const GroupStructure& g, const std::vector<int>& gamma) {
    Rational s(0);
    for (int x = 1; x <= static_cast<int>(v.size()); ++x) s += real_character_value(g, gamma, x) * v[static_cast<std::size_t>(x - 1)];
    return s;
}

inline Subspace exact_intersection(const WSpace& w, const GroupStructure& g) {
    const auto ell = static_cast<std::size_t>(w.params().ell);
    Subspace acc = Subspace::full(ell);
    for (const auto& chi : characters(g)) {
        if (chi.is_trivial()) continue;
        acc = intersect(acc, Subspace::span(ell, exact_coefficients(w, g, chi.gamma)));
    }
    return acc;
}

}  // namespace detail

/// Exact fibers W_γ ⊂ Q^ell; only for elementary abelian 2-groups.
inline std::vector<Subspace> exact_fibers(const WSpace& w, const GroupStructure& g) {
    detail::use_exact(FourierMode::Exact, g);
    if (!is_translation_invariant(w, g)) throw PreconditionError("fibers: W is not translation invariant");
    std::vector<Subspace> out;
    for (const auto& chi : characters(g))
        if (!chi.is_trivial())
            out.push_back(Subspace::span(static_cast<std::size_t>(w.params().ell), detail::exact_coefficients(w, g, chi.gamma)));
    return out;
}

/// ⋂_{γ≠0} W_γ = {0}.
inline bool fourier_cancelling(const WSpace& w, const GroupStructure& g, FourierMode mode = FourierMode::Auto) {
    if (!is_translation_invariant(w, g)) throw PreconditionError("fourier_cancelling: W is not translation invariant");
    if (detail::use_exact(mode, g)) return detail::exact_intersection(w, g).is_zero();
    return fiber_intersection(fibers(w, g), w.params().ell).cols() == 0;
}

/// Σ_{γ≠0} φ_γ[a] = 0 for all a ∈ ⋂_{γ≠0} W_γ.
inline bool fourier_weak_cancelling(const WSpace& w, const PhiMap& phi, const GroupStructure& g,
                                    FourierMode mode = FourierMode::Auto) {
    if (!(phi.domain().subspace() == w.subspace())) throw PreconditionError("phi is not defined on this W");
    if (!is_translation_invariant(phi, g))
        throw PreconditionError("fourier_weak_cancelling: W and phi must be translation invariant");

    if (detail::use_exact(mode, g)) {
        const Subspace common = detail::exact_intersection(w, g);
        for (const auto& a : common.basis()) {
            Rational total(0);
            for (const auto& chi : characters(g)) {
                if (chi.is_trivial()) continue;
                const auto u = detail::exact_coefficients(w, g, chi.gamma);
                const auto y = solve(RatMatrix::from_columns(u, a.size()), a);
                if (!y) throw InvariantError("intersection vector outside a fiber");
                for (std::size_t b = 0; b < y->size(); ++b)
                    total += (*y)[b] * detail::exact_scalar_coefficient(phi.images()[b], g, chi.gamma);
            }
            if (sgn(total) != 0) return false;
        }
        return true;
    }

    const auto fs = fibers(w, g);
    const Eigen::MatrixXcd common = fiber_intersection(fs, w.params().ell);
    if (common.cols() == 0) return true;
    const auto functionals = fiber_functionals(phi, g);
    Eigen::RowVectorXcd total = Eigen::RowVectorXcd::Zero(w.params().ell);
    double scale = 1.0;
    for (const auto& c : functionals) {
        total += c;
        scale += c.norm();
    }
    for (Eigen::Index col = 0; col < common.cols(); ++col)
        if (std::abs((total * common.col(col))(0)) > kFourierTolerance * scale) return false;
    return true;
}

}  // namespace wcmart
