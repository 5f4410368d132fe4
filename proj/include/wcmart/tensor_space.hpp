#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "exact_linalg.hpp"
#include "rational.hpp"

namespace wcmart {

/// Branching factor m of the filtration and target dimension ell.
struct ModelParams {
    int m = 2;
    int ell = 1;

    void validate() const {
        if (m < 2) throw ValidationError("m must be at least 2, got " + std::to_string(m));
        if (ell < 1) throw ValidationError("ell must be at least 1, got " + std::to_string(ell));
    }
    std::size_t tensor_dim() const { return static_cast<std::size_t>(m) * static_cast<std::size_t>(ell); }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// An element of V ⊗ R^ell, stored as an m × ell matrix whose columns sum to zero.
/// Row i (0-based) carries the R^ell value attached to digit i + 1.
///
/// Flattened coordinates are row-major: entry (i, k) sits at index i * ell + k.
class TensorVW {
public:
    static TensorVW from_matrix(const ModelParams& params, RatMatrix entries) {
        params.validate();
        if (entries.rows() != static_cast<std::size_t>(params.m) ||
            entries.cols() != static_cast<std::size_t>(params.ell))
            throw DimensionError("tensor must be " + std::to_string(params.m) + "x" + std::to_string(params.ell));
        for (std::size_t k = 0; k < entries.cols(); ++k) {
            Rational s(0);
            for (std::size_t i = 0; i < entries.rows(); ++i) s += entries(i, k);
            if (sgn(s) != 0)
                throw ValidationError("column " + std::to_string(k) + " sums to " + to_string(s) + ", expected 0");
        }
        TensorVW t;
        t.params_ = params;
        t.entries_ = std::move(entries);
        return t;
    }

    static TensorVW from_flat(const ModelParams& params, const RatVector& flat) {
        if (flat.size() != params.tensor_dim()) throw DimensionError("flat tensor length mismatch");
        RatMatrix e(static_cast<std::size_t>(params.m), static_cast<std::size_t>(params.ell));
        for (std::size_t i = 0; i < e.rows(); ++i)
            for (std::size_t k = 0; k < e.cols(); ++k) e(i, k) = flat[i * e.cols() + k];
        return from_matrix(params, std::move(e));
    }

    static TensorVW zero(const ModelParams& params) {
        return from_matrix(params, RatMatrix(static_cast<std::size_t>(params.m), static_cast<std::size_t>(params.ell)));
    }

    const ModelParams& params() const { return params_; }
    const RatMatrix& entries() const { return entries_; }
    const Rational& operator()(std::size_t i, std::size_t k) const { return entries_(i, k); }
    RatVector row(std::size_t i) const { return entries_.row(i); }

    RatVector flat() const {
        RatVector out;
        out.reserve(params_.tensor_dim());
        for (std::size_t i = 0; i < entries_.rows(); ++i)
            for (std::size_t k = 0; k < entries_.cols(); ++k) out.push_back(entries_(i, k));
        return out;
    }

    friend bool operator==(const TensorVW& a, const TensorVW& b) {
        return a.params_ == b.params_ && a.entries_ == b.entries_;
    }

private:
    TensorVW() = default;
    ModelParams params_;
    RatMatrix entries_;
};

/// D_j: m - 1 at position j, -1 elsewhere. Digits are 1-based.
inline RatVector nasty_vector(int j, const ModelParams& params) {
    params.validate();
    if (j < 1 || j > params.m)
        throw PreconditionError("digit " + std::to_string(j) + " outside [1.." + std::to_string(params.m) + "]");
    RatVector d(static_cast<std::size_t>(params.m), Rational(-1));
    d[static_cast<std::size_t>(j - 1)] = params.m - 1;
    return d;
}

/// v ⊗ a as the m × ell matrix (v_i a_k).
inline TensorVW rank_one(const RatVector& v, const RatVector& a) {
    if (v.size() < 2 || a.empty()) throw DimensionError("rank_one: need m >= 2 and ell >= 1");
    if (sgn(sum(v)) != 0) throw PreconditionError("rank_one: v has nonzero coordinate sum, not in V");
    const ModelParams params{static_cast<int>(v.size()), static_cast<int>(a.size())};
    RatMatrix e(v.size(), a.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t k = 0; k < a.size(); ++k) e(i, k) = v[i] * a[k];
    return TensorVW::from_matrix(params, std::move(e));
}

/// If the nonzero vector v ∈ V has m - 1 equal coordinates, the digit j with v ∝ D_j.
inline std::optional<int> nasty_direction(const RatVector& v) {
    const std::size_t m = v.size();
    if (m < 2 || wcmart::is_zero(v)) return std::nullopt;
    for (std::size_t j = 0; j < m; ++j) {
        const std::size_t ref = (j == 0) ? 1 : 0;
        bool equal = true;
        for (std::size_t i = 0; i < m && equal; ++i)
            if (i != j && v[i] != v[ref]) equal = false;
        if (equal) return static_cast<int>(j + 1);
    }
    return std::nullopt;
}

/// The subspace W ⊂ V ⊗ R^ell, given by an independent basis of tensors.
class WSpace {
public:
    static WSpace from_basis(const ModelParams& params, std::vector<TensorVW> basis) {
        params.validate();
        std::vector<RatVector> flats;
        for (std::size_t b = 0; b < basis.size(); ++b) {
            if (!(basis[b].params() == params))
                throw DimensionError("basis tensor " + std::to_string(b) + " has mismatched m/ell");
            flats.push_back(basis[b].flat());
        }
        WSpace w;
        w.params_ = params;
        w.span_ = Subspace::span(params.tensor_dim(), flats);
        if (w.span_.dim() != basis.size())
            throw ValidationError("W basis is linearly dependent (rank " + std::to_string(w.span_.dim()) + " < " +
                                  std::to_string(basis.size()) + " tensors)");
        w.basis_ = std::move(basis);
        w.flats_ = std::move(flats);
        w.annihilator_ = annihilator(w.span_).basis();
        return w;
    }

    static WSpace zero(const ModelParams& params) { return from_basis(params, {}); }

    /// All of V ⊗ R^ell, with basis (e_i - e_m) ⊗ e_k.
    static WSpace full(const ModelParams& params) {
        params.validate();
        std::vector<TensorVW> basis;
        for (int i = 0; i + 1 < params.m; ++i)
            for (int k = 0; k < params.ell; ++k) {
                RatVector v = zero_vector(static_cast<std::size_t>(params.m));
                v[static_cast<std::size_t>(i)] = 1;
                v.back() = -1;
                basis.push_back(rank_one(v, unit_vector(static_cast<std::size_t>(params.ell), static_cast<std::size_t>(k))));
            }
        return from_basis(params, std::move(basis));
    }

    const ModelParams& params() const { return params_; }
    std::size_t dim() const { return basis_.size(); }
    const std::vector<TensorVW>& basis() const { return basis_; }
    const std::vector<RatVector>& flat_basis() const { return flats_; }
    const Subspace& subspace() const { return span_; }

    /// Membership through the annihilator: a handful of dot products.
    bool contains_flat(const RatVector& flat) const {
        if (flat.size() != params_.tensor_dim()) throw DimensionError("membership: length mismatch");
        for (const auto& n : annihilator_)
            if (sgn(dot(n, flat)) != 0) return false;
        return true;
    }
    bool contains(const TensorVW& t) const { return contains_flat(t.flat()); }

    /// Coefficients of t in the user basis, or nullopt if t ∉ W.
    std::optional<RatVector> coefficients(const TensorVW& t) const {
        if (basis_.empty()) return is_zero(t.flat()) ? std::optional<RatVector>(RatVector{}) : std::nullopt;
        return solve(RatMatrix::from_columns(flats_, params_.tensor_dim()), t.flat());
    }

private:
    WSpace() = default;
    ModelParams params_;
    std::vector<TensorVW> basis_;
    std::vector<RatVector> flats_;
    Subspace span_;
    std::vector<RatVector> annihilator_;
};

/// The linear map φ : W → V, stored by its images of W's basis tensors.
class PhiMap {
public:
    static PhiMap create(WSpace domain, std::vector<RatVector> images) {
        const auto m = static_cast<std::size_t>(domain.params().m);
        if (images.size() != domain.dim())
            throw ValidationError("phi needs " + std::to_string(domain.dim()) + " images, got " +
                                  std::to_string(images.size()));
        for (std::size_t b = 0; b < images.size(); ++b) {
            if (images[b].size() != m)
                throw ValidationError("phi image " + std::to_string(b) + " has length " +
                                      std::to_string(images[b].size()) + ", expected " + std::to_string(m));
            if (sgn(sum(images[b])) != 0)
                throw ValidationError("phi image " + std::to_string(b) + " sums to " + to_string(sum(images[b])) +
                                      ", phi must map into V");
        }
        PhiMap phi;
        phi.matrix_ = coordinate_matrix(domain, images);
        phi.domain_ = std::move(domain);
        phi.images_ = std::move(images);
        return phi;
    }

    /// φ = 0 on W.
    static PhiMap zero(WSpace domain) {
        const auto m = static_cast<std::size_t>(domain.params().m);
        std::vector<RatVector> images(domain.dim(), zero_vector(m));
        return create(std::move(domain), std::move(images));
    }

    const WSpace& domain() const { return domain_; }
    const std::vector<RatVector>& images() const { return images_; }

    /// An m × (m·ell) matrix that agrees with φ on W (and vanishes on a complement).
    const RatMatrix& matrix_on_w() const { return matrix_; }

    RatVector apply(const TensorVW& w) const {
        const auto coeffs = domain_.coefficients(w);
        if (!coeffs) throw PreconditionError("apply_phi: tensor is not in W");
        RatVector out = zero_vector(static_cast<std::size_t>(domain_.params().m));
        for (std::size_t b = 0; b < images_.size(); ++b)
            if (sgn((*coeffs)[b]) != 0) add_scaled(out, images_[b], (*coeffs)[b]);
        return out;
    }

private:
    PhiMap() : domain_(WSpace::zero(ModelParams{})) {}

    static RatMatrix coordinate_matrix(const WSpace& w, const std::vector<RatVector>& images) {
        const std::size_t n = w.params().tensor_dim();
        const auto m = static_cast<std::size_t>(w.params().m);
        RatMatrix out(m, n);
        if (w.dim() == 0) return out;
        // Express each canonical basis vector of W in the user basis once.
        const RatMatrix cols = RatMatrix::from_columns(w.flat_basis(), n);
        std::vector<RatVector> coeffs;
        for (const auto& r : w.subspace().basis()) coeffs.push_back(*solve(cols, r));
        const Subspace none(n);
        for (std::size_t j = 0; j < m; ++j) {
            RatVector psi;
            for (const auto& c : coeffs) {
                Rational v(0);
                for (std::size_t b = 0; b < c.size(); ++b) v += c[b] * images[b][j];
                psi.push_back(v);
            }
            out.set_row(j, extend_functional(n, w.subspace(), none, psi));
        }
        return out;
    }

    WSpace domain_;
    std::vector<RatVector> images_;
    RatMatrix matrix_;
};

/// A linear map Φ : V ⊗ R^ell → R^m given by m functionals (rows of an m × (m·ell) matrix).
class ExtendedMap {
public:
    ExtendedMap(const ModelParams& params, RatMatrix matrix) : params_(params), matrix_(std::move(matrix)) {
        params_.validate();
        if (matrix_.rows() != static_cast<std::size_t>(params_.m) || matrix_.cols() != params_.tensor_dim())
            throw DimensionError("extended map must be m x (m*ell)");
    }

    const ModelParams& params() const { return params_; }
    const RatMatrix& matrix() const { return matrix_; }

    RatVector apply(const TensorVW& t) const { return matrix_.apply(t.flat()); }
    RatVector apply_flat(const RatVector& flat) const { return matrix_.apply(flat); }

    /// Row vector c with (Φ(D_j ⊗ a))_i = c · a. Digits 1-based.
    RatVector nasty_functional(int j, int i) const {
        const RatVector d = nasty_vector(j, params_);
        const auto ell = static_cast<std::size_t>(params_.ell);
        RatVector c = zero_vector(ell);
        for (std::size_t r = 0; r < d.size(); ++r)
            for (std::size_t k = 0; k < ell; ++k)
                c[k] += d[r] * matrix_(static_cast<std::size_t>(i - 1), r * ell + k);
        return c;
    }

    friend bool operator==(const ExtendedMap& a, const ExtendedMap& b) {
        return a.params_ == b.params_ && a.matrix_ == b.matrix_;
    }

private:
    ModelParams params_;
    RatMatrix matrix_;
};

inline RatVector apply_phi(const PhiMap& phi, const TensorVW& w) { return phi.apply(w); }

/// A_j = {a ∈ R^ell : D_j ⊗ a ∈ W}, by solving the membership system
/// D_j ⊗ a - Σ_b c_b B_b = 0 in the unknowns (a, c) and projecting onto a.
inline Subspace nasty_slice(int j, const WSpace& w) {
    const ModelParams& p = w.params();
    const RatVector d = nasty_vector(j, p);
    const auto ell = static_cast<std::size_t>(p.ell);
    const std::size_t n = p.tensor_dim();
    RatMatrix sys(n, ell + w.dim());
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t k = 0; k < ell; ++k) {
            sys(i * ell + k, k) = d[i];
            for (std::size_t b = 0; b < w.dim(); ++b) sys(i * ell + k, ell + b) = -w.flat_basis()[b][i * ell + k];
        }
    std::vector<RatVector> slice;
    const Subspace solutions = kernel(sys);
    for (const auto& sol : solutions.basis()) slice.emplace_back(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(ell));
    return Subspace::span(ell, slice);
}

}  // namespace wcmart
