#pragma once

#include <optional>
#include <string>
#include <vector>

#include "exact_linalg.hpp"
#include "tensor_space.hpp"

namespace wcmart {

/// A nonzero a with D_j ⊗ a ∈ W.
struct NastyWitness {
    int j = 0;
    RatVector a;
};

struct CancellationVerdict {
    bool cancelling = true;
    std::optional<NastyWitness> witness;
};

/// D_j ⊗ a ∈ W with θ = (φ(D_j ⊗ a))_j ≠ 0.
struct WeakCancellationWitness {
    int j = 0;
    RatVector a;
    Rational theta;
};

struct WeakCancellationVerdict {
    bool weakly_cancelling = true;
    std::optional<WeakCancellationWitness> witness;
};

class WeakCancellationError : public PreconditionError {
public:
    explicit WeakCancellationError(WeakCancellationWitness w)
        : PreconditionError("weak cancellation fails at digit " + std::to_string(w.j) + " with theta = " +
                            to_string(w.theta)),
          witness_(std::move(w)) {}
    const WeakCancellationWitness& witness() const { return witness_; }

private:
    WeakCancellationWitness witness_;
};

/// True iff W contains no nonzero D_j ⊗ a. Scans j = 1..m and reports the
/// first basis vector of the first nontrivial slice.
inline CancellationVerdict is_cancelling(const WSpace& w) {
    for (int j = 1; j <= w.params().m; ++j) {
        const Subspace slice = nasty_slice(j, w);
        if (!slice.is_zero()) return {false, NastyWitness{j, slice.basis().front()}};
    }
    return {};
}

/// Checks (φ(D_j ⊗ a))_j = 0 for every j and every basis vector a of A_j.
/// The map a ↦ (φ(D_j ⊗ a))_j is linear, so the basis suffices.
inline WeakCancellationVerdict is_weakly_cancelling(const WSpace& w, const PhiMap& phi) {
    if (!(phi.domain().params() == w.params()) || !(phi.domain().subspace() == w.subspace()))
        throw PreconditionError("phi is not defined on this W");
    for (int j = 1; j <= w.params().m; ++j) {
        const RatVector d = nasty_vector(j, w.params());
        const Subspace slice = nasty_slice(j, w);
        for (const auto& a : slice.basis()) {
            const RatVector image = phi.apply(rank_one(d, a));
            const Rational& theta = image[static_cast<std::size_t>(j - 1)];
            if (sgn(theta) != 0) return {false, WeakCancellationWitness{j, a, theta}};
        }
    }
    return {};
}

/// Flattened D_j ⊗ e_k, k = 0..ell-1: a basis of the subspace 𝔇_j.
inline Subspace nasty_subspace(int j, const ModelParams& params) {
    const RatVector d = nasty_vector(j, params);
    std::vector<RatVector> vectors;
    for (int k = 0; k < params.ell; ++k)
        vectors.push_back(rank_one(d, unit_vector(static_cast<std::size_t>(params.ell), static_cast<std::size_t>(k))).flat());
    return Subspace::span(params.tensor_dim(), vectors);
}

/// Checks Φ|_W = φ and (Φ[D_j ⊗ e_k])_j = 0 for all j, k; returns a description
/// of the first failure or nullopt.
inline std::optional<std::string> extension_contract_violation(const ExtendedMap& ext, const WSpace& w,
                                                               const PhiMap& phi) {
    for (std::size_t b = 0; b < w.dim(); ++b)
        if (ext.apply(w.basis()[b]) != phi.images()[b])
            return "extension disagrees with phi on basis tensor " + std::to_string(b);
    for (int j = 1; j <= w.params().m; ++j)
        if (!is_zero(ext.nasty_functional(j, j)))
            return "coordinate " + std::to_string(j) + " of Phi does not vanish on D_" + std::to_string(j) + " (x) R^ell";
    return std::nullopt;
}

/// Builds Φ : V ⊗ R^ell → R^m extending φ, coordinate by coordinate: Φ_j
/// extends φ_j from W and vanishes on 𝔇_j. Requires weak cancellation, which
/// is exactly the statement that φ_j vanishes on W ∩ 𝔇_j.
inline ExtendedMap build_extension(const WSpace& w, const PhiMap& phi) {
    const WeakCancellationVerdict verdict = is_weakly_cancelling(w, phi);
    if (!verdict.weakly_cancelling) throw WeakCancellationError(*verdict.witness);

    const ModelParams& p = w.params();
    const std::size_t n = p.tensor_dim();
    RatMatrix matrix(static_cast<std::size_t>(p.m), n);
    const RatMatrix& on_w = phi.matrix_on_w();
    for (int j = 1; j <= p.m; ++j) {
        const RatVector phi_j = on_w.row(static_cast<std::size_t>(j - 1));
        RatVector psi;
        for (const auto& e : w.subspace().basis()) psi.push_back(dot(phi_j, e));
        matrix.set_row(static_cast<std::size_t>(j - 1), extend_functional(n, w.subspace(), nasty_subspace(j, p), psi));
    }
    ExtendedMap ext(p, std::move(matrix));
    if (auto bad = extension_contract_violation(ext, w, phi)) throw InvariantError("build_extension: " + *bad);
    return ext;
}

}  // namespace wcmart
