#pragma once

#include <optional>
#include <vector>

#include "cancellation.hpp"
#include "exact_linalg.hpp"
#include "fourier.hpp"
#include "random.hpp"
#include "tensor_space.hpp"

// Random problem generators shared by the sweep harness and the test suites.

namespace wcmart {

struct Instance {
    WSpace w;
    PhiMap phi;
    std::optional<GroupStructure> group;
};

struct InstanceOptions {
    int m_min = 2;
    int m_max = 5;
    int ell_min = 1;
    int ell_max = 3;
    double nasty_probability = 0.4;      // chance that a basis tensor is some D_j ⊗ a
    double compliant_probability = 0.5;  // chance that φ is cut from a weakly cancelling Φ
};

inline TensorVW random_tensor(Rng& rng, const ModelParams& p, long bound = 4) {
    RatVector flat = random_vector(rng, p.tensor_dim(), bound);
    const auto ell = static_cast<std::size_t>(p.ell);
    for (std::size_t k = 0; k < ell; ++k) {
        Rational s(0);
        for (std::size_t i = 0; i + 1 < static_cast<std::size_t>(p.m); ++i) s += flat[i * ell + k];
        flat[(static_cast<std::size_t>(p.m) - 1) * ell + k] = -s;
    }
    return TensorVW::from_flat(p, flat);
}

inline RatVector random_v_vector(Rng& rng, int m, long bound = 4) {
    RatVector v = random_vector(rng, static_cast<std::size_t>(m), bound);
    v.back() = 0;
    v.back() = -sum(v);
    return v;
}

inline RatVector random_nonzero_vector(Rng& rng, std::size_t n, long bound = 3) {
    for (;;) {
        RatVector a = random_vector(rng, n, bound);
        if (!is_zero(a)) return a;
    }
}

/// Replaces a basis by an upper-unitriangular recombination of it.
inline std::vector<TensorVW> mix_basis(Rng& rng, const std::vector<TensorVW>& basis) {
    if (basis.empty()) return basis;
    const ModelParams p = basis.front().params();
    std::vector<TensorVW> out;
    for (std::size_t i = 0; i < basis.size(); ++i) {
        RatVector flat = basis[i].flat();
        for (std::size_t k = i + 1; k < basis.size(); ++k) add_scaled(flat, basis[k].flat(), random_rational(rng, 2));
        out.push_back(TensorVW::from_flat(p, flat));
    }
    return out;
}

inline WSpace random_wspace(Rng& rng, const ModelParams& p, double nasty_probability) {
    const long max_dim = static_cast<long>((p.m - 1) * p.ell);
    const auto target = static_cast<std::size_t>(uniform_int(rng, 0, max_dim));
    std::vector<TensorVW> basis;
    std::vector<RatVector> flats;
    for (int attempt = 0; basis.size() < target && attempt < 50; ++attempt) {
        TensorVW t = coin(rng, nasty_probability)
                         ? rank_one(nasty_vector(static_cast<int>(uniform_int(rng, 1, p.m)), p),
                                    random_nonzero_vector(rng, static_cast<std::size_t>(p.ell)))
                         : random_tensor(rng, p);
        flats.push_back(t.flat());
        if (Subspace::span(p.tensor_dim(), flats).dim() == flats.size())
            basis.push_back(std::move(t));
        else
            flats.pop_back();
    }
    return WSpace::from_basis(p, mix_basis(rng, basis));
}

/// A random Φ : V ⊗ R^ell → R^m that maps V ⊗ R^ell into V and satisfies
/// (Φ[D_j ⊗ a])_j = 0 for all j and a. Drawn from the kernel of those
/// linear constraints on the matrix entries.
inline ExtendedMap random_compliant_extension(Rng& rng, const ModelParams& p) {
    const auto m = static_cast<std::size_t>(p.m);
    const std::size_t n = p.tensor_dim();
    const std::size_t unknowns = m * n;  // entry (j, c) at j * n + c
    std::vector<RatVector> rows;
    for (int j = 1; j <= p.m; ++j)
        for (int k = 0; k < p.ell; ++k) {
            const RatVector t = rank_one(nasty_vector(j, p), unit_vector(static_cast<std::size_t>(p.ell), static_cast<std::size_t>(k))).flat();
            RatVector row = zero_vector(unknowns);
            for (std::size_t c = 0; c < n; ++c) row[static_cast<std::size_t>(j - 1) * n + c] = t[c];
            rows.push_back(std::move(row));
        }
    const WSpace full = WSpace::full(p);
    for (const auto& t : full.flat_basis()) {
        RatVector row = zero_vector(unknowns);
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t c = 0; c < n; ++c) row[j * n + c] = t[c];
        rows.push_back(std::move(row));
    }
    const Subspace solutions = kernel(RatMatrix::from_rows(rows, unknowns));
    RatVector entries = zero_vector(unknowns);
    for (const auto& s : solutions.basis()) add_scaled(entries, s, random_rational(rng, 3));
    RatMatrix matrix(m, n);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t c = 0; c < n; ++c) matrix(j, c) = entries[j * n + c];
    return ExtendedMap(p, std::move(matrix));
}

inline PhiMap restrict_to(const ExtendedMap& ext, const WSpace& w) {
    std::vector<RatVector> images;
    for (const auto& b : w.basis()) images.push_back(ext.apply(b));
    return PhiMap::create(w, std::move(images));
}

inline PhiMap random_phi(Rng& rng, const WSpace& w, bool compliant) {
    if (compliant) return restrict_to(random_compliant_extension(rng, w.params()), w);
    std::vector<RatVector> images;
    for (std::size_t b = 0; b < w.dim(); ++b) images.push_back(random_v_vector(rng, w.params().m));
    return PhiMap::create(w, std::move(images));
}

inline Instance random_instance(Rng& rng, const InstanceOptions& opt = {}) {
    const ModelParams p{static_cast<int>(uniform_int(rng, opt.m_min, opt.m_max)),
                        static_cast<int>(uniform_int(rng, opt.ell_min, opt.ell_max))};
    WSpace w = random_wspace(rng, p, opt.nasty_probability);
    const bool compliant = coin(rng, opt.compliant_probability);
    PhiMap phi = random_phi(rng, w, compliant);
    return Instance{std::move(w), std::move(phi), std::nullopt};
}

/// A weakly cancelling instance: φ is the restriction of a compliant Φ.
inline Instance random_weakly_cancelling_instance(Rng& rng, const InstanceOptions& opt = {}) {
    InstanceOptions o = opt;
    o.compliant_probability = 1.0;
    return random_instance(rng, o);
}

/// Adds delta to entry (j, (j, k)) of Φ, so (Φ[D_j ⊗ e_k])_j grows by (m - 1)·delta.
inline ExtendedMap plant_violation(const ExtendedMap& ext, int j, int k, const Rational& delta) {
    RatMatrix matrix = ext.matrix();
    const auto ell = static_cast<std::size_t>(ext.params().ell);
    matrix(static_cast<std::size_t>(j - 1), static_cast<std::size_t>(j - 1) * ell + static_cast<std::size_t>(k)) += delta;
    return ExtendedMap(ext.params(), std::move(matrix));
}

/// Translation-invariant instance over g: W is spanned by all translates of a
/// few generators and φ is the restriction of a convolution
/// Ψ(w)(x) = Σ_y K(x - y)·w(y). With a compliant kernel, (m-1)K(0) = Σ_{y≠0} K(y),
/// Ψ vanishes in coordinate j on every D_j ⊗ a.
inline Instance random_invariant_instance(Rng& rng, const GroupStructure& g, int ell, double compliant_probability = 0.5,
                                          double nasty_probability = 0.4) {
    const ModelParams p{g.order(), ell};
    const auto m = static_cast<std::size_t>(p.m);
    const auto el = static_cast<std::size_t>(ell);
    const auto generators = static_cast<int>(uniform_int(rng, 0, 2));
    std::vector<RatVector> span_vectors;
    for (int i = 0; i < generators; ++i) {
        const TensorVW gen = coin(rng, nasty_probability)
                                 ? rank_one(nasty_vector(1, p), random_nonzero_vector(rng, el))
                                 : random_tensor(rng, p, 3);
        for (int gd = 1; gd <= g.order(); ++gd) span_vectors.push_back(translate(gen, g, gd).flat());
    }
    std::vector<TensorVW> basis;
    const Subspace orbit_span = Subspace::span(p.tensor_dim(), span_vectors);
    for (const auto& v : orbit_span.basis()) basis.push_back(TensorVW::from_flat(p, v));
    WSpace w = WSpace::from_basis(p, mix_basis(rng, basis));

    std::vector<RatVector> kernel_values(m);
    for (std::size_t y = 0; y < m; ++y) kernel_values[y] = random_vector(rng, el, 3);
    if (coin(rng, compliant_probability)) {
        RatVector rest = zero_vector(el);
        for (std::size_t y = 1; y < m; ++y) rest = rest + kernel_values[y];
        kernel_values[0] = scaled(rest, Rational(mpz_class(1), mpz_class(p.m - 1)));
    }
    std::vector<RatVector> images;
    for (const auto& b : w.basis()) {
        RatVector image = zero_vector(m);
        for (int x = 1; x <= p.m; ++x)
            for (int y = 1; y <= p.m; ++y) {
                const RatVector& kv = kernel_values[static_cast<std::size_t>(g.subtract(x, y) - 1)];
                for (std::size_t k = 0; k < el; ++k) image[static_cast<std::size_t>(x - 1)] += kv[k] * b(static_cast<std::size_t>(y - 1), k);
            }
        images.push_back(std::move(image));
    }
    PhiMap phi = PhiMap::create(w, std::move(images));
    return Instance{std::move(w), std::move(phi), g};
}

}  // namespace wcmart
