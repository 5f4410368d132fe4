#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "rational.hpp"

namespace wcmart {

/// Dense row-major matrix of exact rationals.
///
/// A matrix with zero rows is allowed; it shows up naturally as the basis
/// matrix of the zero subspace.
class RatMatrix {
public:
    RatMatrix() = default;
    RatMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, Rational(0)) {}

    static RatMatrix identity(std::size_t n) {
        RatMatrix out(n, n);
        for (std::size_t i = 0; i < n; ++i) out(i, i) = 1;
        return out;
    }

    static RatMatrix from_rows(const std::vector<RatVector>& rows, std::size_t cols) {
        RatMatrix out(rows.size(), cols);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != cols) throw DimensionError("from_rows: ragged row " + std::to_string(r));
            for (std::size_t c = 0; c < cols; ++c) out(r, c) = rows[r][c];
        }
        return out;
    }

    static RatMatrix from_columns(const std::vector<RatVector>& columns, std::size_t rows) {
        RatMatrix out(rows, columns.size());
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (columns[c].size() != rows) throw DimensionError("from_columns: ragged column " + std::to_string(c));
            for (std::size_t r = 0; r < rows; ++r) out(r, c) = columns[c][r];
        }
        return out;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    Rational& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const Rational& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    RatVector row(std::size_t r) const {
        return RatVector(data_.begin() + static_cast<std::ptrdiff_t>(r * cols_),
                         data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols_));
    }

    RatVector column(std::size_t c) const {
        RatVector out(rows_);
        for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
        return out;
    }

    void set_row(std::size_t r, const RatVector& v) {
        if (v.size() != cols_) throw DimensionError("set_row: length mismatch");
        for (std::size_t c = 0; c < cols_; ++c) (*this)(r, c) = v[c];
    }

    RatVector apply(const RatVector& x) const {
        if (x.size() != cols_) throw DimensionError("apply: vector length " + std::to_string(x.size()) +
                                                    " vs " + std::to_string(cols_) + " columns");
        RatVector y(rows_, Rational(0));
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c)
                if (sgn(x[c]) != 0) y[r] += (*this)(r, c) * x[c];
        return y;
    }

    RatMatrix transpose() const {
        RatMatrix out(cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
        return out;
    }

    RatMatrix operator*(const RatMatrix& rhs) const {
        if (cols_ != rhs.rows_) throw DimensionError("matrix product: inner dimension mismatch");
        RatMatrix out(rows_, rhs.cols_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t k = 0; k < cols_; ++k) {
                if (sgn((*this)(i, k)) == 0) continue;
                for (std::size_t j = 0; j < rhs.cols_; ++j) out(i, j) += (*this)(i, k) * rhs(k, j);
            }
        return out;
    }

    friend bool operator==(const RatMatrix& a, const RatMatrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Rational> data_;
};

struct EchelonForm {
    RatMatrix reduced;
    std::vector<std::size_t> pivots;  // pivot column of row i, for i < rank
    std::size_t rank() const { return pivots.size(); }
};

/// Gauss-Jordan elimination to the unique reduced row echelon form.
inline EchelonForm echelon(RatMatrix a) {
    EchelonForm out;
    std::size_t lead_row = 0;
    for (std::size_t col = 0; col < a.cols() && lead_row < a.rows(); ++col) {
        std::size_t pivot = lead_row;
        while (pivot < a.rows() && sgn(a(pivot, col)) == 0) ++pivot;
        if (pivot == a.rows()) continue;
        if (pivot != lead_row)
            for (std::size_t c = 0; c < a.cols(); ++c) std::swap(a(pivot, c), a(lead_row, c));
        const Rational inv = 1 / a(lead_row, col);
        for (std::size_t c = col; c < a.cols(); ++c) a(lead_row, c) *= inv;
        for (std::size_t r = 0; r < a.rows(); ++r) {
            if (r == lead_row || sgn(a(r, col)) == 0) continue;
            const Rational factor = a(r, col);
            for (std::size_t c = col; c < a.cols(); ++c) a(r, c) -= factor * a(lead_row, c);
        }
        out.pivots.push_back(col);
        ++lead_row;
    }
    out.reduced = std::move(a);
    return out;
}

inline RatMatrix rref(const RatMatrix& a) { return echelon(a).reduced; }

inline std::size_t rank(const RatMatrix& a) { return echelon(a).rank(); }

/// Some solution of a x = b (free variables set to zero), or nullopt if inconsistent.
inline std::optional<RatVector> solve(const RatMatrix& a, const RatVector& b) {
    if (b.size() != a.rows()) throw DimensionError("solve: rhs length mismatch");
    RatMatrix aug(a.rows(), a.cols() + 1);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) aug(r, c) = a(r, c);
        aug(r, a.cols()) = b[r];
    }
    const EchelonForm ef = echelon(std::move(aug));
    if (!ef.pivots.empty() && ef.pivots.back() == a.cols()) return std::nullopt;
    RatVector x(a.cols(), Rational(0));
    for (std::size_t i = 0; i < ef.rank(); ++i) x[ef.pivots[i]] = ef.reduced(i, a.cols());
    return x;
}

/// A linear subspace of Q^n stored by its canonical RREF basis.
class Subspace {
public:
    explicit Subspace(std::size_t ambient_dim = 0) : ambient_(ambient_dim) {}

    static Subspace span(std::size_t ambient_dim, const std::vector<RatVector>& vectors) {
        const EchelonForm ef = echelon(RatMatrix::from_rows(vectors, ambient_dim));
        Subspace s(ambient_dim);
        s.pivots_ = ef.pivots;
        s.basis_.reserve(ef.rank());
        for (std::size_t i = 0; i < ef.rank(); ++i) s.basis_.push_back(ef.reduced.row(i));
        return s;
    }

    static Subspace full(std::size_t n) {
        std::vector<RatVector> rows;
        for (std::size_t i = 0; i < n; ++i) rows.push_back(unit_vector(n, i));
        return span(n, rows);
    }

    std::size_t ambient_dim() const { return ambient_; }
    std::size_t dim() const { return basis_.size(); }
    bool is_zero() const { return basis_.empty(); }
    const std::vector<RatVector>& basis() const { return basis_; }
    const std::vector<std::size_t>& pivots() const { return pivots_; }

    RatMatrix basis_matrix() const { return RatMatrix::from_rows(basis_, ambient_); }

    /// Coordinates with respect to basis(); nullopt when v is not in the subspace.
    std::optional<RatVector> coordinates(const RatVector& v) const {
        if (v.size() != ambient_) throw DimensionError("coordinates: ambient dimension mismatch");
        RatVector coeffs(basis_.size());
        RatVector residual(v);
        for (std::size_t i = 0; i < basis_.size(); ++i) {
            coeffs[i] = residual[pivots_[i]];
            if (sgn(coeffs[i]) != 0) add_scaled(residual, basis_[i], -coeffs[i]);
        }
        if (!wcmart::is_zero(residual)) return std::nullopt;
        return coeffs;
    }

    bool contains(const RatVector& v) const { return coordinates(v).has_value(); }

    bool contains(const Subspace& other) const {
        if (other.ambient_ != ambient_) throw DimensionError("contains: ambient dimension mismatch");
        return std::all_of(other.basis_.begin(), other.basis_.end(),
                           [this](const RatVector& v) { return contains(v); });
    }

    friend bool operator==(const Subspace& a, const Subspace& b) {
        return a.ambient_ == b.ambient_ && a.basis_ == b.basis_;
    }

private:
    std::size_t ambient_ = 0;
    std::vector<RatVector> basis_;
    std::vector<std::size_t> pivots_;
};

/// {x : a x = 0}
inline Subspace kernel(const RatMatrix& a) {
    const EchelonForm ef = echelon(a);
    std::vector<bool> is_pivot(a.cols(), false);
    for (auto p : ef.pivots) is_pivot[p] = true;
    std::vector<RatVector> vectors;
    for (std::size_t free = 0; free < a.cols(); ++free) {
        if (is_pivot[free]) continue;
        RatVector x = zero_vector(a.cols());
        x[free] = 1;
        for (std::size_t i = 0; i < ef.rank(); ++i) x[ef.pivots[i]] = -ef.reduced(i, free);
        vectors.push_back(std::move(x));
    }
    return Subspace::span(a.cols(), vectors);
}

inline Subspace subspace_sum(const Subspace& a, const Subspace& b) {
    if (a.ambient_dim() != b.ambient_dim()) throw DimensionError("sum: ambient dimension mismatch");
    std::vector<RatVector> all = a.basis();
    all.insert(all.end(), b.basis().begin(), b.basis().end());
    return Subspace::span(a.ambient_dim(), all);
}

/// a ∩ b, from the kernel of [A^T | -B^T].
inline Subspace intersect(const Subspace& a, const Subspace& b) {
    if (a.ambient_dim() != b.ambient_dim())
        throw DimensionError("intersect: ambient dimensions " + std::to_string(a.ambient_dim()) + " and " +
                             std::to_string(b.ambient_dim()));
    const std::size_t n = a.ambient_dim();
    if (a.is_zero() || b.is_zero()) return Subspace(n);
    RatMatrix sys(n, a.dim() + b.dim());
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t r = 0; r < n; ++r) sys(r, i) = a.basis()[i][r];
    for (std::size_t j = 0; j < b.dim(); ++j)
        for (std::size_t r = 0; r < n; ++r) sys(r, a.dim() + j) = -b.basis()[j][r];
    std::vector<RatVector> out;
    const Subspace solutions = kernel(sys);
    for (const auto& k : solutions.basis()) {
        RatVector v = zero_vector(n);
        for (std::size_t i = 0; i < a.dim(); ++i)
            if (sgn(k[i]) != 0) add_scaled(v, a.basis()[i], k[i]);
        out.push_back(std::move(v));
    }
    return Subspace::span(n, out);
}

/// Functionals vanishing on s, as a subspace of the dual (identified with Q^n).
inline Subspace annihilator(const Subspace& s) {
    if (s.is_zero()) return Subspace::full(s.ambient_dim());
    return kernel(s.basis_matrix());
}

/// Raised when the functional to extend does not vanish on E ∩ F.
class ExtensionError : public PreconditionError {
public:
    ExtensionError(const std::string& what, RatVector offending, Rational value)
        : PreconditionError(what), offending_(std::move(offending)), value_(std::move(value)) {}
    const RatVector& offending_vector() const { return offending_; }
    const Rational& value() const { return value_; }

private:
    RatVector offending_;
    Rational value_;
};

/// Extends ψ, given on the basis of E, to a functional Ψ on Q^n with Ψ|_E = ψ
/// and Ψ|_F = 0.
///
/// Exists iff ψ vanishes on E ∩ F. The values on a complement of E + F are
/// set to zero; the complement is spanned by the unit vectors of the non-pivot
/// columns of E + F. The result is the unique solution of one square-rank
/// linear system.
inline RatVector extend_functional(std::size_t ambient_dim, const Subspace& e_space, const Subspace& f_space,
                                   const RatVector& psi_on_e_basis) {
    if (e_space.ambient_dim() != ambient_dim || f_space.ambient_dim() != ambient_dim)
        throw DimensionError("extend_functional: ambient dimension mismatch");
    if (psi_on_e_basis.size() != e_space.dim())
        throw DimensionError("extend_functional: need one value per basis vector of E");

    const Subspace common = intersect(e_space, f_space);
    for (const auto& v : common.basis()) {
        const RatVector coords = *e_space.coordinates(v);
        const Rational value = dot(coords, psi_on_e_basis);
        if (sgn(value) != 0)
            throw ExtensionError("functional does not vanish on the intersection E ∩ F", v, value);
    }

    std::vector<RatVector> rows;
    RatVector rhs;
    for (std::size_t i = 0; i < e_space.dim(); ++i) {
        rows.push_back(e_space.basis()[i]);
        rhs.push_back(psi_on_e_basis[i]);
    }
    for (const auto& f : f_space.basis()) {
        rows.push_back(f);
        rhs.emplace_back(0);
    }
    const Subspace both = subspace_sum(e_space, f_space);
    std::vector<bool> is_pivot(ambient_dim, false);
    for (auto p : both.pivots()) is_pivot[p] = true;
    for (std::size_t c = 0; c < ambient_dim; ++c) {
        if (is_pivot[c]) continue;
        rows.push_back(unit_vector(ambient_dim, c));
        rhs.emplace_back(0);
    }
    auto psi = solve(RatMatrix::from_rows(rows, ambient_dim), rhs);
    if (!psi) throw InvariantError("extend_functional: consistent system reported inconsistent");
    return *psi;
}

}  // namespace wcmart
