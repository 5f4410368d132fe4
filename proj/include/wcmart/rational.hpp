#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace wcmart {

// mpq_class keeps values canonical (lowest terms, positive denominator)
// as long as every constructor path goes through canonicalize().
using Rational = mpq_class;
using RatVector = std::vector<Rational>;

namespace detail {

inline bool is_integer_literal(std::string_view s) {
    if (s.empty()) return false;
    std::size_t start = (s.front() == '-') ? 1 : 0;
    if (start == s.size()) return false;
    for (std::size_t i = start; i < s.size(); ++i)
        if (s[i] < '0' || s[i] > '9') return false;
    return true;
}

}  // namespace detail

/// Parses "p", "-p" or "p/q". Throws ValidationError on malformed input or q = 0.
inline Rational parse_rational(std::string_view text) {
    const auto slash = text.find('/');
    const std::string_view num = text.substr(0, slash);
    const std::string_view den = slash == std::string_view::npos ? std::string_view{"1"} : text.substr(slash + 1);
    if (!detail::is_integer_literal(num) || !detail::is_integer_literal(den) || den.front() == '-')
        throw ValidationError("malformed rational '" + std::string(text) + "'");
    mpz_class n(std::string(num), 10);
    mpz_class d(std::string(den), 10);
    if (d == 0) throw ValidationError("zero denominator in '" + std::string(text) + "'");
    Rational r(n, d);
    r.canonicalize();
    return r;
}

inline std::string to_string(const Rational& r) { return r.get_str(10); }

inline double to_double(const Rational& r) { return r.get_d(); }

inline Rational rational_power(const Rational& base, unsigned exponent) {
    Rational out(1);
    for (unsigned i = 0; i < exponent; ++i) out *= base;
    return out;
}

/// 1 / m^n
inline Rational inverse_power(int m, int n) {
    mpz_class p;
    mpz_ui_pow_ui(p.get_mpz_t(), static_cast<unsigned long>(m), static_cast<unsigned long>(n));
    Rational r(mpz_class(1), p);
    r.canonicalize();
    return r;
}

inline mpz_class integer_power(int m, int n) {
    mpz_class p;
    mpz_ui_pow_ui(p.get_mpz_t(), static_cast<unsigned long>(m), static_cast<unsigned long>(n));
    return p;
}

/// Square root of a nonnegative rational when it is itself rational.
inline std::optional<Rational> exact_sqrt(const Rational& r) {
    if (sgn(r) < 0) return std::nullopt;
    const mpz_class& n = r.get_num();
    const mpz_class& d = r.get_den();
    if (!mpz_perfect_square_p(n.get_mpz_t()) || !mpz_perfect_square_p(d.get_mpz_t())) return std::nullopt;
    mpz_class rn, rd;
    mpz_sqrt(rn.get_mpz_t(), n.get_mpz_t());
    mpz_sqrt(rd.get_mpz_t(), d.get_mpz_t());
    Rational out(rn, rd);
    out.canonicalize();
    return out;
}

inline Rational dot(const RatVector& a, const RatVector& b) {
    if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
    Rational s(0);
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline Rational squared_norm(const RatVector& a) { return dot(a, a); }

inline double euclidean_norm(const RatVector& a) { return std::sqrt(to_double(squared_norm(a))); }

inline bool is_zero(const RatVector& v) {
    for (const auto& x : v)
        if (sgn(x) != 0) return false;
    return true;
}

inline Rational sum(const RatVector& v) {
    Rational s(0);
    for (const auto& x : v) s += x;
    return s;
}

inline RatVector zero_vector(std::size_t n) { return RatVector(n, Rational(0)); }

inline RatVector unit_vector(std::size_t n, std::size_t i) {
    RatVector v = zero_vector(n);
    v.at(i) = 1;
    return v;
}

inline RatVector scaled(const RatVector& v, const Rational& c) {
    RatVector out(v);
    for (auto& x : out) x *= c;
    return out;
}

inline void add_scaled(RatVector& acc, const RatVector& v, const Rational& c) {
    if (acc.size() != v.size()) throw DimensionError("add_scaled: length mismatch");
    for (std::size_t i = 0; i < v.size(); ++i) acc[i] += c * v[i];
}

inline RatVector operator+(const RatVector& a, const RatVector& b) {
    if (a.size() != b.size()) throw DimensionError("vector add: length mismatch");
    RatVector out(a);
    for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i];
    return out;
}

inline RatVector operator-(const RatVector& a, const RatVector& b) {
    if (a.size() != b.size()) throw DimensionError("vector sub: length mismatch");
    RatVector out(a);
    for (std::size_t i = 0; i < b.size(); ++i) out[i] -= b[i];
    return out;
}

inline RatVector make_vector(std::initializer_list<long> values) {
    RatVector v;
    v.reserve(values.size());
    for (long x : values) v.emplace_back(x);
    return v;
}

}  // namespace wcmart
