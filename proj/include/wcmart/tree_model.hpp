#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "rational.hpp"
#include "tensor_space.hpp"

namespace wcmart {

namespace detail {

inline void check_digit(int d, int m) {
    if (d < 1 || d > m) throw ValidationError("digit " + std::to_string(d) + " outside [1.." + std::to_string(m) + "]");
}

constexpr std::string_view kDigitChars = "123456789abcdefghijklmnopqrstuvwxyz";

}  // namespace detail

/// m^n as an index bound; throws if the tree level does not fit in 62 bits.
inline std::uint64_t level_size(int m, int n) {
    std::uint64_t out = 1;
    for (int i = 0; i < n; ++i) {
        if (out > (std::uint64_t{1} << 62) / static_cast<std::uint64_t>(m))
            throw PreconditionError("tree level " + std::to_string(n) + " too large to index for m = " + std::to_string(m));
        out *= static_cast<std::uint64_t>(m);
    }
    return out;
}

/// A node of the m-adic atom tree, identified by its digit sequence.
/// The empty sequence is the root atom of generation 0.
class Atom {
public:
    Atom() = default;
    explicit Atom(std::vector<int> digits) : digits_(std::move(digits)) {}

    /// Lexicographic index among the m^n atoms of generation n.
    static Atom from_index(std::uint64_t index, int generation, int m) {
        std::vector<int> digits(static_cast<std::size_t>(generation));
        for (int i = generation - 1; i >= 0; --i) {
            digits[static_cast<std::size_t>(i)] = static_cast<int>(index % static_cast<std::uint64_t>(m)) + 1;
            index /= static_cast<std::uint64_t>(m);
        }
        return Atom(std::move(digits));
    }

    /// Parses a digit string such as "312"; digits beyond 9 use a..z.
    static Atom parse(std::string_view text, int m) {
        std::vector<int> digits;
        for (char ch : text) {
            const auto pos = detail::kDigitChars.find(ch);
            if (pos == std::string_view::npos) throw ValidationError("bad digit character in atom '" + std::string(text) + "'");
            digits.push_back(static_cast<int>(pos) + 1);
            detail::check_digit(digits.back(), m);
        }
        return Atom(std::move(digits));
    }

    int generation() const { return static_cast<int>(digits_.size()); }
    const std::vector<int>& digits() const { return digits_; }

    std::uint64_t index(int m) const {
        std::uint64_t idx = 0;
        for (int d : digits_) {
            detail::check_digit(d, m);
            idx = idx * static_cast<std::uint64_t>(m) + static_cast<std::uint64_t>(d - 1);
        }
        return idx;
    }

    Rational probability(int m) const { return inverse_power(m, generation()); }

    Atom child(int digit) const {
        std::vector<int> d(digits_);
        d.push_back(digit);
        return Atom(std::move(d));
    }

    Atom prefix(int n) const { return Atom(std::vector<int>(digits_.begin(), digits_.begin() + n)); }

    bool contains(const Atom& other) const {
        if (other.generation() < generation()) return false;
        for (std::size_t i = 0; i < digits_.size(); ++i)
            if (digits_[i] != other.digits_[i]) return false;
        return true;
    }

    std::string to_string() const {
        std::string s;
        for (int d : digits_) s.push_back(detail::kDigitChars.at(static_cast<std::size_t>(d - 1)));
        return s;
    }

    friend bool operator==(const Atom&, const Atom&) = default;
    friend auto operator<=>(const Atom&, const Atom&) = default;

private:
    std::vector<int> digits_;
};

/// Children in digit order 1..m; child i is the atom J_ω(i).
inline std::vector<Atom> children(const Atom& atom, int m) {
    std::vector<Atom> out;
    out.reserve(static_cast<std::size_t>(m));
    for (int i = 1; i <= m; ++i) out.push_back(atom.child(i));
    return out;
}

/// All m^n atoms of generation n, lexicographically.
inline std::vector<Atom> enumerate_atoms(int generation, int m) {
    const std::uint64_t count = level_size(m, generation);
    std::vector<Atom> out;
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) out.push_back(Atom::from_index(i, generation, m));
    return out;
}

/// An eventually constant point of 𝕋: the digits of prefix, then repeat forever.
struct TreePath {
    std::vector<int> prefix;
    int repeat = 1;

    static TreePath constant(int digit) { return TreePath{{}, digit}; }

    /// Digit at 0-based position i.
    int digit(std::size_t i) const { return i < prefix.size() ? prefix[i] : repeat; }

    /// The generation-n atom containing the path.
    Atom atom(int n) const {
        std::vector<int> d(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = digit(i);
        return Atom(std::move(d));
    }

    void validate(int m) const {
        for (int d : prefix) detail::check_digit(d, m);
        detail::check_digit(repeat, m);
    }
};

/// Number of leading common digits, or nullopt when the paths coincide.
inline std::optional<std::size_t> common_prefix_length(const TreePath& p1, const TreePath& p2) {
    // Beyond both prefixes each path is constant, so one more digit decides equality.
    const std::size_t horizon = std::max(p1.prefix.size(), p2.prefix.size()) + 1;
    for (std::size_t i = 0; i < horizon; ++i)
        if (p1.digit(i) != p2.digit(i)) return i;
    return std::nullopt;
}

/// dist = m^{-d}, d the number of leading common digits; 0 for equal paths.
inline Rational dist(const TreePath& p1, const TreePath& p2, int m) {
    p1.validate(m);
    p2.validate(m);
    const auto d = common_prefix_length(p1, p2);
    if (!d) return Rational(0);
    return inverse_power(m, static_cast<int>(*d));
}

/// J_ω applied to x ∈ R^m: child i of the atom receives x_i. Any x ∈ R^m is
/// accepted; the child mean vanishes exactly when x ∈ V.
inline std::vector<std::pair<Atom, Rational>> j_omega_apply(const Atom& atom, const RatVector& x,
                                                            const ModelParams& params) {
    if (x.size() != static_cast<std::size_t>(params.m)) throw DimensionError("j_omega_apply: need a vector in R^m");
    std::vector<std::pair<Atom, Rational>> out;
    for (int i = 1; i <= params.m; ++i) out.emplace_back(atom.child(i), x[static_cast<std::size_t>(i - 1)]);
    return out;
}

/// Vector-valued J_ω: child i receives row i of the tensor.
inline std::vector<std::pair<Atom, RatVector>> j_omega_apply(const Atom& atom, const TensorVW& t) {
    std::vector<std::pair<Atom, RatVector>> out;
    for (int i = 1; i <= t.params().m; ++i) out.emplace_back(atom.child(i), t.row(static_cast<std::size_t>(i - 1)));
    return out;
}

}  // namespace wcmart
