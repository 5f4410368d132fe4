#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wcmart/exact_linalg.hpp"
#include "wcmart/random.hpp"

using namespace wcmart;

namespace {

RatMatrix mat(std::initializer_list<std::initializer_list<long>> rows) {
    std::vector<RatVector> r;
    std::size_t cols = 0;
    for (auto row : rows) {
        r.push_back(make_vector(row));
        cols = row.size();
    }
    return RatMatrix::from_rows(r, cols);
}

oracle::Mat rows_of(const RatMatrix& a) {
    oracle::Mat out;
    for (std::size_t r = 0; r < a.rows(); ++r) out.push_back(a.row(r));
    return out;
}

RatMatrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, long bound = 3) {
    RatMatrix a(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) a(r, c) = random_rational(rng, bound, 2);
    return a;
}

Subspace random_subspace(Rng& rng, std::size_t n, std::size_t k) {
    std::vector<RatVector> vs;
    for (std::size_t i = 0; i < k; ++i) vs.push_back(random_vector(rng, n, 3));
    return Subspace::span(n, vs);
}

}  // namespace

TEST(Rref, IdentityIsFixed) { EXPECT_EQ(rref(RatMatrix::identity(2)), RatMatrix::identity(2)); }

TEST(Rref, RankOneMatrix) { EXPECT_EQ(rref(mat({{2, 4}, {1, 2}})), mat({{1, 2}, {0, 0}})); }

TEST(Rref, MatchesEliminationOracleOnRandomMatrices) {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const RatMatrix a = random_matrix(rng, 4, 6);
        const EchelonForm ef = echelon(a);
        const oracle::Mat ref = oracle::reduce(rows_of(a), 6);
        ASSERT_EQ(ef.rank(), ref.size());
        EXPECT_EQ(ef.pivots, oracle::pivots(ref));
        for (std::size_t r = 0; r < ef.rank(); ++r) EXPECT_EQ(ef.reduced.row(r), ref[r]);
        oracle::Mat mine;
        for (std::size_t r = 0; r < ef.rank(); ++r) mine.push_back(ef.reduced.row(r));
        EXPECT_TRUE(oracle::same_row_space(mine, rows_of(a), 6));
    }
}

TEST(Rref, Idempotent) {
    Rng rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        const RatMatrix a = random_matrix(rng, 5, 4);
        EXPECT_EQ(rref(rref(a)), rref(a));
    }
}

TEST(Rref, AllowsZeroRows) {
    const RatMatrix empty(0, 3);
    EXPECT_EQ(rank(empty), 0u);
    EXPECT_EQ(kernel(empty).dim(), 3u);
}

TEST(Kernel, IdentityHasTrivialKernel) { EXPECT_TRUE(kernel(RatMatrix::identity(3)).is_zero()); }

TEST(Kernel, ZeroMatrixHasFullKernel) { EXPECT_EQ(kernel(RatMatrix(2, 3)).dim(), 3u); }

TEST(Kernel, SumFunctional) {
    const RatMatrix a = mat({{1, 1, 1}});
    const Subspace k = kernel(a);
    EXPECT_EQ(k.dim(), 2u);
    for (const auto& v : k.basis()) EXPECT_TRUE(is_zero(a.apply(v)));
}

TEST(Kernel, DimensionAndMembershipOnRandomMatrices) {
    Rng rng(13);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t rows = static_cast<std::size_t>(uniform_int(rng, 1, 5));
        const RatMatrix a = random_matrix(rng, rows, 5, 1);
        const Subspace k = kernel(a);
        EXPECT_EQ(k.dim(), 5 - rank(a));
        for (const auto& v : k.basis()) EXPECT_TRUE(is_zero(a.apply(v)));
        EXPECT_EQ(k.dim(), oracle::null_space(rows_of(a), 5).size());
    }
}

TEST(Intersect, CoordinateAxesMeetAtZero) {
    const Subspace a = Subspace::span(2, {unit_vector(2, 0)});
    const Subspace b = Subspace::span(2, {unit_vector(2, 1)});
    EXPECT_TRUE(intersect(a, b).is_zero());
}

TEST(Intersect, Idempotent) {
    Rng rng(14);
    const Subspace x = random_subspace(rng, 4, 2);
    EXPECT_EQ(intersect(x, x), x);
}

TEST(Intersect, HandExampleAgainstGridOracle) {
    const Subspace a = Subspace::span(3, {make_vector({1, 1, 0}), make_vector({0, 0, 1})});
    const Subspace b = Subspace::span(3, {make_vector({1, 1, 0}), make_vector({1, 0, 0})});
    const Subspace c = intersect(a, b);
    EXPECT_EQ(c, Subspace::span(3, {make_vector({1, 1, 0})}));
    const oracle::Mat grid = oracle::grid_intersection(a.basis(), b.basis(), 3, 2);
    ASSERT_EQ(grid.size(), 1u);
    EXPECT_EQ(grid[0], c.basis()[0]);
}

TEST(Intersect, DimensionFormulaOnRandomPairs) {
    Rng rng(15);
    for (int trial = 0; trial < 40; ++trial) {
        const Subspace a = random_subspace(rng, 4, static_cast<std::size_t>(uniform_int(rng, 0, 3)));
        const Subspace b = random_subspace(rng, 4, static_cast<std::size_t>(uniform_int(rng, 0, 3)));
        const Subspace meet = intersect(a, b);
        EXPECT_EQ(subspace_sum(a, b).dim() + meet.dim(), a.dim() + b.dim());
        for (const auto& v : meet.basis()) {
            EXPECT_TRUE(a.contains(v));
            EXPECT_TRUE(b.contains(v));
        }
    }
}

TEST(Intersect, RejectsDimensionMismatch) {
    EXPECT_THROW(intersect(Subspace::full(2), Subspace::full(3)), DimensionError);
}

TEST(Intersect, MatchesGridOracleOnSmallSpaces) {
    // Both spans are built from a shared vector plus noise, so the meet is often nonzero.
    Rng rng(16);
    for (int trial = 0; trial < 15; ++trial) {
        const RatVector shared = random_vector(rng, 3, 2);
        const Subspace a = Subspace::span(3, {shared, random_vector(rng, 3, 2)});
        const Subspace b = Subspace::span(3, {shared, random_vector(rng, 3, 2)});
        const oracle::Mat grid = oracle::grid_intersection(a.basis(), b.basis(), 3, 2);
        EXPECT_EQ(intersect(a, b).dim(), grid.size());
    }
}

TEST(ExtendFunctional, ComplementaryAxes) {
    const Subspace e = Subspace::span(2, {unit_vector(2, 0)});
    const Subspace f = Subspace::span(2, {unit_vector(2, 1)});
    EXPECT_EQ(extend_functional(2, e, f, {Rational(1)}), make_vector({1, 0}));
}

TEST(ExtendFunctional, WholeSpaceWithZeroPsi) {
    const Subspace g = Subspace::full(3);
    EXPECT_EQ(extend_functional(3, g, g, RatVector(3, Rational(0))), zero_vector(3));
}

TEST(ExtendFunctional, RejectsPsiNotVanishingOnIntersection) {
    const Subspace g = Subspace::full(2);
    EXPECT_THROW(extend_functional(2, g, g, {Rational(1), Rational(0)}), ExtensionError);
}

TEST(ExtendFunctional, RandomFiveDimensionalContract) {
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        const Subspace e = random_subspace(rng, 5, 3);
        const Subspace f = random_subspace(rng, 5, 2);
        const Subspace common = intersect(e, f);
        // ψ = a random functional that kills E ∩ F, restricted to E's basis.
        std::vector<RatVector> constraints = common.basis();
        const Subspace allowed = kernel(RatMatrix::from_rows(constraints, 5));
        RatVector functional = zero_vector(5);
        for (const auto& v : allowed.basis()) add_scaled(functional, v, random_rational(rng, 3));
        RatVector psi;
        for (const auto& b : e.basis()) psi.push_back(dot(functional, b));
        const RatVector big = extend_functional(5, e, f, psi);
        for (std::size_t i = 0; i < e.dim(); ++i) EXPECT_EQ(dot(big, e.basis()[i]), psi[i]);
        for (const auto& b : f.basis()) EXPECT_EQ(sgn(dot(big, b)), 0);
    }
}

TEST(Subspace, CanonicalBasisIsBasisIndependent) {
    const Subspace a = Subspace::span(3, {make_vector({1, 2, 3}), make_vector({0, 1, 1})});
    const Subspace b = Subspace::span(3, {make_vector({1, 3, 4}), make_vector({2, 5, 7})});
    EXPECT_EQ(a, b);
}

TEST(Solve, ReportsInconsistency) {
    EXPECT_FALSE(solve(mat({{1, 1}, {1, 1}}), make_vector({1, 2})).has_value());
    const auto x = solve(mat({{1, 1}, {1, -1}}), make_vector({3, 1}));
    ASSERT_TRUE(x.has_value());
    EXPECT_EQ(*x, make_vector({2, 1}));
}

TEST(Rational, ParseAndPrint) {
    EXPECT_EQ(parse_rational("6/4"), Rational(3, 2));
    EXPECT_EQ(to_string(parse_rational("-6/4")), "-3/2");
    EXPECT_EQ(to_string(parse_rational("5")), "5");
    EXPECT_THROW(parse_rational("1/0"), ValidationError);
    EXPECT_THROW(parse_rational("x"), ValidationError);
    EXPECT_THROW(parse_rational("1/-2"), ValidationError);
}

TEST(Rational, ExactSquareRoot) {
    EXPECT_EQ(*exact_sqrt(Rational(9, 4)), Rational(3, 2));
    EXPECT_FALSE(exact_sqrt(Rational(2)).has_value());
}
