#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "wcmart/cancellation.hpp"
#include "wcmart/instances.hpp"
#include "wcmart/martingale.hpp"
#include "wcmart/witnesses.hpp"

using namespace wcmart;

namespace {

FiniteMartingale random_martingale(Rng& rng, const ModelParams& p, int depth, long den = 3) {
    FiniteMartingale f(p, depth);
    for (std::uint64_t x = 0; x < f.leaf_count(); ++x) f.set_leaf(x, random_vector(rng, static_cast<std::size_t>(p.ell), 5, den));
    return f;
}

std::vector<oracle::Vec> dense_leaves(const FiniteMartingale& f) {
    std::vector<oracle::Vec> out;
    for (std::uint64_t x = 0; x < f.leaf_count(); ++x) out.push_back(f.leaf(x));
    return out;
}

oracle::Mat rows_of(const RatMatrix& a) {
    oracle::Mat out;
    for (std::size_t r = 0; r < a.rows(); ++r) out.push_back(a.row(r));
    return out;
}

}  // namespace

TEST(Martingale, LevelsAverageChildren) {
    Rng rng(51);
    const ModelParams p{3, 2};
    const FiniteMartingale f = random_martingale(rng, p, 4);
    const auto levels = f.levels();
    for (int n = 0; n < 4; ++n)
        for (std::uint64_t w = 0; w < level_size(3, n); ++w) {
            RatVector avg = zero_vector(2);
            for (std::uint64_t i = 0; i < 3; ++i)
                if (const auto* c = levels[static_cast<std::size_t>(n) + 1].find(w * 3 + i)) add_scaled(avg, *c, Rational(1, 3));
            const auto* parent = levels[static_cast<std::size_t>(n)].find(w);
            EXPECT_EQ(avg, parent ? *parent : zero_vector(2));
        }
}

TEST(Difference, ConstantMartingaleHasNoIncrements) {
    const ModelParams p{2, 3};
    FiniteMartingale f(p, 5);
    for (std::uint64_t x = 0; x < f.leaf_count(); ++x) f.set_leaf(x, make_vector({1, -2, 3}));
    EXPECT_EQ(difference(f, 0).values.at(0), make_vector({1, -2, 3}));
    for (int n = 1; n <= 5; ++n) EXPECT_TRUE(difference(f, n).values.empty());
}

TEST(Difference, NecessityClosedForm) {
    const ModelParams p{3, 2};
    const RatVector a = make_vector({1, -2});
    const int j = 2;
    const FiniteMartingale f = necessity_martingale(j, a, 5, p);
    const auto diffs = differences(f);
    for (int n = 0; n < 5; ++n) {
        const Atom omega = TreePath::constant(j).atom(n);
        const auto expected = j_omega_apply(omega, rank_one(nasty_vector(j, p), scaled(a, Rational(integer_power(3, n)))));
        const auto& d = diffs[static_cast<std::size_t>(n) + 1];
        EXPECT_EQ(d.values.size(), 3u);
        for (const auto& [child, v] : expected) EXPECT_EQ(d.values.at(child.index(3)), v);
    }
}

TEST(Difference, ChildrenSumToZero) {
    Rng rng(52);
    const ModelParams p{4, 2};
    const FiniteMartingale f = random_martingale(rng, p, 3);
    const auto diffs = differences(f);
    for (int n = 1; n <= 3; ++n)
        for (std::uint64_t w = 0; w < level_size(4, n - 1); ++w) {
            RatVector s = zero_vector(2);
            for (std::uint64_t i = 0; i < 4; ++i)
                if (const auto* c = diffs[static_cast<std::size_t>(n)].find(w * 4 + i)) s = s + *c;
            EXPECT_TRUE(is_zero(s));
        }
    EXPECT_THROW(difference(f, 4), PreconditionError);
}

TEST(ValidateSobolev, ZeroMartingale) {
    EXPECT_TRUE(validate_sobolev(FiniteMartingale({3, 1}, 3), WSpace::zero({3, 1})).member);
}

TEST(ValidateSobolev, ReportsOffendingAtom) {
    const ModelParams p{3, 1};
    const WSpace w = WSpace::from_basis(p, {rank_one(nasty_vector(1, p), make_vector({1}))});
    FiniteMartingale f(p, 2);
    f.set_leaf(Atom::parse("21", 3).index(3), make_vector({1}));
    f.set_leaf(Atom::parse("22", 3).index(3), make_vector({-1}));
    const auto v = validate_sobolev(f, w);
    EXPECT_FALSE(v.member);
    ASSERT_TRUE(v.atom.has_value());
    EXPECT_EQ(v.atom->to_string(), "2");
}

TEST(RandomSobolev, ZeroSpaceGivesConstant) {
    const FiniteMartingale f = random_sobolev(WSpace::zero({3, 2}), 3, 5);
    for (int n = 1; n <= 3; ++n) EXPECT_TRUE(difference(f, n).values.empty());
}

TEST(RandomSobolev, DeterministicAndValid) {
    Rng rng(53);
    for (int trial = 0; trial < 30; ++trial) {
        const ModelParams p{static_cast<int>(uniform_int(rng, 2, 4)), static_cast<int>(uniform_int(rng, 1, 3))};
        const WSpace w = random_wspace(rng, p, 0.4);
        const FiniteMartingale a = random_sobolev(w, 3, 1000 + static_cast<std::uint64_t>(trial));
        const FiniteMartingale b = random_sobolev(w, 3, 1000 + static_cast<std::uint64_t>(trial));
        EXPECT_TRUE(a == b);
        EXPECT_TRUE(validate_sobolev(a, w).member);
    }
}

TEST(LpNorm, ConstantLevel) {
    const ModelParams p{3, 2};
    FiniteMartingale f(p, 2);
    for (std::uint64_t x = 0; x < 9; ++x) f.set_leaf(x, make_vector({3, 4}));
    const auto levels = f.levels();
    for (double q : {1.0, 1.5, 2.0, 7.0, kInfinity})
        for (const auto& l : levels) EXPECT_NEAR(lp_norm(l, 3, q), 5.0, 1e-12);
}

TEST(LpNorm, IndicatorMassCancellation) {
    const ModelParams p{3, 2};
    FiniteMartingale f(p, 4);
    f.set_leaf(17, make_vector({3 * 81, 4 * 81}));
    EXPECT_DOUBLE_EQ(sobolev_norm(f), 5.0);
}

TEST(LpNorm, MatchesSummationOracle) {
    Rng rng(54);
    for (int trial = 0; trial < 20; ++trial) {
        const ModelParams p{static_cast<int>(uniform_int(rng, 2, 4)), static_cast<int>(uniform_int(rng, 1, 3))};
        const int depth = static_cast<int>(uniform_int(rng, 1, 4));
        const FiniteMartingale f = random_martingale(rng, p, depth);
        std::vector<std::vector<double>> values;
        for (std::uint64_t x = 0; x < f.leaf_count(); ++x) {
            std::vector<double> v;
            for (const auto& c : f.leaf(x)) v.push_back(c.get_d());
            values.push_back(v);
        }
        const double mass = 1.0 / static_cast<double>(f.leaf_count());
        LevelData top;
        top.level = depth;
        top.values = f.leaves();
        for (double q : {2.0, 3.0, kInfinity}) {
            const double ref = oracle::lp(values, mass, q);
            EXPECT_NEAR(lp_norm(top, p.m, q), ref, 1e-12 * std::max(1.0, ref));
        }
    }
}

TEST(LpNorm, NondecreasingInExponent) {
    Rng rng(55);
    const FiniteMartingale f = random_martingale(rng, {3, 2}, 3);
    LevelData top;
    top.level = 3;
    top.values = f.leaves();
    double previous = 0.0;
    for (double q : {1.0, 1.25, 2.0, 3.0, 8.0, kInfinity}) {
        const double v = lp_norm(top, 3, q);
        EXPECT_GE(v, previous - 1e-12);
        previous = v;
    }
    EXPECT_THROW(lp_norm(top, 3, 0.5), PreconditionError);
}

TEST(Riesz, AlphaZeroIsIdentity) {
    Rng rng(56);
    const FiniteMartingale f = random_martingale(rng, {3, 2}, 3);
    EXPECT_TRUE(riesz_potential(f, Rational(0)) == f);
}

TEST(Riesz, ZeroMartingale) {
    const FiniteMartingale zero({4, 2}, 3);
    EXPECT_TRUE(riesz_potential(zero, Rational(1, 2)) == zero);
}

TEST(Riesz, TelescopingExactWhenRational) {
    Rng rng(57);
    const FiniteMartingale f = random_martingale(rng, {4, 2}, 3);
    const auto df = differences(f);
    const auto di = differences(riesz_potential(f, Rational(1, 2)));
    for (int n = 0; n <= 3; ++n) {
        ASSERT_EQ(di[static_cast<std::size_t>(n)].values.size(), df[static_cast<std::size_t>(n)].values.size());
        for (const auto& [idx, v] : df[static_cast<std::size_t>(n)].values)
            EXPECT_EQ(di[static_cast<std::size_t>(n)].values.at(idx), scaled(v, inverse_power(2, n)));
    }
}

TEST(Riesz, IrrationalFactorUsesFloatPath) {
    Rng rng(58);
    const FiniteMartingale f = random_martingale(rng, {3, 1}, 3);
    EXPECT_THROW(riesz_potential(f, Rational(1, 2)), PreconditionError);
    const FloatMartingale g = riesz_potential_approx(f, 0.5);
    // Telescoping on the float path: level averages of g minus the parent level.
    const auto lf = f.levels();
    const auto lg = g.levels();
    for (int n = 1; n <= 3; ++n)
        for (std::uint64_t x = 0; x < level_size(3, n); ++x) {
            const auto* fc = lf[static_cast<std::size_t>(n)].find(x);
            const auto* fp = lf[static_cast<std::size_t>(n) - 1].find(x / 3);
            const auto* gc = lg[static_cast<std::size_t>(n)].find(x);
            const auto* gp = lg[static_cast<std::size_t>(n) - 1].find(x / 3);
            const double df = (fc ? (*fc)[0].get_d() : 0.0) - (fp ? (*fp)[0].get_d() : 0.0);
            const double dg = (gc ? (*gc)[0] : 0.0) - (gp ? (*gp)[0] : 0.0);
            EXPECT_NEAR(dg, std::pow(3.0, -0.5 * n) * df, 1e-12);
        }
}

TEST(LevelFactor, RationalCases) {
    EXPECT_EQ(*level_factor(4, Rational(1, 2)), Rational(1, 2));
    EXPECT_EQ(*level_factor(8, Rational(2, 3)), Rational(1, 4));
    EXPECT_FALSE(level_factor(2, Rational(1, 2)).has_value());
}

TEST(Transform, ZeroMartingale) {
    const ExtendedMap ext(ModelParams{3, 1}, RatMatrix(3, 3));
    EXPECT_TRUE(transform(FiniteMartingale({3, 1}, 4), ext).is_zero());
}

TEST(Transform, MatchesDenseDefinition) {
    Rng rng(59);
    for (int trial = 0; trial < 20; ++trial) {
        const ModelParams p{static_cast<int>(uniform_int(rng, 2, 4)), static_cast<int>(uniform_int(rng, 1, 2))};
        const int depth = static_cast<int>(uniform_int(rng, 1, 3));
        RatMatrix map(static_cast<std::size_t>(p.m), p.tensor_dim());
        for (std::size_t r = 0; r < map.rows(); ++r)
            for (std::size_t c = 0; c < map.cols(); ++c) map(r, c) = random_rational(rng, 3);
        const ExtendedMap ext(p, map);
        const FiniteMartingale f = random_martingale(rng, p, depth);
        const auto dense = oracle::dense_transform(dense_leaves(f), rows_of(map), p.m, p.ell, depth);
        EXPECT_EQ(transform(f, ext).to_dense(), dense);
    }
}

TEST(Transform, HomogeneousAndLinear) {
    Rng rng(60);
    const Instance in = random_weakly_cancelling_instance(rng);
    const ExtendedMap ext = build_extension(in.w, in.phi);
    const FiniteMartingale f = random_martingale(rng, in.w.params(), 3);
    const FiniteMartingale g = random_martingale(rng, in.w.params(), 3);
    FiniteMartingale combo(in.w.params(), 3);
    for (std::uint64_t x = 0; x < f.leaf_count(); ++x) combo.set_leaf(x, scaled(f.leaf(x), Rational(-5, 2)) + g.leaf(x));
    const auto tf = transform(f, ext).to_dense(), tg = transform(g, ext).to_dense(), tc = transform(combo, ext).to_dense();
    for (std::size_t x = 0; x < tc.size(); ++x) EXPECT_EQ(tc[x], Rational(-5, 2) * tf[x] + tg[x]);
}

TEST(Transform, PhiAndExtensionAgreeOnSobolevMartingales) {
    Rng rng(61);
    for (int trial = 0; trial < 20; ++trial) {
        const Instance in = random_weakly_cancelling_instance(rng);
        const ExtendedMap ext = build_extension(in.w, in.phi);
        const FiniteMartingale f = random_sobolev(in.w, 3, static_cast<std::uint64_t>(trial));
        EXPECT_TRUE(transform(f, in.phi) == transform(f, ext));
    }
}

TEST(Transform, PhiRequiresSobolevMembership) {
    const ModelParams p{3, 1};
    const WSpace w = WSpace::from_basis(p, {rank_one(nasty_vector(1, p), make_vector({1}))});
    const PhiMap phi = PhiMap::create(w, {make_vector({0, 1, -1})});
    FiniteMartingale f(p, 1);
    f.set_leaf(0, make_vector({1}));
    f.set_leaf(1, make_vector({-1}));
    EXPECT_THROW(transform(f, phi), PreconditionError);
}

TEST(StrongerEmbedding, ZeroAndConstant) {
    EXPECT_EQ(stronger_embedding_lhs(FiniteMartingale({3, 2}, 3), 2.0), 0.0);
    FiniteMartingale f({3, 2}, 3);
    for (std::uint64_t x = 0; x < f.leaf_count(); ++x) f.set_leaf(x, make_vector({3, 4}));
    for (double q : {1.5, 2.0, kInfinity}) EXPECT_NEAR(stronger_embedding_lhs(f, q), 5.0, 1e-12);
    EXPECT_THROW(stronger_embedding_lhs(f, 1.0), PreconditionError);
}

TEST(StrongerEmbedding, RatioRecordedOnCancellingSpace) {
    const ModelParams p{3, 2};
    const WSpace w = WSpace::from_basis(p, {rank_one(make_vector({1, -1, 0}), make_vector({1, 0})),
                                            rank_one(make_vector({0, 1, -1}), make_vector({0, 1}))});
    ASSERT_TRUE(is_cancelling(w).cancelling);
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 40; ++s) {
        const FiniteMartingale f = random_sobolev(w, 1 + static_cast<int>(s % 5), s);
        const double l1 = sobolev_norm(f);
        if (l1 == 0.0) continue;
        const double r = stronger_embedding_lhs(f, 2.0) / l1;
        EXPECT_TRUE(std::isfinite(r));
        worst = std::max(worst, r);
    }
    EXPECT_GT(worst, 0.0);
}

TEST(ScalarTreeFunction, PiecesAndSupNorm) {
    ScalarTreeFunction t({2, 1}, 3);
    t.add_piece(1, 0, Rational(2));
    t.add_piece(3, 1, Rational(-5));
    EXPECT_EQ(t.value_at(Atom::parse("111", 2)), 2);
    EXPECT_EQ(t.value_at(Atom::parse("112", 2)), -3);
    EXPECT_EQ(t.value_at(Atom::parse("211", 2)), 0);
    EXPECT_EQ(t.sup_norm(), 3);
    EXPECT_EQ(t.max_overlap(), 2);
}
