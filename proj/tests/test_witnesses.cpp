#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wcmart/instances.hpp"
#include "wcmart/witnesses.hpp"

using namespace wcmart;

namespace {

oracle::Mat rows_of(const RatMatrix& a) {
    oracle::Mat out;
    for (std::size_t r = 0; r < a.rows(); ++r) out.push_back(a.row(r));
    return out;
}

TreePath random_path(Rng& rng, int m, int length) {
    TreePath path;
    for (int d = 0; d < length; ++d) path.prefix.push_back(static_cast<int>(uniform_int(rng, 1, m)));
    path.repeat = static_cast<int>(uniform_int(rng, 1, m));
    return path;
}

const ModelParams kP31{3, 1};

}  // namespace

TEST(NecessityMartingale, UnitMassAtEveryDepth) {
    for (int n = 1; n <= 12; ++n) EXPECT_DOUBLE_EQ(sobolev_norm(necessity_martingale(2, make_vector({3, 4}), n, {4, 2})), 5.0);
}

TEST(NecessityMartingale, LiesInSpanOfItsDirection) {
    const ModelParams p{3, 2};
    const RatVector a = make_vector({1, 2});
    const WSpace w = WSpace::from_basis(p, {rank_one(nasty_vector(3, p), a)});
    EXPECT_TRUE(validate_sobolev(necessity_martingale(3, a, 6, p), w).member);
}

TEST(BlowUpCurve, LinearGrowthTheta2) {
    const WSpace w = WSpace::from_basis(kP31, {rank_one(nasty_vector(1, kP31), make_vector({1}))});
    const PhiMap phi = PhiMap::create(w, {nasty_vector(1, kP31)});
    const WitnessReport r = blow_up_curve(w, phi, 1, make_vector({1}), 5);
    ASSERT_EQ(r.curve.size(), 5u);
    for (int n = 1; n <= 5; ++n) {
        EXPECT_EQ(r.curve[static_cast<std::size_t>(n - 1)].lhs, 2 * n);
        EXPECT_DOUBLE_EQ(r.curve[static_cast<std::size_t>(n - 1)].rhs, 1.0);
    }
}

TEST(BlowUpCurve, ScalingDoublesValues) {
    const WSpace w = WSpace::from_basis(kP31, {rank_one(nasty_vector(1, kP31), make_vector({1}))});
    const PhiMap phi = PhiMap::create(w, {nasty_vector(1, kP31)});
    const WitnessReport one = blow_up_curve(w, phi, 1, make_vector({1}), 6);
    const WitnessReport two = blow_up_curve(w, phi, 1, make_vector({2}), 6);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(two.curve[i].lhs, 2 * one.curve[i].lhs);
}

TEST(BlowUpCurve, RandomViolationsMatchTheta) {
    Rng rng(71);
    int seen = 0;
    for (int trial = 0; trial < 200 && seen < 25; ++trial) {
        InstanceOptions opt;
        opt.compliant_probability = 0.0;
        opt.nasty_probability = 0.7;
        const Instance in = random_instance(rng, opt);
        const auto v = is_weakly_cancelling(in.w, in.phi);
        if (v.weakly_cancelling) continue;
        ++seen;
        const WitnessReport r = blow_up_curve(in.w, in.phi, v.witness->j, v.witness->a, 12);
        EXPECT_EQ(r.theta, v.witness->theta);
        for (const auto& pt : r.curve) EXPECT_EQ(pt.lhs, pt.depth * v.witness->theta);
    }
    EXPECT_GE(seen, 10);
}

TEST(BlowUpCurve, RejectsZeroTheta) {
    const WSpace w = WSpace::from_basis(kP31, {rank_one(nasty_vector(1, kP31), make_vector({1}))});
    EXPECT_THROW(blow_up_curve(w, PhiMap::create(w, {make_vector({0, 1, -1})}), 1, make_vector({1}), 3), PreconditionError);
}

TEST(DeltaMartingale, ConstantPathIsNecessityMartingale) {
    EXPECT_TRUE(delta_martingale(TreePath::constant(2), make_vector({1, -1}), 5, {3, 2}) ==
                necessity_martingale(2, make_vector({1, -1}), 5, {3, 2}));
}

TEST(DeltaMartingale, MixedPathClosedForm) {
    const ModelParams p{3, 2};
    const TreePath path{{2, 1, 3, 3}, 1};
    const RatVector a = make_vector({2, -1});
    const FiniteMartingale f = delta_martingale(path, a, 6, p);
    const auto diffs = differences(f);
    for (int n = 0; n < 6; ++n) {
        const int next = path.digit(static_cast<std::size_t>(n));
        const auto expected = j_omega_apply(path.atom(n), rank_one(nasty_vector(next, p), scaled(a, Rational(integer_power(3, n)))));
        for (const auto& [child, v] : expected) EXPECT_EQ(diffs[static_cast<std::size_t>(n) + 1].values.at(child.index(3)), v);
    }
    EXPECT_DOUBLE_EQ(sobolev_norm(f), std::sqrt(5.0));
}

TEST(MeasureToMartingale, SingleDeltaAndDisjointPair) {
    const ModelParams p{2, 2};
    const TreePath t1{{1, 2}, 1}, t2{{2, 2}, 1};
    const AtomicMeasure single{p, {{t1, make_vector({3, 4})}}};
    EXPECT_TRUE(measure_to_martingale(single, 5) == delta_martingale(t1, make_vector({3, 4}), 5, p));
    const AtomicMeasure pair{p, {{t1, make_vector({3, 4})}, {t2, make_vector({0, 2})}}};
    EXPECT_DOUBLE_EQ(sobolev_norm(measure_to_martingale(pair, 5)), 7.0);
}

TEST(MeasureToMartingale, CancellingWeightsInOneAtom) {
    const ModelParams p{3, 1};
    const AtomicMeasure mu{p, {{TreePath{{1, 1}, 2}, make_vector({4})}, {TreePath{{1, 1}, 3}, make_vector({-4})}}};
    EXPECT_TRUE(measure_to_martingale(mu, 2).leaves().empty());
}

TEST(MeasureToMartingale, LinearAndBoundedByVariation) {
    Rng rng(72);
    const ModelParams p{3, 2};
    for (int trial = 0; trial < 30; ++trial) {
        AtomicMeasure m1{p, {}}, m2{p, {}}, both{p, {}};
        for (int k = 0; k < 3; ++k) {
            m1.support.emplace_back(random_path(rng, 3, 4), random_vector(rng, 2, 3));
            m2.support.emplace_back(random_path(rng, 3, 4), random_vector(rng, 2, 3));
        }
        both.support = m1.support;
        both.support.insert(both.support.end(), m2.support.begin(), m2.support.end());
        const FiniteMartingale f1 = measure_to_martingale(m1, 4), f2 = measure_to_martingale(m2, 4), f = measure_to_martingale(both, 4);
        for (std::uint64_t x = 0; x < f.leaf_count(); ++x) EXPECT_EQ(f.leaf(x), f1.leaf(x) + f2.leaf(x));
        EXPECT_LE(sobolev_norm(f), both.total_variation() + 1e-12);
    }
}

TEST(DisjointSupport, HoldsForBuiltExtensions) {
    Rng rng(73);
    for (int trial = 0; trial < 40; ++trial) {
        const Instance in = random_weakly_cancelling_instance(rng);
        const ExtendedMap ext = build_extension(in.w, in.phi);
        for (int s = 0; s < 5; ++s) {
            const TreePath path = random_path(rng, in.w.params().m, 6);
            EXPECT_TRUE(disjoint_support_check(ext, path, random_vector(rng, static_cast<std::size_t>(in.w.params().ell), 3), 6).disjoint);
        }
    }
}

TEST(DisjointSupport, PlantedViolationIsLocated) {
    Rng rng(74);
    for (int trial = 0; trial < 30; ++trial) {
        const Instance in = random_weakly_cancelling_instance(rng);
        const ModelParams& p = in.w.params();
        const int j = static_cast<int>(uniform_int(rng, 1, p.m));
        const int k = static_cast<int>(uniform_int(rng, 0, p.ell - 1));
        const ExtendedMap bad = plant_violation(build_extension(in.w, in.phi), j, k, Rational(1, 3));
        const TreePath path{{static_cast<int>(uniform_int(rng, 1, p.m)), j}, static_cast<int>(uniform_int(rng, 1, p.m))};
        const auto r = disjoint_support_check(bad, path, unit_vector(static_cast<std::size_t>(p.ell), static_cast<std::size_t>(k)), 4);
        EXPECT_FALSE(r.disjoint);
        ASSERT_TRUE(r.digit.has_value());
        EXPECT_EQ(*r.digit, j);
    }
}

TEST(DisjointSupport, ZeroWeightIsVacuous) {
    const ExtendedMap ext(ModelParams{3, 2}, RatMatrix(3, 6));
    EXPECT_TRUE(disjoint_support_check(ext, TreePath{{1, 2}, 3}, zero_vector(2), 5).disjoint);
}

TEST(TransformNorm, ZeroMap) { EXPECT_EQ(transform_norm(ExtendedMap(ModelParams{3, 2}, RatMatrix(3, 6)), 4).squared, 0); }

TEST(TransformNorm, StabilizesAtOffDiagonalValue) {
    Rng rng(75);
    for (int trial = 0; trial < 40; ++trial) {
        const Instance in = random_weakly_cancelling_instance(rng);
        const ExtendedMap ext = build_extension(in.w, in.phi);
        const Rational target = off_diagonal_norm(ext).squared;
        for (int n = 2; n <= 6; ++n) EXPECT_EQ(transform_norm(ext, n).squared, target);
        EXPECT_LE(transform_norm(ext, 1).squared, target);
    }
}

TEST(TransformNorm, MatchesDenseEnumeration) {
    Rng rng(76);
    for (int trial = 0; trial < 12; ++trial) {
        InstanceOptions opt;
        opt.m_max = 3;
        opt.ell_max = 2;
        const Instance in = random_weakly_cancelling_instance(rng, opt);
        const ExtendedMap ext = build_extension(in.w, in.phi);
        const ModelParams& p = ext.params();
        for (int n = 3; n <= (p.m == 2 ? 5 : 4); ++n)
            EXPECT_EQ(transform_norm(ext, n).squared, oracle::dense_transform_norm_squared(rows_of(ext.matrix()), p.m, p.ell, n)) << "depth " << n;
    }
    // Arbitrary (non-compliant) maps as well, where the norm keeps growing.
    for (int trial = 0; trial < 6; ++trial) {
        const ModelParams p{static_cast<int>(uniform_int(rng, 2, 3)), 1};
        RatMatrix map(static_cast<std::size_t>(p.m), p.tensor_dim());
        for (std::size_t r = 0; r < map.rows(); ++r)
            for (std::size_t c = 0; c < map.cols(); ++c) map(r, c) = random_rational(rng, 3);
        const ExtendedMap ext(p, map);
        for (int n = 1; n <= 4; ++n) EXPECT_EQ(transform_norm(ext, n).squared, oracle::dense_transform_norm_squared(rows_of(map), p.m, p.ell, n));
    }
}

TEST(TransformNorm, PlantedViolationGrowsLinearly) {
    Rng rng(77);
    const Instance in = random_weakly_cancelling_instance(rng);
    const ModelParams& p = in.w.params();
    const ExtendedMap bad = plant_violation(build_extension(in.w, in.phi), 1, 0, Rational(1, 2));
    const double theta = (p.m - 1) * 0.5;
    double previous = 0.0;
    for (int n = 1; n <= 8; ++n) {
        const double v = transform_norm(bad, n).value;
        EXPECT_GE(v, n * theta - 1e-12);
        EXPECT_GE(v, previous - 1e-12);
        previous = v;
    }
}

TEST(TransformNorm, BoundsRandomMeasures) {
    Rng rng(78);
    for (int trial = 0; trial < 10; ++trial) {
        const Instance in = random_weakly_cancelling_instance(rng);
        const ExtendedMap ext = build_extension(in.w, in.phi);
        const ModelParams& p = in.w.params();
        const double norm = transform_norm(ext, 5).value;
        for (int s = 0; s < 10; ++s) {
            AtomicMeasure mu{p, {}};
            const auto points = uniform_int(rng, 1, 4);
            for (long k = 0; k < points; ++k) mu.support.emplace_back(random_path(rng, p.m, 5), random_vector(rng, static_cast<std::size_t>(p.ell), 3));
            const double sup = transform(measure_to_martingale(mu, 5), ext).sup_norm().get_d();
            EXPECT_LE(sup, norm * mu.total_variation() + 1e-9);
        }
    }
}

TEST(NormValue, ExactRootWhenAvailable) {
    const NormValue v = NormValue::from_squared(Rational(9, 4));
    ASSERT_TRUE(v.exact.has_value());
    EXPECT_EQ(*v.exact, Rational(3, 2));
    EXPECT_FALSE(NormValue::from_squared(Rational(2)).exact.has_value());
    EXPECT_NEAR(NormValue::from_squared(Rational(2)).value, std::sqrt(2.0), 1e-15);
}
