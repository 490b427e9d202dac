#include <doctest.h>

#include "helpers.hpp"
#include "mfv/measure.hpp"
#include "mfv/viability.hpp"

using namespace mfv;
using test::dirac;
using test::pair;
using test::vec;

TEST_SUITE("measures")
{
    TEST_CASE("construction merges duplicates and validates weights")
    {
        const AtomicMeasure m({TorusPoint{0.2}, TorusPoint{1.2}, TorusPoint{0.5}, TorusPoint{0.7}},
                              vec({0.25, 0.25, 0.5, 0.0}));
        REQUIRE(m.size() == 2);
        CHECK(m.weight(0) == 0.5);
        CHECK(m.weight(1) == 0.5);
        CHECK_THROWS_AS(AtomicMeasure({TorusPoint{0.1}, TorusPoint{0.2}}, vec({1.5, -0.5})), Error);
        CHECK_THROWS_AS(AtomicMeasure({TorusPoint{0.1}, TorusPoint{0.2}}, vec({0.5, 0.4})), Error);
        CHECK_THROWS_AS(AtomicMeasure({TorusPoint{0.1}, TorusPoint{0.2, 0.3}}, vec({0.5, 0.5})), DimensionError);
        const AtomicMeasure near({TorusPoint{0.3}, TorusPoint{0.3 + 5e-13}}, vec({0.5, 0.5}));
        CHECK(near.size() == 1);
    }

    TEST_CASE("W1 worked examples")
    {
        CHECK(std::abs(w1_distance(dirac(0.1), dirac(0.9)) - 0.2) <= 1e-12);

        const AtomicMeasure m = pair(0.2, 0.7, 0.3);
        const WassersteinResult self = wasserstein1(m, m);
        CHECK(self.distance == 0.0);
        CHECK((self.plan.mass - Eigen::MatrixXd(m.weights().asDiagonal())).cwiseAbs().maxCoeff() <= 1e-15);

        // Every coupling with a Dirac target is the product plan: 1/2 * 0.25 + 1/2 * 0.25.
        CHECK(std::abs(w1_distance(pair(0.0, 0.5), dirac(0.25)) - 0.25) <= 1e-12);
        CHECK(std::abs(test::w1_lp_oracle(pair(0.0, 0.5), dirac(0.25)) - 0.25) <= 1e-12);
    }

    TEST_CASE("W1 rejects instances above the support cap")
    {
        std::vector<TorusPoint> atoms;
        for (int i = 0; i < 513; ++i)
            atoms.push_back(TorusPoint{i / 513.0});
        const AtomicMeasure big = AtomicMeasure::uniform(atoms);
        CHECK_THROWS_WITH_AS(w1_distance(big, dirac(0.5)), "instance too large for exact solver", SizeLimitError);
        TransportOptions loose;
        loose.max_atoms = 1024;
        CHECK(wasserstein1(big, dirac(0.5), loose).distance > 0.0);
    }

    TEST_CASE("W1 agrees with the dense LP on random instances")
    {
        test::Random rng(21);
        for (int trial = 0; trial < 300; ++trial) {
            const std::size_t d = rng.integer(1, 2);
            const AtomicMeasure a = rng.measure(d, 6), b = rng.measure(d, 6);
            const WassersteinResult r = wasserstein1(a, b);
            CHECK(std::abs(r.distance - test::w1_lp_oracle(a, b)) <= 1e-10);
            CHECK(r.plan.marginal_error() <= 1e-10);
            CHECK((r.plan.mass.array() >= 0).all());
            CHECK(std::abs((r.plan.mass.array() * torus_cost_matrix(a, b).array()).sum() - r.distance) <= 1e-12);
        }
    }

    TEST_CASE("W1 agrees with permutation enumeration on uniform clouds")
    {
        test::Random rng(22);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t d = rng.integer(1, 2);
            const std::size_t n = rng.integer(1, 6);
            std::vector<TorusPoint> a, b;
            for (std::size_t i = 0; i < n; ++i) {
                a.push_back(rng.point(d));
                b.push_back(rng.point(d));
            }
            CHECK(std::abs(w1_distance(AtomicMeasure::uniform(a), AtomicMeasure::uniform(b)) -
                           test::w1_permutation_oracle(a, b)) <= 1e-10);
        }
    }

    TEST_CASE("W1 metric axioms and the dual bound")
    {
        test::Random rng(23);
        for (int trial = 0; trial < 300; ++trial) {
            const std::size_t d = rng.integer(1, 2);
            const AtomicMeasure a = rng.measure(d, 6), b = rng.measure(d, 6), c = rng.measure(d, 6);
            const double ab = w1_distance(a, b);
            CHECK(std::abs(ab - w1_distance(b, a)) <= 1e-10);
            CHECK(w1_distance(a, c) <= ab + w1_distance(b, c) + 1e-9);
            CHECK(w1_distance(a, a) == 0.0);
            if (!same_measure(a, b))
                CHECK(ab > 0.0);

            // phi(x) = min_k (c_k + rho(x, y_k)) is 1-Lipschitz on the torus.
            std::vector<TorusPoint> ys;
            std::vector<double> cs;
            for (int k = 0; k < 4; ++k) {
                ys.push_back(rng.point(d));
                cs.push_back(rng.uniform(0.0, 0.5));
            }
            auto phi = [&](const TorusPoint& x) {
                double v = std::numeric_limits<double>::infinity();
                for (std::size_t k = 0; k < ys.size(); ++k)
                    v = std::min(v, cs[k] + test::reference_torus_distance(x, ys[k]));
                return v;
            };
            double ia = 0.0, ib = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i)
                ia += a.weight(i) * phi(a.atom(i));
            for (std::size_t i = 0; i < b.size(); ++i)
                ib += b.weight(i) * phi(b.atom(i));
            CHECK(std::abs(ia - ib) <= ab + 1e-9);
        }
    }

    TEST_CASE("pushforward maps atoms and merges collisions")
    {
        const AtomicMeasure m = pair(0.2, 0.7);
        CHECK(same_measure(pushforward(m, [](const TorusPoint& x) { return x; }), m));
        const AtomicMeasure moved = pushforward(m, [](const TorusPoint& x) { return translate(x, vec({0.3}), 1.0); });
        CHECK(same_measure(moved, pair(0.5, 0.0)));
        const AtomicMeasure collapsed = pushforward(m, [](const TorusPoint&) { return TorusPoint{0.4}; });
        REQUIRE(collapsed.size() == 1);
        CHECK(collapsed.weight(0) == 1.0);
    }

    TEST_CASE("distance to a measure set")
    {
        const SetOracle single = SetOracle::finite({dirac(0.5)});
        const NearestMeasure a = dist_to_measure_set(dirac(0.3), single);
        CHECK(std::abs(a.distance - 0.2) <= 1e-12);
        CHECK(same_measure(a.witness, dirac(0.5)));
        CHECK(dist_to_measure_set(dirac(0.5), single).distance == 0.0);

        const SetOracle K = SetOracle::dirac_pair(TorusPoint{0.5}, vec({1.0}), 0.25, 1e-3);
        const AtomicMeasure member = pair(0.4, 0.6);
        CHECK(dist_to_measure_set(member, K).distance <= 1e-12);
        // t = 0.3 lies beyond epsilon; the nearest member is the endpoint pair.
        const NearestMeasure outside = dist_to_measure_set(pair(0.2, 0.8), K);
        CHECK(std::abs(outside.distance - 0.05) <= 1e-12);
        CHECK(same_measure(outside.witness, pair(0.25, 0.75), 1e-10, 1e-9));
    }

    TEST_CASE("plan composition through a shared middle marginal")
    {
        test::Random rng(24);
        for (int trial = 0; trial < 50; ++trial) {
            const AtomicMeasure a = rng.measure(1, 3), b = rng.measure(1, 3), c = rng.measure(1, 3),
                                e = rng.measure(1, 3);
            const TransportPlan p12 = wasserstein1(a, b).plan, p23 = wasserstein1(b, c).plan,
                                p34 = wasserstein1(c, e).plan;
            const TransportPlan left = compose(compose(p12, p23), p34);
            const TransportPlan right = compose(p12, compose(p23, p34));
            CHECK((left.mass - right.mass).cwiseAbs().maxCoeff() <= 1e-12);
            CHECK(left.marginal_error() <= 1e-12);
            CHECK((compose(TransportPlan::identity(a), p12).mass - p12.mass).cwiseAbs().maxCoeff() <= 1e-15);
        }
        const TransportPlan ab = wasserstein1(dirac(0.1), dirac(0.2)).plan;
        const TransportPlan cd = wasserstein1(dirac(0.3), dirac(0.4)).plan;
        CHECK_THROWS_WITH_AS(compose(ab, cd), "plan composition requires matching middle marginals",
                             MarginalMismatchError);
    }
}
