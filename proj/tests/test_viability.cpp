#include <doctest.h>

#include "helpers.hpp"
#include "mfv/viability.hpp"

using namespace mfv;
using test::dirac;
using test::pair;
using test::vec;

namespace {

SetOracle dirac_pair_family(double resolution = 1e-4)
{
    return SetOracle::dirac_pair(TorusPoint{0.5}, vec({1.0}), 0.25, resolution);
}

LiftedMeasure symmetric_lift()
{
    Eigen::MatrixXd V(1, 2);
    V << -1.0, 1.0;
    return LiftedMeasure(dirac(0.5), {make_fiber(V, vec({0.5, 0.5}))});
}

} // namespace

TEST_SUITE("viability")
{
    TEST_CASE("oracle distances stay within resolution of a dense reference")
    {
        const SetOracle K = dirac_pair_family(1e-3);
        test::Random rng(60);
        for (int trial = 0; trial < 40; ++trial) {
            const double a = rng.uniform();
            const double got = K.nearest(dirac(a)).distance;
            const double ref = test::dirac_to_pair_curve_oracle(a, 0.5, 0.25, 20000);
            CHECK(got >= ref - 1e-9);
            CHECK(got <= ref + K.resolution());
        }
        for (const auto& m : K.samples(7))
            CHECK(K.nearest(m).distance <= 1e-12);
    }

    TEST_CASE("translated-measure curves")
    {
        const SetOracle K = SetOracle::translated(pair(0.1, 0.3), vec({1.0}), 0.0, 0.5, 1e-3);
        CHECK(K.kind() == SetKind::ParametricCurve);
        CHECK(K.nearest(pair(0.4, 0.6)).distance <= 1e-12);
        CHECK(std::abs(K.nearest(pair(0.8, 1.0)).distance - 0.2) <= 1e-12);
        CHECK_THROWS_AS(SetOracle::translated(pair(0.1, 0.3), vec({0.0}), 0.0, 1.0, 1e-3), Error);
        CHECK_THROWS_AS(SetOracle::finite({}), Error);
    }

    TEST_CASE("symmetric pair is tangent")
    {
        const TangencyReport r = tangency_estimate(symmetric_lift(), dirac_pair_family(), 0.1, 5);
        CHECK(r.verdict == Verdict::Tangent);
        REQUIRE(r.taus.size() == 5);
        for (std::size_t k = 0; k < r.taus.size(); ++k) {
            CHECK(r.taus[k] == doctest::Approx(0.1 / std::pow(2.0, static_cast<double>(k))));
            CHECK(r.ratios[k] >= 0.0);
            CHECK(r.ratios[k] < 1e-6);
        }
    }

    TEST_CASE("one-sided Dirac velocity is not tangent")
    {
        const SetOracle K = dirac_pair_family();
        const TangencyReport r = tangency_estimate(LiftedMeasure::constant(dirac(0.5), vec({1.0})), K, 0.1, 5);
        CHECK(r.verdict == Verdict::NotTangent);
        for (std::size_t k = 0; k < r.taus.size(); ++k) {
            const double ref = test::dirac_to_pair_curve_oracle(0.5 + r.taus[k], 0.5, 0.25) / r.taus[k];
            CHECK(std::abs(r.ratios[k] - ref) <= 1e-6);
            CHECK(r.ratios[k] > 0.4);
        }
    }

    TEST_CASE("zero lift of a member of a finite set is tangent")
    {
        const AtomicMeasure m0 = pair(0.2, 0.65, 0.3);
        const TangencyReport r = tangency_estimate(LiftedMeasure::constant(m0, vec({0.0})), SetOracle::finite({m0}), 0.1, 4);
        CHECK(r.verdict == Verdict::Tangent);
        for (double x : r.ratios)
            CHECK(x == 0.0);
    }

    TEST_CASE("ladder edge cases")
    {
        const TangencyReport coarse = tangency_estimate(symmetric_lift(), dirac_pair_family(0.05), 0.1, 3);
        CHECK(coarse.verdict == Verdict::Inconclusive);
        CHECK(coarse.diagnostic.find("coarser") != std::string::npos);
        CHECK_THROWS_AS(tangency_estimate(symmetric_lift(), dirac_pair_family(), 0.1, 2), Error);
        CHECK_THROWS_AS(tangency_estimate(symmetric_lift(), dirac_pair_family(), 0.0, 3), Error);
        CHECK_THROWS_AS(tangency_estimate(LiftedMeasure::constant(AtomicMeasure::dirac(TorusPoint{0.1, 0.2}), vec({0.0, 0.0})),
                                          dirac_pair_family(), 0.1, 3),
                        DimensionError);
    }

    TEST_CASE("cone property of the ladder")
    {
        const SetOracle K = dirac_pair_family();
        const LiftedMeasure beta = symmetric_lift();
        const double tau0 = 0.1;
        const TangencyReport base = tangency_estimate(beta, K, tau0, 4);
        REQUIRE(base.verdict == Verdict::Tangent);
        for (double a : {0.5, 2.0}) {
            const TangencyReport scaled = tangency_estimate(rescale(beta, a), K, tau0 / a, 4);
            CHECK(scaled.verdict == base.verdict);
            for (std::size_t k = 0; k < base.ratios.size(); ++k) {
                // Same shifted measures, so the distances agree; ratios pick up the factor a.
                const double d_base = base.ratios[k] * base.taus[k];
                const double d_scaled = scaled.ratios[k] * scaled.taus[k];
                CHECK(std::abs(d_base - d_scaled) <= 1e-15);
                CHECK(std::abs(scaled.ratios[k] - a * base.ratios[k]) <= 1e-12);
            }
        }
        // Identity on the shifted measures themselves, for a non-tangent lift as well.
        const LiftedMeasure one_sided = LiftedMeasure::constant(dirac(0.5), vec({1.0}));
        const TangencyReport r1 = tangency_estimate(one_sided, K, tau0, 3);
        const TangencyReport r2 = tangency_estimate(rescale(one_sided, 2.0), K, tau0 / 2.0, 3);
        for (std::size_t k = 0; k < r1.ratios.size(); ++k)
            CHECK(std::abs(r1.ratios[k] * r1.taus[k] - r2.ratios[k] * r2.taus[k]) <= 1e-15);
    }

    TEST_CASE("condition check finds the symmetric witness")
    {
        const ControlSystem sys = constant_controls({vec({-1.0}), vec({1.0})});
        const ConditionResult r = viability_condition_check(dirac(0.5), dirac_pair_family(), sys, 0.1);
        CHECK(r.found);
        CHECK(r.score < 1e-6);
        CHECK(feasibility_residual(r.witness, sys) <= 1e-9);
        CHECK(lifted_metric(r.witness, symmetric_lift()) <= 1e-9);
    }

    TEST_CASE("condition check reports the unit-drift escape")
    {
        const ControlSystem sys = constant_controls({vec({1.0})});
        const ConditionResult r = viability_condition_check(dirac(0.5), SetOracle::finite({dirac(0.5)}), sys, 0.1);
        CHECK_FALSE(r.found);
        CHECK(std::abs(r.score - 1.0) <= 1e-9);
        CHECK(feasibility_residual(r.witness, sys) <= 1e-9);
    }

    TEST_CASE("condition check picks the stationary control")
    {
        const ControlSystem sys = constant_controls({vec({-1.0}), vec({0.0}), vec({1.0})});
        const ConditionResult r = viability_condition_check(dirac(0.5), SetOracle::finite({dirac(0.5)}), sys, 0.1);
        CHECK(r.found);
        CHECK(r.score == 0.0);
        CHECK(r.witness.first_moment() <= 1e-12);
        CHECK(feasibility_residual(r.witness, sys) <= 1e-9);
    }

    TEST_CASE("condition check on a two-atom member moves each atom inward or outward")
    {
        const ControlSystem sys = constant_controls({vec({-1.0}), vec({1.0})});
        const SetOracle K = dirac_pair_family();
        const AtomicMeasure m = pair(0.4, 0.6);
        const ConditionResult r = viability_condition_check(m, K, sys, 0.02);
        CHECK(r.found);
        CHECK(feasibility_residual(r.witness, sys) <= 1e-9);
        CHECK_THROWS_AS(viability_condition_check(pair(0.1, 0.2), K, sys, 0.02), Error);
    }

    TEST_CASE("condition check is deterministic")
    {
        const ControlSystem sys = mean_drift(0.3, {vec({-1.0}), vec({1.0}), vec({0.2})});
        const SetOracle K = SetOracle::translated(pair(0.1, 0.3), vec({1.0}), 0.0, 0.5, 1e-3);
        WitnessOptions opts;
        opts.seed = 7;
        const ConditionResult a = viability_condition_check(pair(0.2, 0.4), K, sys, 0.05, opts);
        const ConditionResult b = viability_condition_check(pair(0.2, 0.4), K, sys, 0.05, opts);
        CHECK(a.score == b.score);
        CHECK(a.report.ratios == b.report.ratios);
        CHECK(lifted_metric(a.witness, b.witness) == 0.0);
        CHECK(feasibility_residual(a.witness, sys) <= 1e-9);
    }
}
