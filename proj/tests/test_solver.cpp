#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "mfv/certificates.hpp"
#include "mfv/solver.hpp"

using namespace mfv;
using test::dirac;
using test::pair;
using test::vec;

namespace {

SolveConfig forward_config(double T, std::size_t n, Selector selector)
{
    SolveConfig cfg;
    cfg.horizon = T;
    cfg.steps = n;
    cfg.mode = SolveMode::ForwardSelector;
    cfg.selector = std::move(selector);
    return cfg;
}

SolveConfig viable_config(double T, std::size_t n)
{
    SolveConfig cfg;
    cfg.horizon = T;
    cfg.steps = n;
    cfg.mode = SolveMode::ViableTracking;
    return cfg;
}

SetOracle benchmark_K()
{
    return SetOracle::dirac_pair(TorusPoint{0.5}, vec({1.0}), 0.25, 0.02);
}

void check_all_certificates(const SolveResult& r, const ControlSystem& sys, const SetOracle* K)
{
    for (const auto& c : certify_run(r, sys, K)) {
        INFO(c.name << ": " << c.value << " <= " << c.bound);
        CHECK(c.pass);
    }
}

} // namespace

TEST_SUITE("solver")
{
    TEST_CASE("forward run with a zero control keeps the flow constant")
    {
        const ControlSystem sys = constant_controls({vec({0.0})});
        const AtomicMeasure m0 = pair(0.15, 0.8, 0.3);
        const SolveResult r = solve_forward(m0, sys, forward_config(0.5, 10, control_selector(sys, 0)));
        REQUIRE(r.flow.size() == 11);
        for (const auto& m : r.flow)
            CHECK(same_measure(m, m0));
        CHECK(solution_residual(r, sys, 0.0, 0.5) <= 1e-12);
        check_all_certificates(r, sys, nullptr);
    }

    TEST_CASE("forward run with the unit selector is pure transport")
    {
        const ControlSystem sys = constant_controls({vec({-1.0}), vec({1.0})});
        const SolveResult r = solve_forward(dirac(0.0), sys, forward_config(0.3, 30, control_selector(sys, 1)));
        CHECK(w1_distance(r.flow.back(), dirac(0.3)) <= 1e-9);
        for (std::size_t k = 0; k < r.flow.size(); ++k)
            CHECK(w1_distance(r.flow[k], dirac(r.bundle.grid()[k])) <= 1e-9);
        CHECK(solution_residual(r, sys, 0.0, 0.3) <= 1e-9);
        check_all_certificates(r, sys, nullptr);
    }

    TEST_CASE("mean-drift forward run contracts symmetrically")
    {
        const ControlSystem sys = mean_drift(1.0, {vec({0.0})});
        const AtomicMeasure m0 = pair(0.4, 0.6);
        const SolveResult r = solve_forward(m0, sys, forward_config(0.5, 50, control_selector(sys, 0)));
        const AtomicMeasure& end = r.flow.back();
        REQUIRE(end.size() == 2);
        CHECK(torus_distance(end.atom(0), end.atom(1)) < 0.2);
        const AtomicMeasure mirrored = pushforward(end, [](const TorusPoint& x) { return TorusPoint((1.0 - x.coords().array()).matrix()); });
        CHECK(w1_distance(end, mirrored) <= 1e-12);

        const AtomicMeasure m0_mirror = pushforward(m0, [](const TorusPoint& x) { return TorusPoint((1.0 - x.coords().array()).matrix()); });
        const SolveResult rm = solve_forward(m0_mirror, sys, forward_config(0.5, 50, control_selector(sys, 0)));
        CHECK(w1_distance(end, rm.flow.back()) <= 1e-12);
        check_all_certificates(r, sys, nullptr);
    }

    TEST_CASE("forward selector outside the vectogram is rejected")
    {
        const ControlSystem sys = constant_controls({vec({-1.0}), vec({1.0})});
        Selector bad = [](const TorusPoint&, const AtomicMeasure&) { return Velocity(vec({2.0})); };
        CHECK_THROWS_WITH_AS(solve_forward(dirac(0.1), sys, forward_config(0.1, 2, bad)),
                             doctest::Contains("selector leaves the vectogram at step 0, atom 0"), Error);
        CHECK_THROWS_AS(solve_forward(dirac(0.1), sys, forward_config(0.1, 2, nullptr)), Error);
        CHECK_THROWS_AS(control_selector(sys, 5), Error);
    }

    TEST_CASE("barycenter selector")
    {
        const ControlSystem sys = constant_controls({vec({-1.0}), vec({0.5})});
        const SolveResult r = solve_forward(dirac(0.1), sys, forward_config(0.4, 4, barycenter_selector(sys)));
        CHECK(w1_distance(r.flow.back(), dirac(0.1 - 0.25 * 0.4)) <= 1e-12);
    }

    TEST_CASE("viable run on the Dirac-pair benchmark")
    {
        const ControlSystem sys = constant_controls({vec({-1.0}), vec({1.0})});
        const SetOracle K = benchmark_K();
        const SolveResult r = solve_viable(dirac(0.5), sys, K, viable_config(0.2, 40));
        const double bound = (0.2 + sys.bound_R) / 40.0 + K.resolution();
        CHECK(r.max_dist_to_K() <= bound);
        for (const auto& m : r.flow)
            CHECK(K.nearest(m).distance <= bound);
        // Standing still is tangent too, so only the mirror symmetry of the endpoint is fixed.
        const AtomicMeasure mirrored =
            pushforward(r.flow.back(), [](const TorusPoint& x) { return TorusPoint((1.0 - x.coords().array()).matrix()); });
        CHECK(w1_distance(r.flow.back(), mirrored) <= 1e-9);
        CHECK(r.bundle.size() == 2);
        CHECK(std::isfinite(r.coupling_rate));
        CHECK(r.warnings.empty());
        CHECK(solution_residual(r, sys, 0.0, 0.2) <= 0.2 / 40.0 + 1e-6);
        check_all_certificates(r, sys, &K);

        // The shifted composite at each step is the next flow measure.
        for (std::size_t j = 0; j + 1 < r.flow.size(); ++j)
            CHECK(r.diagnostics[j].witness_score < 1e-3);
    }

    TEST_CASE("viable run at a finite set with a rest control stays put")
    {
        const ControlSystem sys = constant_controls({vec({-1.0}), vec({0.0}), vec({1.0})});
        const AtomicMeasure m0 = pair(0.3, 0.45, 0.6);
        const SetOracle K = SetOracle::finite({m0}, 0.1);
        const SolveResult r = solve_viable(m0, sys, K, viable_config(0.25, 5));
        for (const auto& m : r.flow)
            CHECK(same_measure(m, m0));
        for (const auto& d : r.diagnostics)
            CHECK(d.dist_to_K == 0.0);
        check_all_certificates(r, sys, &K);
    }

    TEST_CASE("doubling the step count halves the achieved distance")
    {
        const ControlSystem sys = constant_controls({vec({-1.0}), vec({1.0})});
        const SetOracle K = benchmark_K();
        const SolveResult r20 = solve_viable(dirac(0.5), sys, K, viable_config(0.2, 20));
        const SolveResult r40 = solve_viable(dirac(0.5), sys, K, viable_config(0.2, 40));
        const double slack = K.resolution();
        CHECK(r40.max_dist_to_K() <= 0.5 * r20.max_dist_to_K() + slack);
        CHECK(solution_residual(r40, sys, 0.0, 0.2) <= solution_residual(r20, sys, 0.0, 0.2) + 1e-9);
    }

    TEST_CASE("viable run errors")
    {
        const ControlSystem drift = constant_controls({vec({1.0})});
        const SetOracle single = SetOracle::finite({dirac(0.5)}, 0.1);
        try {
            solve_viable(dirac(0.5), drift, single, viable_config(0.1, 10));
            FAIL("expected a viability violation");
        } catch (const ViabilityViolation& v) {
            CHECK(v.step() == 0);
            CHECK(std::string(v.what()).find("viability condition violated at step 0") == 0);
            CHECK(same_measure(v.nu(), dirac(0.5)));
            CHECK(std::abs(v.score() - 1.0) <= 1e-9);
        }
        // Steps coarser than resolution / (2R).
        CHECK_THROWS_WITH_AS(solve_viable(dirac(0.5), drift, single, viable_config(1.0, 2)),
                             doctest::Contains("exceeds resolution"), Error);
        CHECK_THROWS_WITH_AS(solve_viable(dirac(0.2), drift, single, viable_config(0.1, 10)),
                             doctest::Contains("not in K"), Error);
    }

    TEST_CASE("trajectory cap")
    {
        const ControlSystem sys = constant_controls({vec({-1.0}), vec({1.0})});
        SolveConfig cfg = viable_config(0.2, 20);
        cfg.max_trajectories = 1;
        CHECK_THROWS_AS(solve_viable(dirac(0.5), sys, benchmark_K(), cfg), SizeLimitError);
    }

    TEST_CASE("solution residual over windows")
    {
        const ControlSystem sys = constant_controls({vec({-1.0}), vec({1.0})});
        const SolveResult r = solve_forward(dirac(0.2), sys, forward_config(1.0, 20, control_selector(sys, 0)));
        CHECK(solution_residual(r, sys, 0.0, 1.0) <= 1e-12);
        CHECK(solution_residual(r, sys, 0.25, 0.75) <= 1e-12);
        CHECK_THROWS_AS(solution_residual(r, sys, 0.5, 0.5), Error);
        CHECK_THROWS_AS(solution_residual(r, sys, 0.0, 0.33), Error);

        // A bundle that moves at speed 2 against controls in [-1, 1]: each
        // window of length w misses by w.
        const std::vector<double>& grid = r.bundle.grid();
        std::vector<Velocity> steps(grid.size() - 1, vec({0.1}));
        const SolveResult fast = result_from_bundle(
            PathBundle(grid, {Trajectory::from_displacements(TorusPoint{0.0}, steps)}, vec({1.0})),
            SolveMode::ForwardSelector);
        CHECK(std::abs(solution_residual(fast, sys, 0.0, 1.0) - 1.0) <= 1e-9);
    }
}
