#pragma once

// Particle solvers on a uniform grid t_j = j T / n: explicit Euler driven by
// a selector of the vectogram, and the viability-tracking scheme that
// projects onto K, picks a tangent feasible lift there, transports it back
// along an optimal plan and shifts.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "mfv/dynamics.hpp"
#include "mfv/paths.hpp"
#include "mfv/viability.hpp"

namespace mfv {

enum class SolveMode { ForwardSelector, ViableTracking };

std::string to_string(SolveMode mode);

// Velocity chosen at x under population m; must lie in F(x, m).
using Selector = std::function<Velocity(const TorusPoint& x, const AtomicMeasure& m)>;

// f(x, m, u_k) for the k-th control. Both selectors keep a reference to sys.
Selector control_selector(const ControlSystem& sys, std::size_t k);
// Average of the vectogram vertices.
Selector barycenter_selector(const ControlSystem& sys);

struct SolveConfig
{
    double horizon = 1.0;
    std::size_t steps = 1;
    SolveMode mode = SolveMode::ForwardSelector;
    Selector selector;
    std::size_t max_trajectories = 4096;
    WitnessOptions witness;
    // Number of K samples probed for the condition before a viable run.
    std::size_t condition_samples = 5;
};

struct GridDiagnostics
{
    double t = 0.0;
    double dist_to_K = 0.0;
    // Velocity residual of the step leaving t against F(., flow[t]); 0 at T.
    double feasibility = 0.0;
    // Mass-weighted distance of each step displacement to dt * F(x, flow[t]).
    double aumann = 0.0;
    // W1(mu_j, nu_j) in viable mode.
    double coupling = 0.0;
    double witness_score = 0.0;
};

struct SolveResult
{
    SolveMode mode = SolveMode::ForwardSelector;
    PathBundle bundle;
    std::vector<AtomicMeasure> flow;
    std::vector<GridDiagnostics> diagnostics;
    // max_j W1(mu_j, nu_j) / t_j over j >= 1.
    double coupling_rate = 0.0;
    // Sum over merges of weight * max-over-grid distance between merged paths.
    double merge_error = 0.0;
    std::size_t merges = 0;
    std::vector<std::string> warnings;

    double step() const;
    double max_dist_to_K() const;
};

class ViabilityViolation : public Error
{
public:
    ViabilityViolation(std::size_t step, AtomicMeasure nu, double score);

    std::size_t step() const { return step_; }
    const AtomicMeasure& nu() const { return nu_; }
    double score() const { return score_; }

private:
    std::size_t step_;
    AtomicMeasure nu_;
    double score_;
};

// K, when given, only feeds the dist_to_K diagnostics.
SolveResult solve_forward(const AtomicMeasure& m0, const ControlSystem& sys, const SolveConfig& cfg,
                          const SetOracle* K = nullptr);

SolveResult solve_viable(const AtomicMeasure& m0, const ControlSystem& sys, const SetOracle& K,
                         const SolveConfig& cfg);

// Mass-weighted distance of x(r) - x(s) to the sum over grid steps of
// dt * F(x(t_k), flow[t_k]), summed over windows of at most kMaxAumannPieces
// steps. s and r must be grid nodes.
double solution_residual(const SolveResult& result, const ControlSystem& sys, double s, double r);

} // namespace mfv
