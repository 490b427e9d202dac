#include "mfv/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mfv {

namespace {

CertificateCheck check(std::string name, double value, double bound)
{
    return {std::move(name), value, bound, value <= bound};
}

std::string tau_label(const char* what, double tau)
{
    std::ostringstream os;
    os.precision(6);
    os << what << " (tau = " << tau << ")";
    return os.str();
}

} // namespace

SolveResult result_from_bundle(PathBundle bundle, SolveMode mode)
{
    SolveResult result;
    result.mode = mode;
    result.bundle = std::move(bundle);
    for (double t : result.bundle.grid())
        result.flow.push_back(evaluate(result.bundle, t));
    return result;
}

std::vector<CertificateCheck> certify_run(const SolveResult& result, const ControlSystem& sys,
                                          const SetOracle* K)
{
    const PathBundle& chi = result.bundle;
    const auto& grid = chi.grid();
    const double R = sys.bound_R;
    const double L = sys.lipschitz_L;
    const double T = chi.end_time() - chi.start_time();
    const std::size_t n = grid.size() - 1;
    const double dt = result.step();
    std::vector<CertificateCheck> out;

    out.push_back(check("segment speed", chi.max_speed(), R + 1e-12));

    double flow_gap = 0.0;
    double lipschitz_excess = 0.0;
    for (std::size_t a = 0; a < grid.size(); ++a) {
        flow_gap = std::max(flow_gap, w1_distance(result.flow[a], evaluate(chi, grid[a])));
        for (std::size_t b = a + 1; b < grid.size(); ++b)
            lipschitz_excess = std::max(lipschitz_excess, w1_distance(result.flow[a], result.flow[b]) -
                                                              R * std::abs(grid[b] - grid[a]));
    }
    out.push_back(check("flow equals bundle evaluation", flow_gap, 1e-10));
    out.push_back(check("flow Lipschitz excess", lipschitz_excess, 1e-9));

    for (double tau : {dt, 2 * dt, 4 * dt}) {
        if (tau > T * (1 + 1e-12) || n == 0)
            continue;
        const LiftedMeasure beta = difference_quotient(chi, tau);
        out.push_back(check(tau_label("difference-quotient feasibility", tau), feasibility_residual(beta, sys),
                            L * R * tau + 1e-6));
        const AtomicMeasure shifted = shift(beta, tau);
        const AtomicMeasure& at_tau = result.flow[chi.node_index(chi.start_time() + tau)];
        double gap = w1_distance(shifted, at_tau);
        if (K)
            gap = std::max(gap, std::abs(K->nearest(shifted).distance - K->nearest(at_tau).distance));
        out.push_back(check(tau_label("shifted quotient equals flow", tau), gap, 1e-12));
    }

    if (K && result.mode == SolveMode::ViableTracking) {
        double worst = 0.0;
        for (const auto& m : result.flow)
            worst = std::max(worst, K->nearest(m).distance);
        out.push_back(check("distance to K", worst, (T + R) / static_cast<double>(n) + K->resolution()));
    }

    if (n > 0)
        out.push_back(check("solution residual", solution_residual(result, sys, grid.front(), grid.back()),
                            T * (1 + 2 * L * T + 2 * L * R) / static_cast<double>(n) + 1e-6));
    return out;
}

} // namespace mfv
