#pragma once

// Invariant checks on a finished solve: kinematic bounds, the necessity
// pipeline through difference quotients, and the distance and residual
// bounds of the tracking scheme.

#include <string>
#include <vector>

#include "mfv/solver.hpp"

namespace mfv {

struct CertificateCheck
{
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    bool pass = false;
};

// K may be null for forward runs; the K-dependent checks are then skipped.
std::vector<CertificateCheck> certify_run(const SolveResult& result, const ControlSystem& sys,
                                          const SetOracle* K);

// Result rebuilt from a bundle alone (flow from evaluation, no diagnostics),
// as read back from a trace file.
SolveResult result_from_bundle(PathBundle bundle, SolveMode mode);

} // namespace mfv
