#pragma once

// Exact solvers for the discrete linear programs used throughout the library.
//
//  - solve_transport: transportation simplex on a dense bipartite cost matrix.
//    This is the production path for W_1 between atomic measures.
//  - solve_standard_lp: two-phase dense tableau simplex (Bland's rule) for
//    min c'x s.t. Ax = b, x >= 0. Slow, but independent of the transportation
//    code, so it serves as a cross-check.

#include <cstddef>

#include <Eigen/Dense>

namespace mfv {

struct TransportSolution
{
    Eigen::MatrixXd flow;
    double cost = 0.0;
    std::size_t pivots = 0;
};

// supply and demand must be nonnegative with (almost) equal totals; demand is
// rescaled to the supply total before solving.
TransportSolution solve_transport(const Eigen::VectorXd& supply,
                                  const Eigen::VectorXd& demand,
                                  const Eigen::MatrixXd& cost);

struct LinearProgramSolution
{
    Eigen::VectorXd x;
    double objective = 0.0;
};

// Throws mfv::Error if the program is infeasible or unbounded.
LinearProgramSolution solve_standard_lp(const Eigen::MatrixXd& A,
                                        const Eigen::VectorXd& b,
                                        const Eigen::VectorXd& c);

} // namespace mfv
