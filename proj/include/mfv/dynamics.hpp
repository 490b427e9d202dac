#pragma once

// Controlled vector field f(x, m, u) over a finite control set U, the
// vectogram F(x, m) = co{f(x, m, u) : u in U} represented by its generating
// vertices, and distances to vectograms and to step-level Aumann integrals.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mfv/lifted.hpp"
#include "mfv/measure.hpp"

namespace mfv {

using VectorField =
    std::function<Velocity(const TorusPoint& x, const AtomicMeasure& m, const Eigen::VectorXd& u)>;

struct ControlSystem
{
    std::string name;
    std::size_t dim = 0;
    std::vector<Eigen::VectorXd> controls;
    VectorField field;
    // Lipschitz constant in (x, m) and bound on |f|; user supplied, checked by
    // sample_constants().
    double lipschitz_L = 0.0;
    double bound_R = 0.0;
};

// f(x, m, u) = u.
ControlSystem constant_controls(std::vector<Eigen::VectorXd> controls);

// f(x, m, u) = u + kappa * (integral of sin(2 pi (y_j - x_j)) m(dy))_j.
// L = 2 pi |kappa| sqrt(d), R = max |u| + |kappa| sqrt(d).
ControlSystem mean_drift(double kappa, std::vector<Eigen::VectorXd> controls);

struct VectogramVertices
{
    Eigen::MatrixXd vertices; // d x k, one column per control

    std::size_t size() const { return static_cast<std::size_t>(vertices.cols()); }
};

VectogramVertices vectogram(const ControlSystem& sys, const TorusPoint& x, const AtomicMeasure& m);

// Euclidean distance from v to co(verts).
double dist_to_vectogram(const Velocity& v, const VectogramVertices& verts);

// Nearest point of co(verts) to v.
Velocity project_to_vectogram(const Velocity& v, const VectogramVertices& verts);

// Integral of dist(v, F(x, base)) against b.
double feasibility_residual(const LiftedMeasure& b, const ControlSystem& sys);

struct AumannPiece
{
    double duration = 0.0;
    VectogramVertices verts;
};

inline constexpr std::size_t kMaxAumannPieces = 8;
inline constexpr std::size_t kMaxAumannVertices = 8;

// Distance from dx to sum_i duration_i * co(verts_i).
double dist_to_step_aumann(const Velocity& dx, const std::vector<AumannPiece>& pieces);

struct ConstantSample
{
    double max_norm = 0.0;
    double max_quotient = 0.0;
};

// Largest |f| and Lipschitz quotient |f(x1,m1,u) - f(x2,m2,u)| / (|x1-x2| + W1(m1,m2))
// over random (x, m) pairs with at most max_atoms atoms.
ConstantSample sample_constants(const ControlSystem& sys, std::size_t samples, std::uint64_t seed,
                                std::size_t max_atoms = 4);

} // namespace mfv
