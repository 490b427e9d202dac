#pragma once

// Geometry of the flat torus T^d = R^d / Z^d.
//
// Points are stored by their canonical representative in the half-open cube
// [0,1)^d. Tangent vectors (velocities, cover-space displacements) are plain
// Eigen vectors.

#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

#include "mfv/errors.hpp"

namespace mfv {

using Velocity = Eigen::VectorXd;

// Coordinates that agree within this distance (per coordinate, modulo 1) are
// treated as the same atom.
inline constexpr double kMergeTolerance = 1e-12;

template <typename Derived>
Eigen::VectorXd canonicalize(const Eigen::MatrixBase<Derived>& x)
{
    Eigen::VectorXd out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double c = x(i) - std::floor(x(i));
        // floor of a tiny negative number rounds the result up to exactly 1
        if (c >= 1.0)
            c = 0.0;
        out(i) = c;
    }
    return out;
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& x)
{
    return x.array().isFinite().all();
}

class TorusPoint
{
public:
    TorusPoint() = default;

    template <typename Derived>
    explicit TorusPoint(const Eigen::MatrixBase<Derived>& coords)
    {
        if (!all_finite(coords))
            throw Error("torus point coordinates must be finite");
        coords_ = canonicalize(coords);
    }

    TorusPoint(std::initializer_list<double> coords)
        : TorusPoint(Eigen::Map<const Eigen::VectorXd>(coords.begin(),
                                                       static_cast<Eigen::Index>(coords.size())))
    {
    }

    std::size_t dim() const { return static_cast<std::size_t>(coords_.size()); }
    const Eigen::VectorXd& coords() const { return coords_; }
    double operator[](Eigen::Index i) const { return coords_(i); }

private:
    Eigen::VectorXd coords_;
};

inline void require_same_dim(std::size_t expected, std::size_t actual)
{
    if (expected != actual)
        throw DimensionError(expected, actual);
}

// Shortest representative of b - a in the universal cover; each coordinate
// lies in [-1/2, 1/2].
inline Eigen::VectorXd displacement(const TorusPoint& a, const TorusPoint& b)
{
    require_same_dim(a.dim(), b.dim());
    Eigen::VectorXd delta = b.coords() - a.coords();
    for (Eigen::Index i = 0; i < delta.size(); ++i)
        delta(i) -= std::round(delta(i));
    return delta;
}

inline double torus_distance(const TorusPoint& a, const TorusPoint& b)
{
    return displacement(a, b).norm();
}

// Largest per-coordinate wrapped difference; used for atom identity.
inline double torus_max_coord_distance(const TorusPoint& a, const TorusPoint& b)
{
    return displacement(a, b).cwiseAbs().maxCoeff();
}

inline bool same_atom(const TorusPoint& a, const TorusPoint& b, double tol = kMergeTolerance)
{
    return torus_max_coord_distance(a, b) <= tol;
}

// x + tau * v, projected back to the torus.
template <typename Derived>
TorusPoint translate(const TorusPoint& x, const Eigen::MatrixBase<Derived>& v, double tau)
{
    require_same_dim(x.dim(), static_cast<std::size_t>(v.size()));
    return TorusPoint((x.coords() + tau * v).eval());
}

} // namespace mfv
