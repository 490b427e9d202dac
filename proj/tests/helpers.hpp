#pragma once

// Random instance generators and independent reference computations shared by
// the unit and acceptance tests. The references avoid the production code
// paths they check: W1 through a dense LP or permutation enumeration, hull
// distances through explicit 2-D geometry.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mfv/lifted.hpp"
#include "mfv/measure.hpp"
#include "mfv/transport.hpp"

namespace mfv::test {

inline Eigen::VectorXd vec(std::initializer_list<double> values)
{
    return Eigen::Map<const Eigen::VectorXd>(values.begin(), static_cast<Eigen::Index>(values.size()));
}

inline AtomicMeasure dirac(double x)
{
    return AtomicMeasure::dirac(TorusPoint{x});
}

inline AtomicMeasure pair(double a, double b, double wa = 0.5)
{
    return AtomicMeasure({TorusPoint{a}, TorusPoint{b}}, vec({wa, 1.0 - wa}));
}

class Random
{
public:
    explicit Random(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo = 0.0, double hi = 1.0)
    {
        return std::uniform_real_distribution<double>(lo, hi)(rng_);
    }

    std::size_t integer(std::size_t lo, std::size_t hi)
    {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
    }

    TorusPoint point(std::size_t d)
    {
        Eigen::VectorXd c(static_cast<Eigen::Index>(d));
        for (auto& x : c)
            x = uniform();
        return TorusPoint(c);
    }

    Eigen::VectorXd velocity(std::size_t d, double scale = 1.0)
    {
        Eigen::VectorXd v(static_cast<Eigen::Index>(d));
        for (auto& x : v)
            x = uniform(-scale, scale);
        return v;
    }

    Eigen::VectorXd simplex(std::size_t n)
    {
        Eigen::VectorXd w(static_cast<Eigen::Index>(n));
        for (auto& x : w)
            x = 0.05 + uniform();
        return w / w.sum();
    }

    AtomicMeasure measure(std::size_t d, std::size_t max_atoms)
    {
        const std::size_t n = integer(1, max_atoms);
        std::vector<TorusPoint> atoms;
        for (std::size_t i = 0; i < n; ++i)
            atoms.push_back(point(d));
        return AtomicMeasure(atoms, simplex(n));
    }

    Fiber fiber(std::size_t d, std::size_t max_size, double scale = 1.0)
    {
        const std::size_t k = integer(1, max_size);
        Eigen::MatrixXd V(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k));
        for (Eigen::Index c = 0; c < V.cols(); ++c)
            V.col(c) = velocity(d, scale);
        return make_fiber(V, simplex(k));
    }

    LiftedMeasure lifted(const AtomicMeasure& base, std::size_t max_fiber, double scale = 1.0)
    {
        std::vector<Fiber> fibers;
        for (std::size_t i = 0; i < base.size(); ++i)
            fibers.push_back(fiber(base.dim(), max_fiber, scale));
        return LiftedMeasure(base, std::move(fibers));
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

// Torus distance recomputed from scratch: each coordinate difference reduced
// to min(|delta|, 1 - |delta|).
inline double reference_torus_distance(const TorusPoint& a, const TorusPoint& b)
{
    double s = 0.0;
    for (std::size_t j = 0; j < a.dim(); ++j) {
        const double delta = std::abs(a[static_cast<Eigen::Index>(j)] - b[static_cast<Eigen::Index>(j)]);
        const double m = std::min(delta, 1.0 - delta);
        s += m * m;
    }
    return std::sqrt(s);
}

// W1 as the dense linear program over couplings, solved by the tableau
// simplex rather than the transportation code.
inline double w1_lp_oracle(const AtomicMeasure& a, const AtomicMeasure& b)
{
    const auto n = static_cast<Eigen::Index>(a.size());
    const auto m = static_cast<Eigen::Index>(b.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + m, n * m);
    Eigen::VectorXd rhs(n + m);
    Eigen::VectorXd c(n * m);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            A(i, i * m + j) = 1.0;
            A(n + j, i * m + j) = 1.0;
            c(i * m + j) = reference_torus_distance(a.atom(static_cast<std::size_t>(i)),
                                                    b.atom(static_cast<std::size_t>(j)));
        }
        rhs(i) = a.weight(static_cast<std::size_t>(i));
    }
    for (Eigen::Index j = 0; j < m; ++j)
        rhs(n + j) = b.weight(static_cast<std::size_t>(j));
    return solve_standard_lp(A, rhs, c).objective;
}

// W1 between two uniform n-point clouds: the optimum is attained at a
// permutation, so enumerate all of them.
inline double w1_permutation_oracle(const std::vector<TorusPoint>& a, const std::vector<TorusPoint>& b)
{
    std::vector<std::size_t> perm(a.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            cost += reference_torus_distance(a[i], b[perm[i]]);
        best = std::min(best, cost / static_cast<double>(a.size()));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Distance from p to the convex hull of planar points, via an explicit hull
// (monotone chain) and edge projections.
inline double hull_distance_2d(Eigen::Vector2d p, std::vector<Eigen::Vector2d> pts)
{
    std::sort(pts.begin(), pts.end(), [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return (a - b).norm() < 1e-14; }),
              pts.end());
    auto seg = [](const Eigen::Vector2d& q, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        const Eigen::Vector2d ab = b - a;
        const double len2 = ab.squaredNorm();
        const double t = len2 == 0 ? 0.0 : std::clamp((q - a).dot(ab) / len2, 0.0, 1.0);
        return (q - (a + t * ab)).norm();
    };
    if (pts.size() == 1)
        return (p - pts[0]).norm();
    auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
    };
    std::vector<Eigen::Vector2d> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& q : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], q) <= 0)
            --k;
        hull[k++] = q;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0)
            --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    double best = std::numeric_limits<double>::infinity();
    bool inside = hull.size() >= 3;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const auto& a = hull[i];
        const auto& b = hull[(i + 1) % hull.size()];
        best = std::min(best, seg(p, a, b));
        if (cross(a, b, p) < 0)
            inside = false;
    }
    return inside ? 0.0 : best;
}

// In one dimension sum_i dur_i * co(V_i) is the interval
// [sum dur_i min V_i, sum dur_i max V_i].
inline double aumann_interval_oracle(double dx, const std::vector<std::pair<double, std::vector<double>>>& pieces)
{
    double lo = 0.0;
    double hi = 0.0;
    for (const auto& [dur, v] : pieces) {
        lo += dur * *std::min_element(v.begin(), v.end());
        hi += dur * *std::max_element(v.begin(), v.end());
    }
    return dx < lo ? lo - dx : (dx > hi ? dx - hi : 0.0);
}

// Distance from delta_a to the symmetric pair curve {(delta_{c-t}+delta_{c+t})/2 : t in [0, eps]}
// in one dimension: W1 to a two-atom measure is the average distance to its
// atoms; minimized over a fine parameter grid.
inline double dirac_to_pair_curve_oracle(double a, double c, double eps, std::size_t grid = 200000)
{
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= grid; ++k) {
        const double t = eps * static_cast<double>(k) / static_cast<double>(grid);
        const double d = 0.5 * reference_torus_distance(TorusPoint{a}, TorusPoint{c - t}) +
                         0.5 * reference_torus_distance(TorusPoint{a}, TorusPoint{c + t});
        best = std::min(best, d);
    }
    return best;
}

} // namespace mfv::test
