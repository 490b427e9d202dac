#pragma once

// Finitely supported measures on trajectory space: piecewise-linear torus
// paths on a shared time grid, evaluation maps, concatenation, the W_1
// distance with uniform ground cost, and difference quotients.

#include <cstddef>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "mfv/lifted.hpp"
#include "mfv/measure.hpp"

namespace mfv {

// A polygonal path. Segment k runs from points[k] by the cover-space
// displacement displacements[k], so wraparound is never ambiguous. The time
// grid lives in the owning PathBundle.
struct Trajectory
{
    std::vector<TorusPoint> points;
    std::vector<Velocity> displacements;

    static Trajectory from_displacements(const TorusPoint& start, const std::vector<Velocity>& steps);
    const TorusPoint& back() const { return points.back(); }
};

class PathBundle
{
public:
    PathBundle() = default;
    PathBundle(std::vector<double> grid, std::vector<Trajectory> paths, Eigen::VectorXd weights);

    const std::vector<double>& grid() const { return grid_; }
    const std::vector<Trajectory>& paths() const { return paths_; }
    const Trajectory& path(std::size_t i) const { return paths_[i]; }
    const Eigen::VectorXd& weights() const { return weights_; }
    double weight(std::size_t i) const { return weights_(static_cast<Eigen::Index>(i)); }
    std::size_t size() const { return paths_.size(); }
    std::size_t dim() const { return paths_.front().points.front().dim(); }
    double start_time() const { return grid_.front(); }
    double end_time() const { return grid_.back(); }

    // Position of path i at time t (linear interpolation within a segment).
    TorusPoint position(std::size_t i, double t) const;
    // Cover-space displacement of path i between times s <= t.
    Velocity cover_displacement(std::size_t i, double s, double t) const;
    // Index of the grid node equal to t within 1e-12, or throws.
    std::size_t node_index(double t) const;

    // Largest segment speed |displacement| / dt over all paths.
    double max_speed() const;

private:
    std::size_t segment_of(double t) const;

    std::vector<double> grid_;
    std::vector<Trajectory> paths_;
    Eigen::VectorXd weights_;
};

// e_t # chi.
AtomicMeasure evaluate(const PathBundle& chi, double t);

// chi1 (on [s, r]) spliced with chi2 (on [r, theta]) through the conditional
// distribution of chi2 given its starting point.
PathBundle concatenate(const PathBundle& chi1, const PathBundle& chi2);

// W_1 over path space with ground cost max_t rho(x1(t), x2(t)) taken over the
// union of both grids.
double bundle_distance(const PathBundle& chi1, const PathBundle& chi2, std::size_t max_paths = 128);

// Pushforward under x(.) -> (x(t0), (x(t0 + tau) - x(t0)) / tau).
LiftedMeasure difference_quotient(const PathBundle& chi, double tau);

// traj_id, weight, t, x_1..x_d; one row per (trajectory, grid node).
void write_trace_csv(std::ostream& out, const PathBundle& chi);
// Inverse of write_trace_csv. Displacements are rebuilt as shortest torus
// displacements, which is exact when every segment moves less than 1/2 per
// coordinate.
PathBundle read_trace_csv(std::istream& in);

} // namespace mfv
