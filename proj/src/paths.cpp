#include "mfv/paths.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "mfv/transport.hpp"

namespace mfv {

namespace {

constexpr double kTimeTolerance = 1e-12;

std::string format_double(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace

Trajectory Trajectory::from_displacements(const TorusPoint& start, const std::vector<Velocity>& steps)
{
    Trajectory out;
    out.points.reserve(steps.size() + 1);
    out.points.push_back(start);
    for (const auto& step : steps)
        out.points.push_back(translate(out.points.back(), step, 1.0));
    out.displacements = steps;
    return out;
}

PathBundle::PathBundle(std::vector<double> grid, std::vector<Trajectory> paths, Eigen::VectorXd weights)
    : grid_(std::move(grid)), paths_(std::move(paths)), weights_(std::move(weights))
{
    if (grid_.empty())
        throw Error("path bundle needs a nonempty time grid");
    for (std::size_t k = 1; k < grid_.size(); ++k)
        if (!(grid_[k] > grid_[k - 1]))
            throw Error("path bundle grid must be strictly increasing");
    if (paths_.empty() || static_cast<Eigen::Index>(paths_.size()) != weights_.size())
        throw Error("path bundle needs one weight per trajectory and at least one trajectory");

    const std::size_t d = paths_.front().points.empty() ? 0 : paths_.front().points.front().dim();
    for (const auto& p : paths_) {
        if (p.points.size() != grid_.size() || p.displacements.size() + 1 != grid_.size())
            throw Error("trajectory does not match the bundle grid");
        for (std::size_t k = 0; k < p.displacements.size(); ++k) {
            require_same_dim(d, p.points[k].dim());
            if (!same_atom(translate(p.points[k], p.displacements[k], 1.0), p.points[k + 1], 1e-9))
                throw Error("trajectory displacement is inconsistent with its nodes");
        }
    }
    if ((weights_.array() <= 0).any() || !all_finite(weights_))
        throw Error("path bundle weights must be positive");
    const double total = weights_.sum();
    if (std::abs(total - 1.0) > 1e-9)
        throw Error("path bundle weights sum to " + std::to_string(total) + ", expected 1");
    weights_ /= total;
}

std::size_t PathBundle::segment_of(double t) const
{
    if (t < grid_.front() - kTimeTolerance || t > grid_.back() + kTimeTolerance)
        throw Error("time " + format_double(t) + " is outside the bundle's grid span");
    if (grid_.size() == 1)
        return 0;
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
    const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - grid_.begin()) - 1));
    return std::min(k, grid_.size() - 2);
}

std::size_t PathBundle::node_index(double t) const
{
    for (std::size_t k = 0; k < grid_.size(); ++k)
        if (std::abs(grid_[k] - t) <= kTimeTolerance)
            return k;
    throw Error("time " + format_double(t) + " is not a grid node");
}

TorusPoint PathBundle::position(std::size_t i, double t) const
{
    const Trajectory& p = paths_[i];
    const std::size_t k = segment_of(t);
    if (grid_.size() == 1 || t <= grid_[k])
        return p.points[k];
    if (t >= grid_[k + 1])
        return p.points[k + 1];
    const double frac = (t - grid_[k]) / (grid_[k + 1] - grid_[k]);
    return translate(p.points[k], p.displacements[k], frac);
}

Velocity PathBundle::cover_displacement(std::size_t i, double s, double t) const
{
    const Trajectory& p = paths_[i];
    auto cumulative = [&](double time) {
        Velocity total = Velocity::Zero(static_cast<Eigen::Index>(dim()));
        const std::size_t k = segment_of(time);
        for (std::size_t q = 0; q < k; ++q)
            total += p.displacements[q];
        if (grid_.size() > 1) {
            const double frac = std::clamp((time - grid_[k]) / (grid_[k + 1] - grid_[k]), 0.0, 1.0);
            total += frac * p.displacements[k];
        }
        return total;
    };
    return cumulative(t) - cumulative(s);
}

double PathBundle::max_speed() const
{
    double speed = 0.0;
    for (const auto& p : paths_)
        for (std::size_t k = 0; k < p.displacements.size(); ++k)
            speed = std::max(speed, p.displacements[k].norm() / (grid_[k + 1] - grid_[k]));
    return speed;
}

AtomicMeasure evaluate(const PathBundle& chi, double t)
{
    std::vector<TorusPoint> points;
    points.reserve(chi.size());
    for (std::size_t i = 0; i < chi.size(); ++i)
        points.push_back(chi.position(i, t));
    return AtomicMeasure(points, chi.weights());
}

PathBundle concatenate(const PathBundle& chi1, const PathBundle& chi2)
{
    const double r = chi1.end_time();
    if (std::abs(chi2.start_time() - r) > kTimeTolerance)
        throw Error("concatenation requires chi2 to start where chi1 ends");
    const AtomicMeasure end1 = evaluate(chi1, r);
    const AtomicMeasure start2 = evaluate(chi2, r);
    const char* mismatch = "concatenation requires matching marginals at the junction";
    if (end1.dim() != start2.dim() || w1_distance(end1, start2) > 1e-10)
        throw MarginalMismatchError(mismatch);

    std::vector<std::vector<std::size_t>> continuations(start2.size());
    for (std::size_t j = 0; j < chi2.size(); ++j)
        continuations[*start2.find(chi2.path(j).points.front())].push_back(j);

    std::vector<double> grid = chi1.grid();
    grid.insert(grid.end(), chi2.grid().begin() + 1, chi2.grid().end());

    std::vector<Trajectory> paths;
    std::vector<double> weights;
    for (std::size_t i = 0; i < chi1.size(); ++i) {
        const auto atom = start2.find(chi1.path(i).back());
        if (!atom)
            throw MarginalMismatchError(mismatch);
        const double conditional_mass = start2.weight(*atom);
        for (std::size_t j : continuations[*atom]) {
            Trajectory joined = chi1.path(i);
            const Trajectory& tail = chi2.path(j);
            joined.points.insert(joined.points.end(), tail.points.begin() + 1, tail.points.end());
            joined.displacements.insert(joined.displacements.end(), tail.displacements.begin(),
                                        tail.displacements.end());
            paths.push_back(std::move(joined));
            weights.push_back(chi1.weight(i) * chi2.weight(j) / conditional_mass);
        }
    }
    return PathBundle(std::move(grid), std::move(paths),
                      Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size())));
}

double bundle_distance(const PathBundle& chi1, const PathBundle& chi2, std::size_t max_paths)
{
    if (std::abs(chi1.start_time() - chi2.start_time()) > kTimeTolerance ||
        std::abs(chi1.end_time() - chi2.end_time()) > kTimeTolerance)
        throw Error("bundle distance requires bundles on the same time span");
    require_same_dim(chi1.dim(), chi2.dim());
    if (chi1.size() > max_paths || chi2.size() > max_paths)
        throw SizeLimitError("bundle distance is limited to " + std::to_string(max_paths) +
                             " trajectories per bundle");

    std::vector<double> nodes = chi1.grid();
    nodes.insert(nodes.end(), chi2.grid().begin(), chi2.grid().end());
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end(),
                            [](double a, double b) { return std::abs(a - b) <= kTimeTolerance; }),
                nodes.end());

    const auto n1 = static_cast<Eigen::Index>(chi1.size());
    const auto n2 = static_cast<Eigen::Index>(chi2.size());
    Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(n1, n2);
    for (double t : nodes) {
        std::vector<TorusPoint> p1, p2;
        for (std::size_t i = 0; i < chi1.size(); ++i)
            p1.push_back(chi1.position(i, t));
        for (std::size_t j = 0; j < chi2.size(); ++j)
            p2.push_back(chi2.position(j, t));
        for (Eigen::Index i = 0; i < n1; ++i)
            for (Eigen::Index j = 0; j < n2; ++j)
                cost(i, j) = std::max(cost(i, j), torus_distance(p1[static_cast<std::size_t>(i)],
                                                                 p2[static_cast<std::size_t>(j)]));
    }
    return solve_transport(chi1.weights(), chi2.weights(), cost).cost;
}

LiftedMeasure difference_quotient(const PathBundle& chi, double tau)
{
    if (!(tau > 0))
        throw Error("difference quotient requires tau > 0");
    const double t0 = chi.start_time();
    if (t0 + tau > chi.end_time() + kTimeTolerance)
        throw Error("difference quotient step exceeds the bundle's grid span");
    std::vector<TorusPoint> starts;
    std::vector<Velocity> velocities;
    for (std::size_t i = 0; i < chi.size(); ++i) {
        starts.push_back(chi.path(i).points.front());
        velocities.push_back(chi.cover_displacement(i, t0, t0 + tau) / tau);
    }
    return lifted_from_samples(starts, velocities, chi.weights());
}

void write_trace_csv(std::ostream& out, const PathBundle& chi)
{
    out << "traj_id,weight,t";
    for (std::size_t j = 0; j < chi.dim(); ++j)
        out << ",x_" << (j + 1);
    out << '\n';
    for (std::size_t i = 0; i < chi.size(); ++i) {
        const std::string w = format_double(chi.weight(i));
        for (std::size_t k = 0; k < chi.grid().size(); ++k) {
            out << i << ',' << w << ',' << format_double(chi.grid()[k]);
            const TorusPoint& x = chi.path(i).points[k];
            for (std::size_t j = 0; j < x.dim(); ++j)
                out << ',' << format_double(x[static_cast<Eigen::Index>(j)]);
            out << '\n';
        }
    }
}

PathBundle read_trace_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line))
        throw Error("trace CSV is empty");
    const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    if (columns < 4)
        throw Error("trace CSV header must contain traj_id, weight, t and at least one coordinate");
    const std::size_t d = columns - 3;

    struct Rows
    {
        double weight = 0.0;
        std::vector<double> times;
        std::vector<TorusPoint> points;
    };
    std::map<long, Rows> by_id;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> values;
        while (std::getline(ss, cell, ','))
            values.push_back(std::stod(cell));
        if (values.size() != columns)
            throw Error("trace CSV row has " + std::to_string(values.size()) + " fields, expected " +
                        std::to_string(columns));
        Rows& rows = by_id[static_cast<long>(values[0])];
        rows.weight = values[1];
        rows.times.push_back(values[2]);
        rows.points.emplace_back(Eigen::Map<const Eigen::VectorXd>(values.data() + 3, static_cast<Eigen::Index>(d)));
    }
    if (by_id.empty())
        throw Error("trace CSV has no rows");

    const std::vector<double> grid = by_id.begin()->second.times;
    std::vector<Trajectory> paths;
    std::vector<double> weights;
    for (auto& [id, rows] : by_id) {
        if (rows.times != grid)
            throw Error("trace CSV trajectory " + std::to_string(id) + " uses a different grid");
        Trajectory p;
        p.points = rows.points;
        for (std::size_t k = 0; k + 1 < p.points.size(); ++k)
            p.displacements.push_back(displacement(p.points[k], p.points[k + 1]));
        paths.push_back(std::move(p));
        weights.push_back(rows.weight);
    }
    return PathBundle(grid, std::move(paths),
                      Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size())));
}

} // namespace mfv
