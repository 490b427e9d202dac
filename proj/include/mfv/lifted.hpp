#pragma once

// Probability measures on the tangent bundle T^d x R^d whose position marginal
// is a fixed atomic measure (the space L(m)), together with the lifted
// Wasserstein metric, the shift map (x, v) -> x + tau v, velocity rescaling and
// composition with transport plans.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "mfv/measure.hpp"

namespace mfv {

// Conditional velocity distribution at one base atom. Columns of `velocities`
// are the support points.
struct Fiber
{
    Eigen::MatrixXd velocities;
    Eigen::VectorXd weights;

    std::size_t size() const { return static_cast<std::size_t>(weights.size()); }
    Velocity velocity(std::size_t k) const { return velocities.col(static_cast<Eigen::Index>(k)); }
};

// Builds a normalized fiber, merging velocities that agree within
// kMergeTolerance and dropping zero weights.
Fiber make_fiber(const Eigen::MatrixXd& velocities, const Eigen::VectorXd& weights);
Fiber dirac_fiber(const Velocity& v);

class LiftedMeasure
{
public:
    LiftedMeasure() = default;
    LiftedMeasure(AtomicMeasure base, std::vector<Fiber> fibers);

    // Every atom carries the single velocity v.
    static LiftedMeasure constant(const AtomicMeasure& base, const Velocity& v);
    // Velocity field sampled on the atoms.
    static LiftedMeasure from_field(const AtomicMeasure& base, const std::vector<Velocity>& field);

    const AtomicMeasure& base() const { return base_; }
    const Fiber& fiber(std::size_t i) const { return fibers_[i]; }
    const std::vector<Fiber>& fibers() const { return fibers_; }
    std::size_t dim() const { return base_.dim(); }
    // Number of (atom, velocity) support points.
    std::size_t support_size() const;
    // Integral of |v| against the measure.
    double first_moment() const;

private:
    AtomicMeasure base_;
    std::vector<Fiber> fibers_;
};

// Weighted (position, velocity) samples grouped by position atom.
LiftedMeasure lifted_from_samples(const std::vector<TorusPoint>& points,
                                  const std::vector<Velocity>& velocities,
                                  const Eigen::VectorXd& weights);

// [sum_i m_i W_p^p(fiber_i(b1), fiber_i(b2))]^(1/p), p in {1, 2}.
double lifted_metric(const LiftedMeasure& b1, const LiftedMeasure& b2, double p = 1.0);

// Same quantity obtained from one linear program over couplings of
// (x, v1, v2) triples. Capped at max_support support points per argument.
double lifted_metric_joint_oracle(const LiftedMeasure& b1, const LiftedMeasure& b2, double p = 1.0,
                                  std::size_t max_support = 64);

// Pushforward of b under (x, v) -> x + tau v.
AtomicMeasure shift(const LiftedMeasure& b, double tau);

// Pushforward of b under (x, v) -> (x, a v).
LiftedMeasure rescale(const LiftedMeasure& b, double a);

// plan * b for a plan from m' to b.base(); the result lives over m'.
LiftedMeasure compose(const TransportPlan& plan, const LiftedMeasure& b);

} // namespace mfv
