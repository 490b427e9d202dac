#pragma once

// Finitely supported probability measures on the torus, exact 1-Wasserstein
// distance with its optimal plan, and pushforwards.

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mfv/torus.hpp"

namespace mfv {

// Probability measure with finitely many atoms. Atoms closer than
// kMergeTolerance are merged at construction; zero weights are dropped.
// Atom order is the order of first occurrence.
class AtomicMeasure
{
public:
    AtomicMeasure() = default;
    AtomicMeasure(const std::vector<TorusPoint>& atoms, const Eigen::VectorXd& weights);

    static AtomicMeasure dirac(const TorusPoint& x);
    // Equal weights on the given points.
    static AtomicMeasure uniform(const std::vector<TorusPoint>& atoms);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return atoms_.size(); }
    const TorusPoint& atom(std::size_t i) const { return atoms_[i]; }
    const std::vector<TorusPoint>& atoms() const { return atoms_; }
    double weight(std::size_t i) const { return weights_(static_cast<Eigen::Index>(i)); }
    const Eigen::VectorXd& weights() const { return weights_; }

    std::optional<std::size_t> find(const TorusPoint& x, double tol = kMergeTolerance) const;

private:
    std::size_t dim_ = 0;
    std::vector<TorusPoint> atoms_;
    Eigen::VectorXd weights_;
};

// Same atoms (up to order and tol) with weights equal within weight_tol.
bool same_measure(const AtomicMeasure& a, const AtomicMeasure& b,
                  double weight_tol = 1e-10, double tol = kMergeTolerance);

// Coupling between two atomic measures; mass(i, j) is the mass moved from
// source atom i to target atom j.
struct TransportPlan
{
    AtomicMeasure source;
    AtomicMeasure target;
    Eigen::MatrixXd mass;

    // Largest violation of the row/column marginal constraints.
    double marginal_error() const;

    static TransportPlan identity(const AtomicMeasure& m);
};

// Composition of couplings through a shared middle marginal:
// (first * second)(a, c) = sum_b first(a, b) second(b, c) / mid(b).
TransportPlan compose(const TransportPlan& first, const TransportPlan& second);

struct TransportOptions
{
    std::size_t max_atoms = 512;
};

struct WassersteinResult
{
    double distance = 0.0;
    TransportPlan plan;
};

Eigen::MatrixXd torus_cost_matrix(const AtomicMeasure& a, const AtomicMeasure& b);

WassersteinResult wasserstein1(const AtomicMeasure& m1, const AtomicMeasure& m2,
                               const TransportOptions& options = {});

inline double w1_distance(const AtomicMeasure& m1, const AtomicMeasure& m2)
{
    return wasserstein1(m1, m2).distance;
}

AtomicMeasure pushforward(const AtomicMeasure& m,
                          const std::function<TorusPoint(const TorusPoint&)>& h);

struct NearestMeasure
{
    double distance = 0.0;
    AtomicMeasure witness;
};

// Distance/projection interface for a set K of measures. Implementations live
// in viability.hpp. The reported distance is the W_1 distance to the returned
// witness, which belongs to K.
class MeasureSetOracle
{
public:
    virtual ~MeasureSetOracle() = default;
    virtual NearestMeasure nearest(const AtomicMeasure& m) const = 0;
    virtual double resolution() const = 0;
    virtual std::size_t dim() const = 0;
};

inline NearestMeasure dist_to_measure_set(const AtomicMeasure& m, const MeasureSetOracle& K)
{
    return K.nearest(m);
}

} // namespace mfv
