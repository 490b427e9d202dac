#pragma once

// Constraint sets of measures, the finite-ladder tangency estimator, and the
// pointwise check that some feasible lifted measure is tangent to K.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mfv/dynamics.hpp"
#include "mfv/lifted.hpp"
#include "mfv/measure.hpp"

namespace mfv {

enum class SetKind { FiniteSet, ParametricCurve, DiracPairFamily };

std::string to_string(SetKind kind);

// A set K of measures on T^d, either an explicit finite list or the image of a
// parameter interval under a map t -> m(t) that is Lipschitz in W_1.
//
// Curves are searched on a grid of step resolution / lipschitz, then refined
// by golden-section search around the best node, so the reported distance is
// within resolution / 2 of the infimum over the curve.
class SetOracle : public MeasureSetOracle
{
public:
    using Curve = std::function<AtomicMeasure(double)>;

    static SetOracle finite(std::vector<AtomicMeasure> members, double resolution = 1e-12);
    static SetOracle curve(Curve curve, double t_min, double t_max, double lipschitz, double resolution);
    // {(delta_{c - t e} + delta_{c + t e}) / 2 : t in [0, epsilon]}.
    static SetOracle dirac_pair(const TorusPoint& center, const Velocity& direction, double epsilon,
                                double resolution);
    // {translate(base, t * direction) : t in [t_min, t_max]}.
    static SetOracle translated(const AtomicMeasure& base, const Velocity& direction, double t_min,
                                double t_max, double resolution);

    NearestMeasure nearest(const AtomicMeasure& m) const override;
    double resolution() const override { return resolution_; }
    std::size_t dim() const override { return dim_; }
    SetKind kind() const { return kind_; }

    // count measures spread over K (all members of a finite set).
    std::vector<AtomicMeasure> samples(std::size_t count) const;

private:
    SetOracle() = default;

    SetKind kind_ = SetKind::FiniteSet;
    std::size_t dim_ = 0;
    double resolution_ = 1e-12;
    std::vector<AtomicMeasure> members_;
    Curve curve_;
    double t_min_ = 0.0;
    double t_max_ = 0.0;
    double lipschitz_ = 1.0;
};

enum class Verdict { Tangent, NotTangent, Inconclusive };

std::string to_string(Verdict verdict);

struct TangencyReport
{
    std::vector<double> taus;
    std::vector<double> ratios;
    Verdict verdict = Verdict::Inconclusive;
    double threshold = 1e-3;
    std::string diagnostic;
};

inline constexpr double kDefaultTangencyThreshold = 1e-3;
// Roundoff allowed when checking that ratios do not increase down the ladder.
inline constexpr double kMonotonicitySlack = 1e-9;

// dist(shift(b, tau_k), K) / tau_k at tau_k = tau0 * 2^-k, k < levels.
TangencyReport tangency_estimate(const LiftedMeasure& b, const SetOracle& K, double tau0, int levels,
                                 double threshold = kDefaultTangencyThreshold);

struct WitnessOptions
{
    int levels = 3;
    double threshold = kDefaultTangencyThreshold;
    int restarts = 20;
    std::uint64_t seed = 0;
    // Smallest mixing step of the coordinate descent.
    double min_step = 1.0 / 64.0;
};

struct ConditionResult
{
    bool found = false;
    LiftedMeasure witness;
    double score = 0.0;
    TangencyReport report;
};

// Searches F(m) for a lifted measure tangent to K at m. Candidate fibers at
// atom x are (1 - lambda) sum_k w_k delta_{f_k} + lambda delta_{sum_k w_k f_k}
// over the vectogram vertices f_k of F(x, m); the score is the tangency ratio
// at the smallest ladder step.
ConditionResult viability_condition_check(const AtomicMeasure& m, const SetOracle& K,
                                          const ControlSystem& sys, double tau0,
                                          const WitnessOptions& options = {});

} // namespace mfv
