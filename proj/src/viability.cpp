#include "mfv/viability.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace mfv {

std::string to_string(SetKind kind)
{
    switch (kind) {
    case SetKind::FiniteSet:
        return "finite-set";
    case SetKind::ParametricCurve:
        return "parametric-curve";
    case SetKind::DiracPairFamily:
        return "dirac-pair-family";
    }
    return "unknown";
}

std::string to_string(Verdict verdict)
{
    switch (verdict) {
    case Verdict::Tangent:
        return "tangent";
    case Verdict::NotTangent:
        return "not-tangent";
    case Verdict::Inconclusive:
        return "inconclusive";
    }
    return "unknown";
}

SetOracle SetOracle::finite(std::vector<AtomicMeasure> members, double resolution)
{
    if (members.empty())
        throw Error("finite constraint set must be nonempty");
    if (!(resolution > 0))
        throw Error("oracle resolution must be positive");
    SetOracle K;
    K.kind_ = SetKind::FiniteSet;
    K.dim_ = members.front().dim();
    for (const auto& m : members)
        require_same_dim(K.dim_, m.dim());
    K.members_ = std::move(members);
    K.resolution_ = resolution;
    return K;
}

SetOracle SetOracle::curve(Curve curve, double t_min, double t_max, double lipschitz, double resolution)
{
    if (!(t_max >= t_min))
        throw Error("curve parameter interval is empty");
    if (!(resolution > 0) || !(lipschitz > 0))
        throw Error("curve oracle needs positive resolution and Lipschitz constant");
    SetOracle K;
    K.kind_ = SetKind::ParametricCurve;
    K.curve_ = std::move(curve);
    K.t_min_ = t_min;
    K.t_max_ = t_max;
    K.lipschitz_ = lipschitz;
    K.resolution_ = resolution;
    K.dim_ = K.curve_(t_min).dim();
    return K;
}

SetOracle SetOracle::dirac_pair(const TorusPoint& center, const Velocity& direction, double epsilon,
                                double resolution)
{
    require_same_dim(center.dim(), static_cast<std::size_t>(direction.size()));
    if (!(epsilon >= 0) || !(direction.norm() > 0))
        throw Error("Dirac-pair family needs epsilon >= 0 and a nonzero direction");
    auto pair = [center, direction](double t) {
        return AtomicMeasure({translate(center, direction, -t), translate(center, direction, t)},
                             Eigen::Vector2d(0.5, 0.5));
    };
    SetOracle K = curve(pair, 0.0, epsilon, direction.norm(), resolution);
    K.kind_ = SetKind::DiracPairFamily;
    return K;
}

SetOracle SetOracle::translated(const AtomicMeasure& base, const Velocity& direction, double t_min,
                                double t_max, double resolution)
{
    require_same_dim(base.dim(), static_cast<std::size_t>(direction.size()));
    if (!(direction.norm() > 0))
        throw Error("translated-measure curve needs a nonzero direction");
    auto moved = [base, direction](double t) {
        return pushforward(base, [&](const TorusPoint& x) { return translate(x, direction, t); });
    };
    return curve(moved, t_min, t_max, direction.norm(), resolution);
}

NearestMeasure SetOracle::nearest(const AtomicMeasure& m) const
{
    require_same_dim(dim_, m.dim());
    if (kind_ == SetKind::FiniteSet) {
        NearestMeasure best{w1_distance(m, members_.front()), members_.front()};
        for (std::size_t i = 1; i < members_.size(); ++i) {
            const double d = w1_distance(m, members_[i]);
            if (d < best.distance)
                best = {d, members_[i]};
        }
        return best;
    }

    auto distance_at = [&](double t) { return w1_distance(m, curve_(t)); };
    const double span = t_max_ - t_min_;
    const double step = resolution_ / lipschitz_;
    const auto nodes = static_cast<std::size_t>(std::max(1.0, std::ceil(span / step)));
    auto node = [&](std::size_t k) {
        return k == nodes ? t_max_ : t_min_ + span * static_cast<double>(k) / static_cast<double>(nodes);
    };

    std::size_t best_k = 0;
    double best_d = distance_at(node(0));
    for (std::size_t k = 1; k <= nodes; ++k) {
        const double d = distance_at(node(k));
        if (d < best_d) {
            best_d = d;
            best_k = k;
        }
    }
    double best_t = node(best_k);

    // golden-section refinement inside the neighbouring grid cells
    double lo = node(best_k == 0 ? 0 : best_k - 1);
    double hi = node(std::min(best_k + 1, nodes));
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - inv_phi * (hi - lo);
    double b = lo + inv_phi * (hi - lo);
    double fa = distance_at(a);
    double fb = distance_at(b);
    for (int iter = 0; iter < 100 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++iter) {
        if (fa <= fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = distance_at(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = distance_at(b);
        }
    }
    if (fa < best_d) {
        best_d = fa;
        best_t = a;
    }
    if (fb < best_d) {
        best_d = fb;
        best_t = b;
    }
    return {best_d, curve_(best_t)};
}

std::vector<AtomicMeasure> SetOracle::samples(std::size_t count) const
{
    if (kind_ == SetKind::FiniteSet)
        return members_;
    std::vector<AtomicMeasure> out;
    const std::size_t n = std::max<std::size_t>(count, 1);
    for (std::size_t k = 0; k < n; ++k) {
        const double frac = n == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(n - 1);
        out.push_back(curve_(t_min_ + frac * (t_max_ - t_min_)));
    }
    return out;
}

namespace {

std::string format_number(double x)
{
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

} // namespace

TangencyReport tangency_estimate(const LiftedMeasure& b, const SetOracle& K, double tau0, int levels,
                                 double threshold)
{
    require_same_dim(K.dim(), b.dim());
    if (!(tau0 > 0))
        throw Error("tangency ladder needs tau0 > 0");
    if (levels < 3)
        throw Error("tangency ladder needs at least 3 levels");
    if (!(threshold > 0))
        throw Error("tangency threshold must be positive");

    TangencyReport report;
    report.threshold = threshold;
    for (int k = 0; k < levels; ++k) {
        const double tau = std::ldexp(tau0, -k);
        report.taus.push_back(tau);
        report.ratios.push_back(K.nearest(shift(b, tau)).distance / tau);
    }

    const std::size_t n = report.ratios.size();
    const double final_ratio = report.ratios.back();
    bool settling = true;
    for (std::size_t k = n - 2; k < n; ++k)
        settling = settling && report.ratios[k] <= report.ratios[k - 1] + kMonotonicitySlack;

    if (K.resolution() > report.taus.back()) {
        report.verdict = Verdict::Inconclusive;
        report.diagnostic = "oracle resolution " + format_number(K.resolution()) +
                            " is coarser than the smallest step " + format_number(report.taus.back());
    } else if (final_ratio >= threshold) {
        report.verdict = Verdict::NotTangent;
        report.diagnostic = "final ratio " + format_number(final_ratio) + " is above the threshold";
    } else if (!settling) {
        report.verdict = Verdict::Inconclusive;
        report.diagnostic = "final ratio is below the threshold but the last ratios are increasing";
    } else {
        report.verdict = Verdict::Tangent;
    }
    return report;
}

namespace {

// Below this score a candidate counts as exactly tangent and the search stops.
constexpr double kSettledScore = 1e-10;

struct FiberParams
{
    Eigen::VectorXd mix;
    double collapse = 0.0;
};

class WitnessSearch
{
public:
    WitnessSearch(const AtomicMeasure& m, const SetOracle& K, const ControlSystem& sys, double tau)
        : m_(m), K_(K), tau_(tau)
    {
        for (std::size_t i = 0; i < m.size(); ++i)
            vertices_.push_back(vectogram(sys, m.atom(i), m).vertices);
    }

    LiftedMeasure build(const std::vector<FiberParams>& params) const
    {
        std::vector<Fiber> fibers;
        fibers.reserve(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            const Eigen::MatrixXd& V = vertices_[i];
            const FiberParams& p = params[i];
            const Eigen::Index k = V.cols();
            Eigen::MatrixXd vel(V.rows(), k + 1);
            vel.leftCols(k) = V;
            vel.col(k) = V * p.mix;
            Eigen::VectorXd w(k + 1);
            w.head(k) = (1.0 - p.collapse) * p.mix;
            w(k) = p.collapse;
            fibers.push_back(make_fiber(vel, w));
        }
        return LiftedMeasure(m_, std::move(fibers));
    }

    double score(const std::vector<FiberParams>& params) const
    {
        return K_.nearest(shift(build(params), tau_)).distance / tau_;
    }

    std::size_t fibers() const { return vertices_.size(); }
    Eigen::Index vertex_count(std::size_t i) const { return vertices_[i].cols(); }

    bool trivial() const
    {
        return std::all_of(vertices_.begin(), vertices_.end(),
                           [](const Eigen::MatrixXd& V) { return V.cols() == 1; });
    }

    double descend(std::vector<FiberParams>& params, double min_step) const
    {
        double current = score(params);
        for (double step = 1.0; step >= min_step && current > kSettledScore;) {
            bool improved = false;
            for (std::size_t i = 0; i < params.size() && current > kSettledScore; ++i) {
                const Eigen::Index k = vertex_count(i);
                if (k == 1)
                    continue;
                for (Eigen::Index v = 0; v < k; ++v) {
                    std::vector<FiberParams> candidate = params;
                    Eigen::VectorXd& mix = candidate[i].mix;
                    mix *= (1.0 - step);
                    mix(v) += step;
                    if ((mix - params[i].mix).cwiseAbs().maxCoeff() < 1e-15)
                        continue;
                    try_accept(candidate, params, current, improved);
                }
                for (double dir : {1.0, -1.0}) {
                    std::vector<FiberParams> candidate = params;
                    candidate[i].collapse = std::clamp(params[i].collapse + dir * step, 0.0, 1.0);
                    if (candidate[i].collapse == params[i].collapse)
                        continue;
                    try_accept(candidate, params, current, improved);
                }
            }
            if (!improved)
                step /= 2.0;
        }
        return current;
    }

private:
    void try_accept(std::vector<FiberParams>& candidate, std::vector<FiberParams>& params, double& current,
                    bool& improved) const
    {
        const double s = score(candidate);
        if (s < current - 1e-15) {
            params = std::move(candidate);
            current = s;
            improved = true;
        }
    }

    const AtomicMeasure& m_;
    const SetOracle& K_;
    double tau_;
    std::vector<Eigen::MatrixXd> vertices_;
};

} // namespace

ConditionResult viability_condition_check(const AtomicMeasure& m, const SetOracle& K,
                                          const ControlSystem& sys, double tau0,
                                          const WitnessOptions& options)
{
    require_same_dim(K.dim(), m.dim());
    require_same_dim(sys.dim, m.dim());
    const double start_distance = K.nearest(m).distance;
    if (start_distance > K.resolution() + 1e-12)
        throw Error("condition check requires m in K, but dist(m, K) = " + format_number(start_distance));
    if (options.levels < 3)
        throw Error("tangency ladder needs at least 3 levels");

    const double tau = std::ldexp(tau0, -(options.levels - 1));
    const WitnessSearch search(m, K, sys, tau);

    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto initial = [&](int restart) {
        std::vector<FiberParams> params(search.fibers());
        for (std::size_t i = 0; i < params.size(); ++i) {
            const Eigen::Index k = search.vertex_count(i);
            if (restart < 2) {
                params[i].mix = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
                params[i].collapse = restart == 0 ? 0.0 : 1.0;
            } else {
                Eigen::VectorXd mix(k);
                for (Eigen::Index v = 0; v < k; ++v)
                    mix(v) = -std::log(1.0 - unit(rng));
                params[i].mix = mix / mix.sum();
                params[i].collapse = unit(rng);
            }
        }
        return params;
    };

    std::vector<FiberParams> best = initial(0);
    double best_score = std::numeric_limits<double>::infinity();
    const int restarts = search.trivial() ? 1 : std::max(1, options.restarts);
    for (int r = 0; r < restarts && best_score > kSettledScore; ++r) {
        std::vector<FiberParams> params = initial(r);
        const double s = search.descend(params, options.min_step);
        if (s < best_score) {
            best_score = s;
            best = std::move(params);
        }
    }

    ConditionResult out;
    out.witness = search.build(best);
    out.score = best_score;
    out.found = best_score < options.threshold;
    out.report = tangency_estimate(out.witness, K, tau0, options.levels, options.threshold);
    return out;
}

} // namespace mfv
