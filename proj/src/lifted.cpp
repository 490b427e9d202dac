#include "mfv/lifted.hpp"

#include <cmath>
#include <string>

#include "mfv/transport.hpp"

namespace mfv {

namespace {

// Plan entries below this fraction of their row mass are treated as zero when
// composing; they come from rounding in degenerate pivots.
constexpr double kNegligibleMass = 1e-14;

std::vector<std::size_t> base_index_map(const AtomicMeasure& from, const AtomicMeasure& to)
{
    if (!same_measure(from, to))
        throw MarginalMismatchError("lifted metric requires identical base marginal");
    std::vector<std::size_t> map(from.size());
    for (std::size_t i = 0; i < from.size(); ++i)
        map[i] = *to.find(from.atom(i));
    return map;
}

void check_order(double p)
{
    if (p != 1.0 && p != 2.0)
        throw Error("lifted metric supports p = 1 or p = 2");
}

Eigen::MatrixXd velocity_cost(const Fiber& a, const Fiber& b, double p)
{
    Eigen::MatrixXd cost(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double d = (a.velocities.col(static_cast<Eigen::Index>(i)) -
                              b.velocities.col(static_cast<Eigen::Index>(j)))
                                 .norm();
            cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = p == 1.0 ? d : d * d;
        }
    return cost;
}

} // namespace

Fiber make_fiber(const Eigen::MatrixXd& velocities, const Eigen::VectorXd& weights)
{
    if (velocities.cols() != weights.size() || weights.size() == 0)
        throw Error("fiber needs one weight per velocity and at least one velocity");
    if (!all_finite(velocities))
        throw Error("fiber velocities must be finite");

    std::vector<Eigen::Index> kept;
    std::vector<double> merged;
    for (Eigen::Index k = 0; k < velocities.cols(); ++k) {
        const double w = weights(k);
        if (!std::isfinite(w) || w < 0)
            throw Error("fiber weights must be finite and nonnegative");
        if (w == 0)
            continue;
        bool found = false;
        for (std::size_t q = 0; q < kept.size(); ++q) {
            if ((velocities.col(kept[q]) - velocities.col(k)).cwiseAbs().maxCoeff() <= kMergeTolerance) {
                merged[q] += w;
                found = true;
                break;
            }
        }
        if (!found) {
            kept.push_back(k);
            merged.push_back(w);
        }
    }
    if (kept.empty())
        throw Error("fiber has no positive weight");

    Fiber f;
    f.velocities.resize(velocities.rows(), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t q = 0; q < kept.size(); ++q)
        f.velocities.col(static_cast<Eigen::Index>(q)) = velocities.col(kept[q]);
    f.weights = Eigen::Map<const Eigen::VectorXd>(merged.data(), static_cast<Eigen::Index>(merged.size()));
    const double total = f.weights.sum();
    if (std::abs(total - 1.0) > 1e-9)
        throw Error("fiber weights sum to " + std::to_string(total) + ", expected 1");
    f.weights /= total;
    return f;
}

Fiber dirac_fiber(const Velocity& v)
{
    return make_fiber(v, Eigen::VectorXd::Ones(1));
}

LiftedMeasure::LiftedMeasure(AtomicMeasure base, std::vector<Fiber> fibers)
    : base_(std::move(base)), fibers_(std::move(fibers))
{
    if (fibers_.size() != base_.size())
        throw Error("lifted measure needs one fiber per base atom");
    for (const auto& f : fibers_)
        require_same_dim(base_.dim(), static_cast<std::size_t>(f.velocities.rows()));
}

LiftedMeasure LiftedMeasure::constant(const AtomicMeasure& base, const Velocity& v)
{
    return LiftedMeasure(base, std::vector<Fiber>(base.size(), dirac_fiber(v)));
}

LiftedMeasure LiftedMeasure::from_field(const AtomicMeasure& base, const std::vector<Velocity>& field)
{
    if (field.size() != base.size())
        throw Error("velocity field needs one velocity per atom");
    std::vector<Fiber> fibers;
    fibers.reserve(field.size());
    for (const auto& v : field)
        fibers.push_back(dirac_fiber(v));
    return LiftedMeasure(base, std::move(fibers));
}

std::size_t LiftedMeasure::support_size() const
{
    std::size_t n = 0;
    for (const auto& f : fibers_)
        n += f.size();
    return n;
}

double LiftedMeasure::first_moment() const
{
    double total = 0.0;
    for (std::size_t i = 0; i < fibers_.size(); ++i)
        total += base_.weight(i) * fibers_[i].velocities.colwise().norm().dot(fibers_[i].weights);
    return total;
}

LiftedMeasure lifted_from_samples(const std::vector<TorusPoint>& points,
                                  const std::vector<Velocity>& velocities,
                                  const Eigen::VectorXd& weights)
{
    if (points.size() != velocities.size() || static_cast<Eigen::Index>(points.size()) != weights.size())
        throw Error("lifted samples need matching points, velocities and weights");
    const AtomicMeasure base(points, weights);
    const auto d = static_cast<Eigen::Index>(base.dim());

    std::vector<std::vector<std::size_t>> members(base.size());
    for (std::size_t s = 0; s < points.size(); ++s) {
        if (weights(static_cast<Eigen::Index>(s)) > 0)
            members[*base.find(points[s])].push_back(s);
    }
    std::vector<Fiber> fibers;
    fibers.reserve(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(members[i].size());
        Eigen::MatrixXd vel(d, k);
        Eigen::VectorXd w(k);
        for (Eigen::Index q = 0; q < k; ++q) {
            const std::size_t s = members[i][static_cast<std::size_t>(q)];
            require_same_dim(base.dim(), static_cast<std::size_t>(velocities[s].size()));
            vel.col(q) = velocities[s];
            w(q) = weights(static_cast<Eigen::Index>(s));
        }
        fibers.push_back(make_fiber(vel, w / w.sum()));
    }
    return LiftedMeasure(base, std::move(fibers));
}

namespace {

// Strict lexicographic order on the stored representation, so the metric can
// be evaluated in an argument-independent order.
int compare_values(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y)
{
    if (x.size() != y.size())
        return x.size() < y.size() ? -1 : 1;
    for (Eigen::Index j = 0; j < x.size(); ++j)
        if (x(j) != y(j))
            return x(j) < y(j) ? -1 : 1;
    return 0;
}

bool lifted_before(const LiftedMeasure& a, const LiftedMeasure& b)
{
    if (a.base().size() != b.base().size())
        return a.base().size() < b.base().size();
    for (std::size_t i = 0; i < a.base().size(); ++i) {
        if (int c = compare_values(a.base().atom(i).coords(), b.base().atom(i).coords()))
            return c < 0;
        if (a.base().weight(i) != b.base().weight(i))
            return a.base().weight(i) < b.base().weight(i);
        const Fiber& fa = a.fiber(i);
        const Fiber& fb = b.fiber(i);
        if (int c = compare_values(fa.weights, fb.weights))
            return c < 0;
        const Eigen::Map<const Eigen::VectorXd> va(fa.velocities.data(), fa.velocities.size());
        const Eigen::Map<const Eigen::VectorXd> vb(fb.velocities.data(), fb.velocities.size());
        if (int c = compare_values(va, vb))
            return c < 0;
    }
    return false;
}

} // namespace

double lifted_metric(const LiftedMeasure& b1, const LiftedMeasure& b2, double p)
{
    check_order(p);
    if (lifted_before(b2, b1))
        return lifted_metric(b2, b1, p);
    const auto map = base_index_map(b1.base(), b2.base());
    double total = 0.0;
    for (std::size_t i = 0; i < map.size(); ++i) {
        const Fiber& f1 = b1.fiber(i);
        const Fiber& f2 = b2.fiber(map[i]);
        total += b1.base().weight(i) * solve_transport(f1.weights, f2.weights, velocity_cost(f1, f2, p)).cost;
    }
    return p == 1.0 ? total : std::sqrt(total);
}

double lifted_metric_joint_oracle(const LiftedMeasure& b1, const LiftedMeasure& b2, double p,
                                  std::size_t max_support)
{
    check_order(p);
    if (b1.support_size() > max_support || b2.support_size() > max_support)
        throw SizeLimitError("lifted metric oracle is limited to " + std::to_string(max_support) +
                             " support points per measure");
    const auto map = base_index_map(b1.base(), b2.base());

    // One variable per (x, v1, v2) with both marginal masses positive; all other
    // triples are forced to zero by the marginal equalities.
    Eigen::Index vars = 0;
    Eigen::Index rows = 0;
    for (std::size_t i = 0; i < map.size(); ++i) {
        const auto k1 = static_cast<Eigen::Index>(b1.fiber(i).size());
        const auto k2 = static_cast<Eigen::Index>(b2.fiber(map[i]).size());
        vars += k1 * k2;
        rows += k1 + k2;
    }
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, vars);
    Eigen::VectorXd rhs(rows);
    Eigen::VectorXd cost(vars);

    Eigen::Index var = 0;
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < map.size(); ++i) {
        const Fiber& f1 = b1.fiber(i);
        const Fiber& f2 = b2.fiber(map[i]);
        const double mi = b1.base().weight(i);
        const auto k1 = static_cast<Eigen::Index>(f1.size());
        const auto k2 = static_cast<Eigen::Index>(f2.size());
        for (Eigen::Index a = 0; a < k1; ++a)
            for (Eigen::Index b = 0; b < k2; ++b) {
                const double d = (f1.velocities.col(a) - f2.velocities.col(b)).norm();
                cost(var) = p == 1.0 ? d : d * d;
                A(row + a, var) = 1.0;
                A(row + k1 + b, var) = 1.0;
                ++var;
            }
        rhs.segment(row, k1) = mi * f1.weights;
        rhs.segment(row + k1, k2) = mi * f2.weights;
        row += k1 + k2;
    }
    const double value = solve_standard_lp(A, rhs, cost).objective;
    return p == 1.0 ? value : std::sqrt(std::max(0.0, value));
}

AtomicMeasure shift(const LiftedMeasure& b, double tau)
{
    if (tau < 0)
        throw Error("shift requires tau >= 0");
    std::vector<TorusPoint> points;
    std::vector<double> weights;
    for (std::size_t i = 0; i < b.base().size(); ++i) {
        const Fiber& f = b.fiber(i);
        for (std::size_t k = 0; k < f.size(); ++k) {
            points.push_back(translate(b.base().atom(i), f.velocities.col(static_cast<Eigen::Index>(k)), tau));
            weights.push_back(b.base().weight(i) * f.weights(static_cast<Eigen::Index>(k)));
        }
    }
    return AtomicMeasure(points, Eigen::Map<const Eigen::VectorXd>(weights.data(),
                                                                   static_cast<Eigen::Index>(weights.size())));
}

LiftedMeasure rescale(const LiftedMeasure& b, double a)
{
    std::vector<Fiber> fibers;
    fibers.reserve(b.fibers().size());
    for (const auto& f : b.fibers())
        fibers.push_back(make_fiber(a * f.velocities, f.weights));
    return LiftedMeasure(b.base(), std::move(fibers));
}

LiftedMeasure compose(const TransportPlan& plan, const LiftedMeasure& b)
{
    if (!same_measure(plan.target, b.base()))
        throw MarginalMismatchError("composition requires the plan target to equal the lifted base");
    std::vector<std::size_t> map(plan.target.size());
    for (std::size_t c = 0; c < map.size(); ++c)
        map[c] = *b.base().find(plan.target.atom(c));

    const AtomicMeasure& source = plan.source;
    const auto d = static_cast<Eigen::Index>(b.dim());
    std::vector<Fiber> fibers;
    fibers.reserve(source.size());
    for (std::size_t r = 0; r < source.size(); ++r) {
        const double row_mass = source.weight(r);
        std::vector<Eigen::Index> cols;
        Eigen::Index count = 0;
        for (Eigen::Index c = 0; c < plan.mass.cols(); ++c) {
            if (plan.mass(static_cast<Eigen::Index>(r), c) > kNegligibleMass * row_mass) {
                cols.push_back(c);
                count += static_cast<Eigen::Index>(b.fiber(map[static_cast<std::size_t>(c)]).size());
            }
        }
        Eigen::MatrixXd vel(d, count);
        Eigen::VectorXd w(count);
        Eigen::Index q = 0;
        for (Eigen::Index c : cols) {
            const Fiber& f = b.fiber(map[static_cast<std::size_t>(c)]);
            const auto k = static_cast<Eigen::Index>(f.size());
            vel.middleCols(q, k) = f.velocities;
            w.segment(q, k) = (plan.mass(static_cast<Eigen::Index>(r), c) / row_mass) * f.weights;
            q += k;
        }
        fibers.push_back(make_fiber(vel, w / w.sum()));
    }
    return LiftedMeasure(source, std::move(fibers));
}

} // namespace mfv
