#include "mfv/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "mfv/min_norm_point.hpp"

namespace mfv {

namespace {

double max_control_norm(const std::vector<Eigen::VectorXd>& controls)
{
    double r = 0.0;
    for (const auto& u : controls)
        r = std::max(r, u.norm());
    return r;
}

void check_controls(const std::vector<Eigen::VectorXd>& controls)
{
    if (controls.empty())
        throw Error("control set must be nonempty");
    for (const auto& u : controls)
        require_same_dim(static_cast<std::size_t>(controls.front().size()), static_cast<std::size_t>(u.size()));
}

} // namespace

ControlSystem constant_controls(std::vector<Eigen::VectorXd> controls)
{
    check_controls(controls);
    ControlSystem sys;
    sys.name = "constant-controls";
    sys.dim = static_cast<std::size_t>(controls.front().size());
    sys.bound_R = max_control_norm(controls);
    sys.lipschitz_L = 0.0;
    sys.controls = std::move(controls);
    sys.field = [](const TorusPoint&, const AtomicMeasure&, const Eigen::VectorXd& u) { return u; };
    return sys;
}

ControlSystem mean_drift(double kappa, std::vector<Eigen::VectorXd> controls)
{
    check_controls(controls);
    ControlSystem sys;
    sys.name = "mean-drift";
    sys.dim = static_cast<std::size_t>(controls.front().size());
    const double root_d = std::sqrt(static_cast<double>(sys.dim));
    sys.bound_R = max_control_norm(controls) + std::abs(kappa) * root_d;
    sys.lipschitz_L = 2.0 * std::numbers::pi * std::abs(kappa) * root_d;
    sys.controls = std::move(controls);
    sys.field = [kappa](const TorusPoint& x, const AtomicMeasure& m, const Eigen::VectorXd& u) {
        Eigen::VectorXd drift = Eigen::VectorXd::Zero(u.size());
        for (std::size_t i = 0; i < m.size(); ++i) {
            const Eigen::VectorXd phase = 2.0 * std::numbers::pi * (m.atom(i).coords() - x.coords());
            drift += m.weight(i) * phase.array().sin().matrix();
        }
        return Eigen::VectorXd(u + kappa * drift);
    };
    return sys;
}

VectogramVertices vectogram(const ControlSystem& sys, const TorusPoint& x, const AtomicMeasure& m)
{
    require_same_dim(sys.dim, x.dim());
    VectogramVertices out;
    out.vertices.resize(static_cast<Eigen::Index>(sys.dim), static_cast<Eigen::Index>(sys.controls.size()));
    for (std::size_t k = 0; k < sys.controls.size(); ++k) {
        const Velocity v = sys.field(x, m, sys.controls[k]);
        require_same_dim(sys.dim, static_cast<std::size_t>(v.size()));
        if (!all_finite(v))
            throw Error("vector field returned a non-finite value for control " + std::to_string(k));
        out.vertices.col(static_cast<Eigen::Index>(k)) = v;
    }
    return out;
}

namespace {

MinNormResult min_norm_to_hull(const Velocity& v, const VectogramVertices& verts)
{
    require_same_dim(static_cast<std::size_t>(verts.vertices.rows()), static_cast<std::size_t>(v.size()));
    const Eigen::MatrixXd shifted = verts.vertices.colwise() - v;
    auto lmo = [&shifted](const Eigen::VectorXd& x) {
        Eigen::Index best = 0;
        (shifted.transpose() * x).minCoeff(&best);
        return Eigen::VectorXd(shifted.col(best));
    };
    return min_norm_point(lmo, shifted.col(0));
}

} // namespace

double dist_to_vectogram(const Velocity& v, const VectogramVertices& verts)
{
    return min_norm_to_hull(v, verts).norm;
}

Velocity project_to_vectogram(const Velocity& v, const VectogramVertices& verts)
{
    return v + min_norm_to_hull(v, verts).point;
}

double feasibility_residual(const LiftedMeasure& b, const ControlSystem& sys)
{
    const AtomicMeasure& m = b.base();
    double total = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const VectogramVertices verts = vectogram(sys, m.atom(i), m);
        const Fiber& f = b.fiber(i);
        double local = 0.0;
        for (std::size_t k = 0; k < f.size(); ++k)
            local += f.weights(static_cast<Eigen::Index>(k)) * dist_to_vectogram(f.velocity(k), verts);
        total += m.weight(i) * local;
    }
    return total;
}

double dist_to_step_aumann(const Velocity& dx, const std::vector<AumannPiece>& pieces)
{
    if (pieces.empty())
        throw Error("Aumann integral needs at least one piece");
    if (pieces.size() > kMaxAumannPieces)
        throw SizeLimitError("Aumann integral is limited to " + std::to_string(kMaxAumannPieces) + " pieces");
    for (const auto& piece : pieces) {
        if (!(piece.duration > 0))
            throw Error("Aumann piece durations must be positive");
        if (piece.verts.size() == 0 || piece.verts.size() > kMaxAumannVertices)
            throw SizeLimitError("Aumann pieces need between 1 and " + std::to_string(kMaxAumannVertices) +
                                 " vertices");
        require_same_dim(static_cast<std::size_t>(dx.size()), static_cast<std::size_t>(piece.verts.vertices.rows()));
    }

    // The Minkowski sum of scaled hulls has support function equal to the sum
    // of the pieces' support functions, so its linear oracle picks one vertex
    // per piece.
    auto lmo = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd p = -dx;
        for (const auto& piece : pieces) {
            Eigen::Index best = 0;
            (piece.verts.vertices.transpose() * x).minCoeff(&best);
            p += piece.duration * piece.verts.vertices.col(best);
        }
        return p;
    };
    Eigen::VectorXd start = -dx;
    for (const auto& piece : pieces)
        start += piece.duration * piece.verts.vertices.col(0);
    return min_norm_point(lmo, start).norm;
}

ConstantSample sample_constants(const ControlSystem& sys, std::size_t samples, std::uint64_t seed,
                                std::size_t max_atoms)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> count(1, std::max<std::size_t>(1, max_atoms));
    const auto d = static_cast<Eigen::Index>(sys.dim);

    auto random_point = [&] {
        Eigen::VectorXd c(d);
        for (Eigen::Index j = 0; j < d; ++j)
            c(j) = unit(rng);
        return TorusPoint(c);
    };
    auto random_measure = [&] {
        const std::size_t n = count(rng);
        std::vector<TorusPoint> atoms;
        Eigen::VectorXd w(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            atoms.push_back(random_point());
            w(static_cast<Eigen::Index>(i)) = 0.05 + unit(rng);
        }
        return AtomicMeasure(atoms, w / w.sum());
    };

    ConstantSample out;
    for (std::size_t s = 0; s < samples; ++s) {
        const TorusPoint x1 = random_point();
        const TorusPoint x2 = random_point();
        const AtomicMeasure m1 = random_measure();
        const AtomicMeasure m2 = random_measure();
        const double denom = torus_distance(x1, x2) + w1_distance(m1, m2);
        for (const auto& u : sys.controls) {
            const Velocity f1 = sys.field(x1, m1, u);
            const Velocity f2 = sys.field(x2, m2, u);
            out.max_norm = std::max({out.max_norm, f1.norm(), f2.norm()});
            if (denom > 0)
                out.max_quotient = std::max(out.max_quotient, (f1 - f2).norm() / denom);
        }
    }
    return out;
}

} // namespace mfv
