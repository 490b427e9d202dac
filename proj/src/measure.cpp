#include "mfv/measure.hpp"

#include <cmath>
#include <string>

#include "mfv/transport.hpp"

namespace mfv {

AtomicMeasure::AtomicMeasure(const std::vector<TorusPoint>& atoms, const Eigen::VectorXd& weights)
{
    if (atoms.empty())
        throw Error("atomic measure needs at least one atom");
    if (static_cast<Eigen::Index>(atoms.size()) != weights.size())
        throw Error("atomic measure has " + std::to_string(atoms.size()) + " atoms but " +
                    std::to_string(weights.size()) + " weights");
    dim_ = atoms.front().dim();

    std::vector<double> merged;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        require_same_dim(dim_, atoms[i].dim());
        const double w = weights(static_cast<Eigen::Index>(i));
        if (!std::isfinite(w) || w < 0)
            throw Error("atomic measure weights must be finite and nonnegative");
        if (w == 0)
            continue;
        if (auto k = find(atoms[i])) {
            merged[*k] += w;
        } else {
            atoms_.push_back(atoms[i]);
            merged.push_back(w);
        }
    }
    if (atoms_.empty())
        throw Error("atomic measure has no positive weight");

    weights_ = Eigen::Map<const Eigen::VectorXd>(merged.data(), static_cast<Eigen::Index>(merged.size()));
    const double total = weights_.sum();
    if (std::abs(total - 1.0) > 1e-9)
        throw Error("atomic measure weights sum to " + std::to_string(total) + ", expected 1");
    weights_ /= total;
}

AtomicMeasure AtomicMeasure::dirac(const TorusPoint& x)
{
    return AtomicMeasure({x}, Eigen::VectorXd::Ones(1));
}

AtomicMeasure AtomicMeasure::uniform(const std::vector<TorusPoint>& atoms)
{
    const auto n = static_cast<Eigen::Index>(atoms.size());
    return AtomicMeasure(atoms, Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

std::optional<std::size_t> AtomicMeasure::find(const TorusPoint& x, double tol) const
{
    for (std::size_t k = 0; k < atoms_.size(); ++k) {
        if (same_atom(atoms_[k], x, tol))
            return k;
    }
    return std::nullopt;
}

bool same_measure(const AtomicMeasure& a, const AtomicMeasure& b, double weight_tol, double tol)
{
    if (a.dim() != b.dim() || a.size() != b.size())
        return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto k = b.find(a.atom(i), tol);
        if (!k || std::abs(a.weight(i) - b.weight(*k)) > weight_tol)
            return false;
    }
    return true;
}

double TransportPlan::marginal_error() const
{
    const double rows = (mass.rowwise().sum() - source.weights()).cwiseAbs().maxCoeff();
    const double cols = (mass.colwise().sum().transpose() - target.weights()).cwiseAbs().maxCoeff();
    return std::max(rows, cols);
}

TransportPlan TransportPlan::identity(const AtomicMeasure& m)
{
    return {m, m, m.weights().asDiagonal().toDenseMatrix()};
}

namespace {

// index_map[i] = index in `to` of atom i of `from`.
std::vector<std::size_t> match_atoms(const AtomicMeasure& from, const AtomicMeasure& to,
                                     const char* what)
{
    if (!same_measure(from, to))
        throw MarginalMismatchError(what);
    std::vector<std::size_t> index_map(from.size());
    for (std::size_t i = 0; i < from.size(); ++i)
        index_map[i] = *to.find(from.atom(i));
    return index_map;
}

// Strict total order on stored representations: size, then atom
// coordinates, then weights, all lexicographic.
bool ordered_before(const AtomicMeasure& a, const AtomicMeasure& b)
{
    if (a.size() != b.size())
        return a.size() < b.size();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Eigen::VectorXd& x = a.atom(i).coords();
        const Eigen::VectorXd& y = b.atom(i).coords();
        for (Eigen::Index j = 0; j < x.size(); ++j)
            if (x(j) != y(j))
                return x(j) < y(j);
    }
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.weight(i) != b.weight(i))
            return a.weight(i) < b.weight(i);
    return false;
}

} // namespace

TransportPlan compose(const TransportPlan& first, const TransportPlan& second)
{
    const auto mid = match_atoms(first.target, second.source,
                                 "plan composition requires matching middle marginals");
    Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(first.mass.rows(), second.mass.cols());
    for (std::size_t b = 0; b < mid.size(); ++b) {
        const auto sb = static_cast<Eigen::Index>(mid[b]);
        const double w = second.source.weight(mid[b]);
        mass += first.mass.col(static_cast<Eigen::Index>(b)) * (second.mass.row(sb) / w);
    }
    return {first.source, second.target, mass};
}

Eigen::MatrixXd torus_cost_matrix(const AtomicMeasure& a, const AtomicMeasure& b)
{
    require_same_dim(a.dim(), b.dim());
    Eigen::MatrixXd cost(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                torus_distance(a.atom(i), b.atom(j));
    return cost;
}

WassersteinResult wasserstein1(const AtomicMeasure& m1, const AtomicMeasure& m2,
                               const TransportOptions& options)
{
    require_same_dim(m1.dim(), m2.dim());
    if (m1.size() > options.max_atoms || m2.size() > options.max_atoms)
        throw SizeLimitError("instance too large for exact solver");
    // Solving in a canonical argument order makes W1(a, b) and W1(b, a)
    // bitwise equal.
    if (ordered_before(m2, m1)) {
        const TransportSolution sol = solve_transport(m2.weights(), m1.weights(), torus_cost_matrix(m2, m1));
        return {sol.cost, TransportPlan{m1, m2, sol.flow.transpose()}};
    }
    const TransportSolution sol = solve_transport(m1.weights(), m2.weights(), torus_cost_matrix(m1, m2));
    return {sol.cost, TransportPlan{m1, m2, sol.flow}};
}

AtomicMeasure pushforward(const AtomicMeasure& m, const std::function<TorusPoint(const TorusPoint&)>& h)
{
    std::vector<TorusPoint> images;
    images.reserve(m.size());
    for (const auto& x : m.atoms())
        images.push_back(h(x));
    return AtomicMeasure(images, m.weights());
}

} // namespace mfv
