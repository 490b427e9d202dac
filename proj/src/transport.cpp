#include "mfv/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mfv/errors.hpp"

namespace mfv {

namespace {

using Eigen::Index;

// Transportation simplex over a spanning-tree basis. Rows are tree nodes
// 0..n-1, columns are nodes n..n+m-1; every basic cell is a tree edge.
class TransportationSimplex
{
public:
    TransportationSimplex(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
                          const Eigen::MatrixXd& cost)
        : n_(supply.size()), m_(demand.size()), cost_(cost), flow_(Eigen::MatrixXd::Zero(n_, m_)),
          basic_(static_cast<std::size_t>(n_ * m_), false), u_(n_), v_(m_)
    {
        tol_ = 1e-12 * std::max(1.0, cost.cwiseAbs().maxCoeff());
        northwest_corner(supply, demand);
    }

    void run()
    {
        const std::size_t max_pivots = 10000 + 50 * static_cast<std::size_t>((n_ + m_) * (n_ + m_));
        std::size_t degenerate_streak = 0;
        while (true) {
            compute_potentials();
            const bool bland = degenerate_streak > kBlandAfter;
            Index entering = -1;
            if (!(bland ? price_bland(entering) : price_block(entering)))
                break;
            const bool degenerate = pivot(entering);
            degenerate_streak = degenerate ? degenerate_streak + 1 : 0;
            if (++pivots_ > max_pivots)
                throw Error("transportation simplex exceeded its pivot budget");
        }
    }

    TransportSolution solution() const
    {
        TransportSolution out;
        out.flow = flow_;
        out.cost = (flow_.array() * cost_.array()).sum();
        out.pivots = pivots_;
        return out;
    }

private:
    static constexpr std::size_t kBlandAfter = 64;

    Index cell(Index i, Index j) const { return i * m_ + j; }

    void northwest_corner(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand)
    {
        Eigen::VectorXd a = supply;
        Eigen::VectorXd b = demand;
        Index i = 0;
        Index j = 0;
        basis_.reserve(static_cast<std::size_t>(n_ + m_ - 1));
        while (true) {
            const double x = std::min(a(i), b(j));
            add_basic(i, j, x);
            a(i) -= x;
            b(j) -= x;
            if (i == n_ - 1 && j == m_ - 1)
                break;
            if (i == n_ - 1)
                ++j;
            else if (j == m_ - 1)
                ++i;
            else if (a(i) <= b(j))
                ++i;
            else
                ++j;
        }
        // the leftover in the last cell absorbs rounding between the totals
        flow_(n_ - 1, m_ - 1) = std::max(0.0, flow_(n_ - 1, m_ - 1) + a(n_ - 1));
    }

    void add_basic(Index i, Index j, double x)
    {
        basis_.push_back(cell(i, j));
        basic_[static_cast<std::size_t>(cell(i, j))] = true;
        flow_(i, j) = x;
    }

    void build_adjacency()
    {
        adjacency_.assign(static_cast<std::size_t>(n_ + m_), {});
        for (std::size_t e = 0; e < basis_.size(); ++e) {
            const Index i = basis_[e] / m_;
            const Index j = basis_[e] % m_;
            adjacency_[static_cast<std::size_t>(i)].push_back(e);
            adjacency_[static_cast<std::size_t>(n_ + j)].push_back(e);
        }
    }

    Index other_end(std::size_t edge, Index node) const
    {
        const Index i = basis_[edge] / m_;
        const Index j = basis_[edge] % m_;
        return node == i ? n_ + j : i;
    }

    void compute_potentials()
    {
        build_adjacency();
        std::vector<bool> seen(static_cast<std::size_t>(n_ + m_), false);
        std::vector<Index> queue{0};
        seen[0] = true;
        u_(0) = 0.0;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            const Index node = queue[head];
            for (std::size_t e : adjacency_[static_cast<std::size_t>(node)]) {
                const Index next = other_end(e, node);
                if (seen[static_cast<std::size_t>(next)])
                    continue;
                seen[static_cast<std::size_t>(next)] = true;
                const Index i = basis_[e] / m_;
                const Index j = basis_[e] % m_;
                if (next >= n_)
                    v_(j) = cost_(i, j) - u_(i);
                else
                    u_(i) = cost_(i, j) - v_(j);
                queue.push_back(next);
            }
        }
    }

    double reduced_cost(Index k) const
    {
        const Index i = k / m_;
        const Index j = k % m_;
        return cost_(i, j) - u_(i) - v_(j);
    }

    // Dantzig pricing restricted to blocks, scanned cyclically.
    bool price_block(Index& entering)
    {
        const Index total = n_ * m_;
        const Index block = std::max<Index>(static_cast<Index>(std::sqrt(double(total))), 16);
        double best = -tol_;
        bool found = false;
        for (Index scanned = 1; scanned <= total; ++scanned) {
            const Index k = cursor_;
            cursor_ = (cursor_ + 1) % total;
            if (!basic_[static_cast<std::size_t>(k)]) {
                const double r = reduced_cost(k);
                if (r < best) {
                    best = r;
                    entering = k;
                    found = true;
                }
            }
            if (found && scanned % block == 0)
                break;
        }
        return found;
    }

    bool price_bland(Index& entering) const
    {
        for (Index k = 0; k < n_ * m_; ++k) {
            if (!basic_[static_cast<std::size_t>(k)] && reduced_cost(k) < -tol_) {
                entering = k;
                return true;
            }
        }
        return false;
    }

    // Tree path from the entering column to the entering row, as basis indices
    // ordered from the column end.
    std::vector<std::size_t> cycle_path(Index row, Index col) const
    {
        const std::size_t none = std::numeric_limits<std::size_t>::max();
        std::vector<std::size_t> parent(static_cast<std::size_t>(n_ + m_), none);
        std::vector<bool> seen(static_cast<std::size_t>(n_ + m_), false);
        std::vector<Index> queue{n_ + col};
        seen[static_cast<std::size_t>(n_ + col)] = true;
        for (std::size_t head = 0; head < queue.size() && !seen[static_cast<std::size_t>(row)]; ++head) {
            const Index node = queue[head];
            for (std::size_t e : adjacency_[static_cast<std::size_t>(node)]) {
                const Index next = other_end(e, node);
                if (seen[static_cast<std::size_t>(next)])
                    continue;
                seen[static_cast<std::size_t>(next)] = true;
                parent[static_cast<std::size_t>(next)] = e;
                queue.push_back(next);
            }
        }
        std::vector<std::size_t> path;
        for (Index node = row; node != n_ + col;) {
            const std::size_t e = parent[static_cast<std::size_t>(node)];
            path.push_back(e);
            node = other_end(e, node);
        }
        std::reverse(path.begin(), path.end());
        return path;
    }

    // Returns true if the pivot was degenerate.
    bool pivot(Index entering)
    {
        const Index row = entering / m_;
        const Index col = entering % m_;
        const std::vector<std::size_t> path = cycle_path(row, col);

        // Cells at even path positions lose flow.
        double theta = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < path.size(); p += 2) {
            const Index k = basis_[path[p]];
            theta = std::min(theta, flow_(k / m_, k % m_));
        }
        std::size_t leaving = path[0];
        Index leaving_cell = std::numeric_limits<Index>::max();
        for (std::size_t p = 0; p < path.size(); p += 2) {
            const Index k = basis_[path[p]];
            if (flow_(k / m_, k % m_) <= theta && k < leaving_cell) {
                leaving_cell = k;
                leaving = path[p];
            }
        }

        for (std::size_t p = 0; p < path.size(); ++p) {
            const Index k = basis_[path[p]];
            double& x = flow_(k / m_, k % m_);
            x = (p % 2 == 0) ? std::max(0.0, x - theta) : x + theta;
        }
        flow_(leaving_cell / m_, leaving_cell % m_) = 0.0;
        flow_(row, col) = theta;

        basic_[static_cast<std::size_t>(leaving_cell)] = false;
        basic_[static_cast<std::size_t>(entering)] = true;
        basis_[leaving] = entering;
        return theta <= 0.0;
    }

    Index n_;
    Index m_;
    const Eigen::MatrixXd& cost_;
    Eigen::MatrixXd flow_;
    std::vector<Index> basis_;
    std::vector<bool> basic_;
    std::vector<std::vector<std::size_t>> adjacency_;
    Eigen::VectorXd u_;
    Eigen::VectorXd v_;
    double tol_ = 0.0;
    Index cursor_ = 0;
    std::size_t pivots_ = 0;
};

using Tableau = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kPivotTolerance = 1e-11;

void pivot_tableau(Tableau& t, std::vector<Index>& basis, Index row, Index col)
{
    t.row(row) /= t(row, col);
    for (Index i = 0; i < t.rows(); ++i) {
        if (i != row && t(i, col) != 0.0)
            t.row(i) -= t(i, col) * t.row(row);
    }
    basis[static_cast<std::size_t>(row)] = col;
}

// Bland's rule on the tableau whose last row holds reduced costs and whose last
// column holds the right-hand side. Columns >= usable are never entered.
void run_simplex(Tableau& t, std::vector<Index>& basis, Index usable)
{
    const Index rows = t.rows() - 1;
    const Index rhs = t.cols() - 1;
    const double tol = 1e-12 * std::max(1.0, t.row(rows).head(usable).cwiseAbs().maxCoeff());
    for (std::size_t iter = 0;; ++iter) {
        if (iter > 1000000)
            throw Error("dense simplex exceeded its iteration budget");
        Index entering = -1;
        for (Index j = 0; j < usable; ++j) {
            if (t(rows, j) < -tol) {
                entering = j;
                break;
            }
        }
        if (entering < 0)
            return;
        Index leaving = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < rows; ++i) {
            if (t(i, entering) <= kPivotTolerance)
                continue;
            const double ratio = t(i, rhs) / t(i, entering);
            if (ratio < best_ratio - 1e-15 ||
                (ratio <= best_ratio + 1e-15 && leaving >= 0 &&
                 basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leaving)])) {
                best_ratio = std::min(best_ratio, ratio);
                leaving = i;
            }
        }
        if (leaving < 0)
            throw Error("linear program is unbounded");
        pivot_tableau(t, basis, leaving, entering);
    }
}

} // namespace

TransportSolution solve_transport(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
                                  const Eigen::MatrixXd& cost)
{
    if (supply.size() == 0 || demand.size() == 0)
        throw Error("transport problem needs nonempty supply and demand");
    if (cost.rows() != supply.size() || cost.cols() != demand.size())
        throw DimensionError(static_cast<std::size_t>(supply.size() * demand.size()),
                             static_cast<std::size_t>(cost.size()));
    if ((supply.array() < 0).any() || (demand.array() < 0).any())
        throw Error("transport marginals must be nonnegative");
    const double total = supply.sum();
    if (!(total > 0) || std::abs(total - demand.sum()) > 1e-9 * std::max(1.0, total))
        throw MarginalMismatchError("transport marginals must have equal positive mass");

    const Eigen::VectorXd scaled_demand = demand * (total / demand.sum());
    TransportationSimplex simplex(supply, scaled_demand, cost);
    simplex.run();
    return simplex.solution();
}

LinearProgramSolution solve_standard_lp(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                        const Eigen::VectorXd& c)
{
    const Index rows = A.rows();
    const Index cols = A.cols();
    if (b.size() != rows || c.size() != cols)
        throw Error("linear program has inconsistent dimensions");

    // [A | I | b] with one artificial per row; last row is the phase-1 objective.
    Tableau t = Tableau::Zero(rows + 1, cols + rows + 1);
    std::vector<Index> basis(static_cast<std::size_t>(rows));
    for (Index i = 0; i < rows; ++i) {
        const double sign = b(i) < 0 ? -1.0 : 1.0;
        t.row(i).head(cols) = sign * A.row(i);
        t(i, cols + i) = 1.0;
        t(i, cols + rows) = sign * b(i);
        basis[static_cast<std::size_t>(i)] = cols + i;
        t.row(rows) -= t.row(i);
    }
    t.row(rows).segment(cols, rows).setZero();

    run_simplex(t, basis, cols + rows);
    if (-t(rows, cols + rows) > 1e-9 * std::max(1.0, b.cwiseAbs().sum()))
        throw Error("linear program is infeasible");

    // Drive artificials out of the basis; rows where that is impossible are
    // redundant and get dropped.
    std::vector<Index> keep;
    for (Index i = 0; i < rows; ++i) {
        if (basis[static_cast<std::size_t>(i)] < cols) {
            keep.push_back(i);
            continue;
        }
        Index col = -1;
        for (Index j = 0; j < cols; ++j) {
            if (std::abs(t(i, j)) > 1e-9) {
                col = j;
                break;
            }
        }
        if (col >= 0) {
            pivot_tableau(t, basis, i, col);
            keep.push_back(i);
        }
    }

    const Index kept = static_cast<Index>(keep.size());
    Tableau phase2 = Tableau::Zero(kept + 1, cols + 1);
    std::vector<Index> basis2(static_cast<std::size_t>(kept));
    for (Index r = 0; r < kept; ++r) {
        const Index i = keep[static_cast<std::size_t>(r)];
        phase2.row(r).head(cols) = t.row(i).head(cols);
        phase2(r, cols) = t(i, cols + rows);
        basis2[static_cast<std::size_t>(r)] = basis[static_cast<std::size_t>(i)];
    }
    phase2.row(kept).head(cols) = c.transpose();
    for (Index r = 0; r < kept; ++r) {
        const Index bj = basis2[static_cast<std::size_t>(r)];
        phase2.row(kept) -= c(bj) * phase2.row(r);
    }

    run_simplex(phase2, basis2, cols);

    LinearProgramSolution out;
    out.x = Eigen::VectorXd::Zero(cols);
    for (Index r = 0; r < kept; ++r)
        out.x(basis2[static_cast<std::size_t>(r)]) = std::max(0.0, phase2(r, cols));
    out.objective = c.dot(out.x);
    return out;
}

} // namespace mfv
