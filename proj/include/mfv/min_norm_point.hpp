#pragma once

// Wolfe's minimum-norm-point algorithm over a polytope given implicitly by a
// linear minimization oracle: lmo(x) returns a vertex p of P minimizing <x, p>.
// The corral is kept as an explicit set of vertices with convex weights.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace mfv {

struct MinNormOptions
{
    double tolerance = 1e-12;
    std::size_t max_iterations = 500;
};

struct MinNormResult
{
    Eigen::VectorXd point;
    double norm = 0.0;
    std::size_t iterations = 0;
};

namespace detail {

// Minimizer of |y| over the affine hull of the columns of S; returns the
// affine coefficients.
inline Eigen::VectorXd affine_minimizer(const Eigen::MatrixXd& S)
{
    const Eigen::Index k = S.cols();
    Eigen::VectorXd alpha(k);
    if (k == 1) {
        alpha(0) = 1.0;
        return alpha;
    }
    const Eigen::MatrixXd Q = S.rightCols(k - 1).colwise() - S.col(0);
    const Eigen::VectorXd beta = Q.completeOrthogonalDecomposition().solve(-S.col(0));
    alpha(0) = 1.0 - beta.sum();
    alpha.tail(k - 1) = beta;
    return alpha;
}

} // namespace detail

template <typename Oracle>
MinNormResult min_norm_point(Oracle&& lmo, const Eigen::VectorXd& start,
                             const MinNormOptions& options = {})
{
    constexpr double kTiny = 1e-14;
    Eigen::MatrixXd corral = start;
    Eigen::VectorXd lambda = Eigen::VectorXd::Ones(1);
    Eigen::VectorXd x = start;

    MinNormResult out;
    for (; out.iterations < options.max_iterations; ++out.iterations) {
        const double xx = x.squaredNorm();
        if (xx <= options.tolerance * options.tolerance)
            break;
        const Eigen::VectorXd q = lmo(x);
        // x.x - min_p x.p bounds (|x| - |x*|) |x|
        if (xx - x.dot(q) <= options.tolerance * std::sqrt(xx))
            break;
        bool duplicate = false;
        for (Eigen::Index j = 0; j < corral.cols(); ++j)
            duplicate = duplicate || (corral.col(j) - q).squaredNorm() <= kTiny * kTiny;
        if (duplicate)
            break;

        corral.conservativeResize(Eigen::NoChange, corral.cols() + 1);
        corral.col(corral.cols() - 1) = q;
        lambda.conservativeResize(lambda.size() + 1);
        lambda(lambda.size() - 1) = 0.0;

        for (std::size_t minor = 0; minor <= static_cast<std::size_t>(corral.cols()); ++minor) {
            const Eigen::VectorXd alpha = detail::affine_minimizer(corral);
            if ((alpha.array() > kTiny).all()) {
                lambda = alpha;
                break;
            }
            double theta = 1.0;
            for (Eigen::Index j = 0; j < alpha.size(); ++j) {
                if (alpha(j) <= kTiny && lambda(j) - alpha(j) > 0)
                    theta = std::min(theta, lambda(j) / (lambda(j) - alpha(j)));
            }
            lambda = theta * alpha + (1.0 - theta) * lambda;

            std::vector<Eigen::Index> keep;
            for (Eigen::Index j = 0; j < lambda.size(); ++j)
                if (lambda(j) > kTiny)
                    keep.push_back(j);
            Eigen::MatrixXd next(corral.rows(), static_cast<Eigen::Index>(keep.size()));
            Eigen::VectorXd next_lambda(static_cast<Eigen::Index>(keep.size()));
            for (std::size_t j = 0; j < keep.size(); ++j) {
                next.col(static_cast<Eigen::Index>(j)) = corral.col(keep[j]);
                next_lambda(static_cast<Eigen::Index>(j)) = lambda(keep[j]);
            }
            corral = std::move(next);
            lambda = next_lambda / next_lambda.sum();
        }
        x = corral * lambda;
    }
    out.point = x;
    out.norm = x.norm();
    return out;
}

} // namespace mfv
