#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

namespace qfe {

inline constexpr double kQuadPi = std::numbers::pi;

/// Nodes and weights for integrating f against a weight function.
struct QuadratureRule {
    Eigen::ArrayXd nodes;
    Eigen::ArrayXd weights;
};

/// Gauss-Hermite rule: integral of exp(-x^2) f(x) dx over the real line
/// equals sum_i w_i f(x_i) for polynomials f up to degree 2n-1.
/// Computed by the Golub-Welsch eigendecomposition of the Jacobi matrix.
QuadratureRule gauss_hermite(int n);

/// Expectation of f under a Gaussian N(mu, sigma2) via an n-point
/// Gauss-Hermite rule.
template <typename F>
double gauss_expect(const QuadratureRule& rule, double mu, double sigma2, F&& f) {
    const double s = std::sqrt(2.0 * sigma2);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i)
        acc += rule.weights[i] * f(mu + s * rule.nodes[i]);
    return acc / std::sqrt(kQuadPi);
}

} // namespace qfe
