#include "qfe/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace qfe {

QuadratureRule gauss_hermite(int n) {
    if (n < 1) throw std::domain_error("gauss_hermite requires n >= 1");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = std::sqrt(k / 2.0);
        jacobi(k, k - 1) = b;
        jacobi(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    QuadratureRule rule;
    rule.nodes = solver.eigenvalues().array();
    const double mu0 = std::sqrt(kQuadPi);  // integral of exp(-x^2)
    rule.weights = mu0 * solver.eigenvectors().row(0).array().square().transpose();
    return rule;
}

} // namespace qfe
