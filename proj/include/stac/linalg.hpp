#pragma once

#include <Eigen/Dense>

#include "stac/error.hpp"

namespace stac {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Default absolute tolerance for the exact-oracle linear algebra.
inline constexpr double kSolveTol = 1e-10;

/// Solves A x = b by partial-pivoting LU and verifies the residual.
/// A residual above `tol` means the system is singular for our purposes;
/// callers translate that into the appropriate domain error.
inline Vec solve_checked(const Mat& a, const Vec& b, double tol, ErrorKind on_singular,
                         const std::string& context) {
    Eigen::PartialPivLU<Mat> lu(a);
    Vec x = lu.solve(b);
    if (!x.allFinite()) fail(on_singular, context + ": singular linear system");
    const double resid = (a * x - b).cwiseAbs().maxCoeff();
    if (resid > tol) fail(on_singular, context + ": solve residual " + std::to_string(resid));
    return x;
}

/// Largest eigenvalue of the symmetric part (M + M^T)/2.
inline double max_symmetric_eigenvalue(const Mat& m) {
    Mat sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

} // namespace stac
