#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "windcast/errors.hpp"

namespace windcast {

/// Least squares via rank-revealing QR. Throws RankDeficient when the design
/// matrix does not have full column rank.
inline Eigen::VectorXd solve_least_squares(const Eigen::MatrixXd& design,
                                           const Eigen::VectorXd& rhs) {
	if (design.rows() != rhs.size())
		throw SizeMismatch("design rows and rhs length differ");
	if (design.rows() < design.cols())
		throw RankDeficient("fewer equations than unknowns");
	Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
	if (qr.rank() < design.cols())
		throw RankDeficient("design matrix is rank deficient (rank " +
		                    std::to_string(qr.rank()) + " of " +
		                    std::to_string(design.cols()) + ")");
	return qr.solve(rhs);
}

/// Roots of c[0] + c[1] z + ... + c[m] z^m via the companion matrix.
/// Trailing coefficients below `tol` are dropped first.
inline std::vector<std::complex<double>>
polynomial_roots(const std::vector<double>& coeffs, double tol = 1e-12) {
	std::size_t m = coeffs.size();
	while (m > 0 && std::abs(coeffs[m - 1]) <= tol) --m;
	if (m <= 1) return {}; // constant polynomial, no roots
	const std::size_t deg = m - 1;
	Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(deg),
	                                                  static_cast<Eigen::Index>(deg));
	for (std::size_t i = 1; i < deg; ++i)
		companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
	for (std::size_t i = 0; i < deg; ++i)
		companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(deg - 1)) =
		    -coeffs[i] / coeffs[deg];
	Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
	std::vector<std::complex<double>> roots(deg);
	for (std::size_t i = 0; i < deg; ++i)
		roots[i] = solver.eigenvalues()(static_cast<Eigen::Index>(i));
	return roots;
}

} // namespace windcast
