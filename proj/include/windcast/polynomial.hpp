#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "windcast/errors.hpp"
#include "windcast/linalg.hpp"
#include "windcast/supervised.hpp"

namespace windcast {

/// Conditioning guard: double-precision Vandermonde fits beyond degree 10 are
/// unreliable at wind-speed data scales.
inline constexpr int kMaxPolynomialDegree = 10;

/// Single-predictor polynomial autoregression: predicts the speed
/// horizon_steps ahead as a_0 + a_1 y + ... + a_n y^n of the current speed y.
struct PolynomialModel {
	int degree = 0;
	std::vector<double> coefficients; // a_0..a_n ascending
	int horizon_steps = 1;
	double train_mse = std::numeric_limits<double>::quiet_NaN();
	double train_r = std::numeric_limits<double>::quiet_NaN(); // NaN when undefined
};

/// Horner evaluation of the fitted polynomial at predictor y (m/s).
inline double eval_polynomial(const PolynomialModel& model, double y) {
	double acc = 0.0;
	for (auto it = model.coefficients.rbegin(); it != model.coefficients.rend(); ++it)
		acc = acc * y + *it;
	return acc;
}

namespace detail {

/// Expands coefficients of sum c_k (y - shift)^k into raw powers of y.
inline std::vector<double> uncenter_coefficients(const std::vector<double>& centered,
                                                 double shift) {
	const std::size_t n = centered.size();
	std::vector<double> raw(n, 0.0);
	// binomial table up to degree n-1
	std::vector<std::vector<double>> choose(n, std::vector<double>(n, 0.0));
	for (std::size_t k = 0; k < n; ++k) {
		choose[k][0] = 1.0;
		for (std::size_t j = 1; j <= k; ++j)
			choose[k][j] = choose[k - 1][j - 1] + (j <= k - 1 ? choose[k - 1][j] : 0.0);
	}
	for (std::size_t k = 0; k < n; ++k) {
		double power = 1.0; // (-shift)^(k-j), built from j=k downward
		for (std::size_t j = k + 1; j-- > 0;) {
			raw[j] += centered[k] * choose[k][j] * power;
			power *= -shift;
		}
	}
	return raw;
}

inline double pearson_or_nan(const std::vector<double>& a, const std::vector<double>& b) {
	const std::size_t n = a.size();
	if (n < 2) return std::numeric_limits<double>::quiet_NaN();
	double ma = 0.0, mb = 0.0;
	for (std::size_t i = 0; i < n; ++i) { ma += a[i]; mb += b[i]; }
	ma /= static_cast<double>(n);
	mb /= static_cast<double>(n);
	double saa = 0.0, sbb = 0.0, sab = 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		const double da = a[i] - ma, db = b[i] - mb;
		saa += da * da;
		sbb += db * db;
		sab += da * db;
	}
	if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
	return sab / std::sqrt(saa * sbb);
}

} // namespace detail

/// Least-squares fit of the given degree. The predictor column is centred on
/// its training mean before the Vandermonde matrix is built (QR on the
/// centred design, coefficients mapped back), which keeps the system well
/// conditioned without changing the fitted polynomial.
inline PolynomialModel fit_polynomial(const SupervisedSet& pairs, int degree) {
	if (pairs.num_lags != 1)
		throw SizeMismatch("polynomial fitting expects num_lags == 1, got " +
		                   std::to_string(pairs.num_lags));
	if (degree < 0)
		throw ConfigError("degree must be non-negative");
	if (degree > kMaxPolynomialDegree)
		throw DegreeTooLarge("degree " + std::to_string(degree) +
		                     " exceeds the conditioning cap of " +
		                     std::to_string(kMaxPolynomialDegree));
	const std::size_t m = pairs.size();
	const std::size_t cols = static_cast<std::size_t>(degree) + 1;
	if (m < cols)
		throw RankDeficient("need at least " + std::to_string(cols) +
		                    " pairs for a degree-" + std::to_string(degree) + " fit");

	std::vector<double> predictors(m);
	for (std::size_t i = 0; i < m; ++i) predictors[i] = pairs.inputs[i][0];
	if (std::set<double>(predictors.begin(), predictors.end()).size() < cols)
		throw RankDeficient("need at least " + std::to_string(cols) +
		                    " distinct predictor values for degree " +
		                    std::to_string(degree));

	double shift = 0.0;
	for (double y : predictors) shift += y;
	shift /= static_cast<double>(m);

	Eigen::MatrixXd design(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(cols));
	for (std::size_t i = 0; i < m; ++i) {
		const double t = predictors[i] - shift;
		double power = 1.0;
		for (std::size_t k = 0; k < cols; ++k) {
			design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = power;
			power *= t;
		}
	}
	Eigen::VectorXd rhs(static_cast<Eigen::Index>(m));
	for (std::size_t i = 0; i < m; ++i) rhs(static_cast<Eigen::Index>(i)) = pairs.targets[i];

	const Eigen::VectorXd centered = solve_least_squares(design, rhs);

	PolynomialModel model;
	model.degree = degree;
	model.coefficients = detail::uncenter_coefficients(
	    {centered.data(), centered.data() + centered.size()}, shift);
	model.horizon_steps = pairs.horizon_steps;
	for (double a : model.coefficients)
		if (!std::isfinite(a))
			throw SingularSystem("polynomial fit produced a non-finite coefficient");

	std::vector<double> fitted(m);
	double sse = 0.0;
	for (std::size_t i = 0; i < m; ++i) {
		fitted[i] = eval_polynomial(model, predictors[i]);
		const double e = pairs.targets[i] - fitted[i];
		sse += e * e;
	}
	model.train_mse = sse / static_cast<double>(m);
	model.train_r = detail::pearson_or_nan(pairs.targets, fitted);
	return model;
}

/// Validation MSE of a fitted model over a supervised set.
inline double validation_mse(const PolynomialModel& model, const SupervisedSet& set) {
	if (set.num_lags != 1)
		throw SizeMismatch("polynomial validation expects num_lags == 1");
	if (set.size() == 0)
		throw SeriesTooShort("validation set is empty");
	double sse = 0.0;
	for (std::size_t i = 0; i < set.size(); ++i) {
		const double e = set.targets[i] - eval_polynomial(model, set.inputs[i][0]);
		sse += e * e;
	}
	return sse / static_cast<double>(set.size());
}

/// Fits every candidate degree on `train` and keeps the one with the lowest
/// validation MSE; near-ties (within 1e-12 relative) go to the lower degree.
/// Candidates whose fits fail are skipped; if every candidate fails, the
/// first failure is rethrown.
inline PolynomialModel select_degree(const SupervisedSet& train,
                                     std::vector<int> candidates,
                                     const SupervisedSet& validation) {
	if (candidates.empty())
		throw ConfigError("candidate degree list is empty");
	std::sort(candidates.begin(), candidates.end());
	candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

	bool have_best = false;
	PolynomialModel best;
	double best_mse = std::numeric_limits<double>::infinity();
	std::exception_ptr first_error;
	for (int degree : candidates) {
		try {
			PolynomialModel model = fit_polynomial(train, degree);
			const double mse = validation_mse(model, validation);
			const bool tied = std::abs(mse - best_mse) <= 1e-12 * (1.0 + std::max(mse, best_mse));
			if (!have_best || (mse < best_mse && !tied)) {
				best = std::move(model);
				best_mse = mse;
				have_best = true;
			}
		} catch (const Error&) {
			if (!first_error) first_error = std::current_exception();
		}
	}
	if (!have_best)
		std::rethrow_exception(first_error);
	return best;
}

} // namespace windcast
