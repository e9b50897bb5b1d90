#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "windcast/errors.hpp"
#include "windcast/linalg.hpp"
#include "windcast/rng.hpp"
#include "windcast/time_series.hpp"

namespace windcast {

/// ARMA(p, q) in operator form Psi(L) theta_t = Phi(L) eps_t with
/// Psi(L) = 1 - sum psi_s L^s and Phi(L) = 1 - sum phi_s L^s, exactly as the
/// operators are usually printed ("1 - 0.9876 L" means psi_1 = +0.9876).
/// On the mean-adjusted series this reads
///   theta_t = sum_s psi_s theta_{t-s} + eps_t - sum_s phi_s eps_{t-s}.
struct ArmaModel {
	int p = 0;
	int q = 0;
	std::vector<double> ar_coeffs; // psi_1..psi_p
	std::vector<double> ma_coeffs; // phi_1..phi_q
	double mean = 0.0;
	double noise_variance = 0.0;
	bool refinement_converged = true;
};

/// ARMA fitted to the d-times differenced series; seed_values retains the d
/// dropped leading values (one per differencing level) from the fit data.
struct ArimaModel {
	ArmaModel inner;
	int d = 0;
	std::vector<double> seed_values;
};

struct OrderScore {
	int p = 0;
	int q = 0;
	double aic = 0.0;
	double mdl = 0.0;
	double noise_variance = 0.0;
	bool perfect_fit = false;
};

enum class StationarityMethod { paper_magnitude, unit_root };

struct StationarityDiagnostics {
	bool stationary = false;
	StationarityMethod method = StationarityMethod::unit_root;
	double max_abs_ar = 0.0;
	double max_abs_ma = 0.0;
	std::vector<double> ar_root_moduli; // roots of Psi(z)
	std::vector<double> ma_root_moduli; // roots of Phi(z)
};

enum class CriterionKind { aic, mdl };

/// Conditional residuals over a mean-adjusted sequence: the recursion starts
/// at t = p and every pre-sample residual is fixed at zero.
inline std::vector<double> arma_conditional_residuals(const ArmaModel& model,
                                                      const std::vector<double>& adjusted) {
	const std::size_t n = adjusted.size();
	const auto p = static_cast<std::size_t>(model.p);
	std::vector<double> eps(n, 0.0);
	for (std::size_t t = p; t < n; ++t) {
		double value = adjusted[t];
		for (int s = 1; s <= model.p; ++s)
			value -= model.ar_coeffs[static_cast<std::size_t>(s - 1)] * adjusted[t - static_cast<std::size_t>(s)];
		for (int s = 1; s <= model.q; ++s) {
			const std::size_t lag = static_cast<std::size_t>(s);
			if (t >= lag) // pre-sample residuals are zero by construction
				value += model.ma_coeffs[lag - 1] * eps[t - lag];
		}
		eps[t] = value;
	}
	return eps;
}

/// Conditional sum of squared residuals and the residual count (n - p).
inline std::pair<double, std::size_t> arma_residual_sse(const ArmaModel& model,
                                                        const TimeSeries& series) {
	std::vector<double> adjusted = series.values;
	for (double& v : adjusted) v -= model.mean;
	const std::vector<double> eps = arma_conditional_residuals(model, adjusted);
	double sse = 0.0;
	for (std::size_t t = static_cast<std::size_t>(model.p); t < eps.size(); ++t)
		sse += eps[t] * eps[t];
	return {sse, eps.size() - static_cast<std::size_t>(model.p)};
}

namespace detail {

/// Least-squares long autoregression; returns residual proxies (zero before
/// index `order`).
inline std::vector<double> long_ar_residuals(const std::vector<double>& x, int order) {
	const std::size_t n = x.size();
	const auto l = static_cast<std::size_t>(order);
	const std::size_t rows = n - l;
	Eigen::MatrixXd design(static_cast<Eigen::Index>(rows), order);
	Eigen::VectorXd rhs(static_cast<Eigen::Index>(rows));
	for (std::size_t t = l; t < n; ++t) {
		for (int j = 1; j <= order; ++j)
			design(static_cast<Eigen::Index>(t - l), j - 1) = x[t - static_cast<std::size_t>(j)];
		rhs(static_cast<Eigen::Index>(t - l)) = x[t];
	}
	const Eigen::VectorXd coeffs = solve_least_squares(design, rhs);
	std::vector<double> residuals(n, 0.0);
	for (std::size_t t = l; t < n; ++t) {
		double prediction = 0.0;
		for (int j = 1; j <= order; ++j)
			prediction += coeffs(j - 1) * x[t - static_cast<std::size_t>(j)];
		residuals[t] = x[t] - prediction;
	}
	return residuals;
}

struct CssEvaluation {
	double sse = std::numeric_limits<double>::infinity();
	bool finite = false;
};

inline CssEvaluation css_sse(const std::vector<double>& x, const ArmaModel& model) {
	const std::vector<double> eps = arma_conditional_residuals(model, x);
	double sse = 0.0;
	for (std::size_t t = static_cast<std::size_t>(model.p); t < eps.size(); ++t)
		sse += eps[t] * eps[t];
	if (!std::isfinite(sse)) return {};
	return {sse, true};
}

/// Residuals and their Jacobian w.r.t. (psi_1..psi_p, phi_1..phi_q). The
/// derivative recursions share the MA feedback of the residual recursion.
inline void css_residuals_and_jacobian(const std::vector<double>& x, const ArmaModel& model,
                                       Eigen::VectorXd& eps_out, Eigen::MatrixXd& jac_out) {
	const std::size_t n = x.size();
	const auto p = static_cast<std::size_t>(model.p);
	const auto q = static_cast<std::size_t>(model.q);
	const std::size_t k = p + q;
	const std::vector<double> eps = arma_conditional_residuals(model, x);

	std::vector<std::vector<double>> deps(k, std::vector<double>(n, 0.0));
	for (std::size_t t = p; t < n; ++t) {
		for (std::size_t s = 1; s <= p; ++s) {
			double& d = deps[s - 1][t];
			d = -x[t - s];
			for (std::size_t j = 1; j <= q && j <= t; ++j)
				d += model.ma_coeffs[j - 1] * deps[s - 1][t - j];
		}
		for (std::size_t s = 1; s <= q; ++s) {
			double& d = deps[p + s - 1][t];
			d = (t >= s) ? eps[t - s] : 0.0;
			for (std::size_t j = 1; j <= q && j <= t; ++j)
				d += model.ma_coeffs[j - 1] * deps[p + s - 1][t - j];
		}
	}

	const std::size_t rows = n - p;
	eps_out.resize(static_cast<Eigen::Index>(rows));
	jac_out.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(k));
	for (std::size_t t = p; t < n; ++t) {
		eps_out(static_cast<Eigen::Index>(t - p)) = eps[t];
		for (std::size_t c = 0; c < k; ++c)
			jac_out(static_cast<Eigen::Index>(t - p), static_cast<Eigen::Index>(c)) = deps[c][t];
	}
}

inline void assign_params(ArmaModel& model, const Eigen::VectorXd& params) {
	for (int s = 0; s < model.p; ++s) model.ar_coeffs[static_cast<std::size_t>(s)] = params(s);
	for (int s = 0; s < model.q; ++s) model.ma_coeffs[static_cast<std::size_t>(s)] = params(model.p + s);
}

/// Gauss-Newton polish of the conditional sum of squares, with step halving.
/// Returns false only when the damped solve breaks down numerically; running
/// out of iterations is a normal exit.
inline bool refine_css(const std::vector<double>& x, ArmaModel& model) {
	const int k = model.p + model.q;
	if (k == 0) return true;

	Eigen::VectorXd params(k);
	for (int s = 0; s < model.p; ++s) params(s) = model.ar_coeffs[static_cast<std::size_t>(s)];
	for (int s = 0; s < model.q; ++s) params(model.p + s) = model.ma_coeffs[static_cast<std::size_t>(s)];

	CssEvaluation current = css_sse(x, model);
	if (!current.finite) return false;

	Eigen::VectorXd eps;
	Eigen::MatrixXd jac;
	for (int iter = 0; iter < 50; ++iter) {
		css_residuals_and_jacobian(x, model, eps, jac);
		const Eigen::VectorXd gradient = jac.transpose() * eps;
		if (gradient.lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + current.sse))
			return true;

		Eigen::MatrixXd normal = jac.transpose() * jac;
		Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
		Eigen::VectorXd step = ldlt.solve(-gradient);
		if (ldlt.info() != Eigen::Success || !step.allFinite()) {
			// retry once with a small ridge before giving up
			normal.diagonal().array() += 1e-8 * (1.0 + normal.diagonal().maxCoeff());
			ldlt.compute(normal);
			step = ldlt.solve(-gradient);
			if (ldlt.info() != Eigen::Success || !step.allFinite())
				return false;
		}

		double alpha = 1.0;
		bool accepted = false;
		for (int halving = 0; halving < 12; ++halving) {
			ArmaModel trial = model;
			assign_params(trial, params + alpha * step);
			const CssEvaluation eval = css_sse(x, trial);
			if (eval.finite && eval.sse < current.sse) {
				params += alpha * step;
				model = std::move(trial);
				const double improvement = (current.sse - eval.sse) / std::max(current.sse, 1e-300);
				current = eval;
				if (improvement < 1e-10) return true;
				accepted = true;
				break;
			}
			alpha *= 0.5;
		}
		if (!accepted) return true; // no descent left at this precision
	}
	return true;
}

} // namespace detail

/// Two-stage conditional least squares: a long autoregression supplies
/// residual proxies, a linear regression on lagged values and lagged proxies
/// gives starting coefficients, and Gauss-Newton on the conditional sum of
/// squares polishes them. The series mean is removed first and stored on the
/// model.
inline ArmaModel estimate_arma(const TimeSeries& series, int p, int q) {
	if (p < 0 || q < 0)
		throw ConfigError("ARMA orders must be non-negative");
	const std::size_t n = series.size();
	if (n < static_cast<std::size_t>(10 * (p + q + 1)))
		throw SeriesTooShort("need at least " + std::to_string(10 * (p + q + 1)) +
		                     " observations to estimate ARMA(" + std::to_string(p) +
		                     "," + std::to_string(q) + "), got " + std::to_string(n));

	ArmaModel model;
	model.p = p;
	model.q = q;
	model.ar_coeffs.assign(static_cast<std::size_t>(p), 0.0);
	model.ma_coeffs.assign(static_cast<std::size_t>(q), 0.0);

	double mean = 0.0;
	for (double v : series.values) mean += v;
	mean /= static_cast<double>(n);
	model.mean = mean;

	std::vector<double> x = series.values;
	for (double& v : x) v -= mean;

	if (p == 0 && q == 0) {
		double sse = 0.0;
		for (double v : x) sse += v * v;
		model.noise_variance = sse / static_cast<double>(n);
		return model;
	}

	// stage 1: residual proxies from a long autoregression (only needed for MA terms)
	std::vector<double> proxies;
	int long_order = 0;
	if (q > 0) {
		long_order = std::min<int>(20, static_cast<int>(n / 4));
		long_order = std::max(long_order, p + q);
		proxies = detail::long_ar_residuals(x, long_order);
	}

	// stage 2: regress x_t on its p lags and the q lagged residual proxies
	const std::size_t t0 = static_cast<std::size_t>(
	    std::max(p, q > 0 ? long_order + q : 0));
	const std::size_t rows = n - t0;
	const int cols = p + q;
	if (rows < static_cast<std::size_t>(cols))
		throw SeriesTooShort("too few rows for the ARMA start-up regression");
	Eigen::MatrixXd design(static_cast<Eigen::Index>(rows), cols);
	Eigen::VectorXd rhs(static_cast<Eigen::Index>(rows));
	for (std::size_t t = t0; t < n; ++t) {
		const auto row = static_cast<Eigen::Index>(t - t0);
		for (int s = 1; s <= p; ++s)
			design(row, s - 1) = x[t - static_cast<std::size_t>(s)];
		for (int s = 1; s <= q; ++s)
			design(row, p + s - 1) = proxies[t - static_cast<std::size_t>(s)];
		rhs(row) = x[t];
	}
	const Eigen::VectorXd beta = solve_least_squares(design, rhs);
	for (int s = 0; s < p; ++s) model.ar_coeffs[static_cast<std::size_t>(s)] = beta(s);
	// regression sign: x_t = ... + c_s eps_{t-s}, while the model carries -phi_s
	for (int s = 0; s < q; ++s) model.ma_coeffs[static_cast<std::size_t>(s)] = -beta(p + s);

	model.refinement_converged = detail::refine_css(x, model);

	const detail::CssEvaluation final_eval = detail::css_sse(x, model);
	const std::size_t n_eff = n - static_cast<std::size_t>(p);
	model.noise_variance = final_eval.finite ? final_eval.sse / static_cast<double>(n_eff) : 0.0;
	return model;
}

/// Forecast by running the model recursion forward: residuals over the
/// history come from the conditional recursion, every future residual is its
/// expectation zero, and the stored mean is restored at the end.
inline std::vector<double> forecast_arma(const ArmaModel& model,
                                         const TimeSeries& history, int steps) {
	if (steps < 1)
		throw ConfigError("steps must be at least 1");
	const std::size_t n = history.size();
	const std::size_t need = static_cast<std::size_t>(std::max({model.p, model.q, 1}));
	if (n < need)
		throw InsufficientHistory("history of length " + std::to_string(n) +
		                          " is too short for ARMA(" + std::to_string(model.p) +
		                          "," + std::to_string(model.q) + ")");

	std::vector<double> x = history.values;
	for (double& v : x) v -= model.mean;
	const std::vector<double> eps = arma_conditional_residuals(model, x);

	std::vector<double> extended = x;
	extended.reserve(n + static_cast<std::size_t>(steps));
	std::vector<double> forecasts;
	forecasts.reserve(static_cast<std::size_t>(steps));
	for (int h = 1; h <= steps; ++h) {
		const std::size_t t = extended.size();
		double value = 0.0;
		for (int s = 1; s <= model.p; ++s) {
			const std::size_t lag = static_cast<std::size_t>(s);
			if (t >= lag)
				value += model.ar_coeffs[lag - 1] * extended[t - lag];
		}
		for (int s = 1; s <= model.q; ++s) {
			const std::size_t lag = static_cast<std::size_t>(s);
			if (t >= lag && t - lag < n)
				value -= model.ma_coeffs[lag - 1] * eps[t - lag];
			// future residuals enter at their expectation, zero
		}
		extended.push_back(value);
		forecasts.push_back(value + model.mean);
	}
	return forecasts;
}

/// All |psi_s| and |phi_s| below one (the printed-operator magnitude rule),
/// or all AR characteristic roots strictly outside the unit circle.
inline StationarityDiagnostics check_stationarity(const ArmaModel& model,
                                                  StationarityMethod method) {
	StationarityDiagnostics diag;
	diag.method = method;
	for (double c : model.ar_coeffs) diag.max_abs_ar = std::max(diag.max_abs_ar, std::abs(c));
	for (double c : model.ma_coeffs) diag.max_abs_ma = std::max(diag.max_abs_ma, std::abs(c));

	std::vector<double> ar_poly{1.0};
	for (double c : model.ar_coeffs) ar_poly.push_back(-c);
	for (const auto& root : polynomial_roots(ar_poly))
		diag.ar_root_moduli.push_back(std::abs(root));
	std::vector<double> ma_poly{1.0};
	for (double c : model.ma_coeffs) ma_poly.push_back(-c);
	for (const auto& root : polynomial_roots(ma_poly))
		diag.ma_root_moduli.push_back(std::abs(root));
	std::sort(diag.ar_root_moduli.begin(), diag.ar_root_moduli.end());
	std::sort(diag.ma_root_moduli.begin(), diag.ma_root_moduli.end());

	if (method == StationarityMethod::paper_magnitude) {
		diag.stationary = diag.max_abs_ar < 1.0 && diag.max_abs_ma < 1.0;
	} else {
		diag.stationary = true;
		for (double modulus : diag.ar_root_moduli)
			if (modulus <= 1.0 + 1e-8) diag.stationary = false;
	}
	return diag;
}

/// Seeded simulation with Gaussian shocks and a 500-sample burn-in.
inline TimeSeries simulate_arma(const ArmaModel& model, std::size_t n, std::uint64_t seed,
                                std::int64_t start_time = 0,
                                std::int64_t step_seconds = kDefaultStepSeconds) {
	if (n < 1)
		throw ConfigError("simulation length must be at least 1");
	if (model.noise_variance < 0.0)
		throw ConfigError("noise variance must be non-negative");
	if (!check_stationarity(model, StationarityMethod::unit_root).stationary)
		throw NonStationary("refusing to simulate a non-stationary model");

	constexpr std::size_t kBurnIn = 500;
	const double sigma = std::sqrt(model.noise_variance);
	Rng rng(seed);
	const std::size_t total = kBurnIn + n;
	std::vector<double> x(total, 0.0), eps(total, 0.0);
	for (std::size_t t = 0; t < total; ++t) {
		eps[t] = sigma * rng.normal();
		double value = eps[t];
		for (int s = 1; s <= model.p; ++s) {
			const std::size_t lag = static_cast<std::size_t>(s);
			if (t >= lag) value += model.ar_coeffs[lag - 1] * x[t - lag];
		}
		for (int s = 1; s <= model.q; ++s) {
			const std::size_t lag = static_cast<std::size_t>(s);
			if (t >= lag) value -= model.ma_coeffs[lag - 1] * eps[t - lag];
		}
		x[t] = value;
	}
	TimeSeries out{start_time, step_seconds, {}};
	out.values.assign(x.begin() + kBurnIn, x.end());
	for (double& v : out.values) v += model.mean;
	return out;
}

/// AIC or MDL from a conditional residual sum of squares; a perfect fit
/// (zero SSE) yields the -infinity sentinel.
inline double information_criterion(const ArmaModel& model, double residual_sse,
                                    std::size_t n, CriterionKind kind) {
	const int k = model.p + model.q + 1;
	if (n <= static_cast<std::size_t>(k))
		throw ConfigError("criterion needs n > p + q + 1");
	if (residual_sse < 0.0)
		throw ConfigError("residual SSE must be non-negative");
	if (residual_sse == 0.0)
		return -std::numeric_limits<double>::infinity();
	const double nd = static_cast<double>(n);
	const double log_variance = std::log(residual_sse / nd);
	const double penalty = (kind == CriterionKind::aic)
	                           ? 2.0 * static_cast<double>(k)
	                           : static_cast<double>(k) * std::log(nd);
	return nd * log_variance + penalty;
}

struct OrderSelection {
	ArmaModel model;
	std::vector<OrderScore> grid;
};

/// Estimates every order pair on the (0..p_max) x (0..q_max) grid and keeps
/// the criterion minimiser; ties go to the smaller p + q, then the smaller p.
/// Order pairs whose estimation fails are left out of the grid.
inline OrderSelection select_order(const TimeSeries& series, int p_max, int q_max,
                                   CriterionKind kind) {
	if (p_max < 0 || q_max < 0 || (p_max == 0 && q_max == 0))
		throw ConfigError("order grid must extend beyond (0,0)");

	OrderSelection selection;
	bool have_best = false;
	ArmaModel best_model;
	OrderScore best_score;
	double best_value = std::numeric_limits<double>::infinity();

	for (int p = 0; p <= p_max; ++p) {
		for (int q = 0; q <= q_max; ++q) {
			ArmaModel model;
			OrderScore score;
			try {
				model = estimate_arma(series, p, q);
				const auto [sse, n_eff] = arma_residual_sse(model, series);
				score.p = p;
				score.q = q;
				score.noise_variance = model.noise_variance;
				score.perfect_fit = (sse == 0.0);
				score.aic = information_criterion(model, sse, n_eff, CriterionKind::aic);
				score.mdl = information_criterion(model, sse, n_eff, CriterionKind::mdl);
			} catch (const Error&) {
				continue;
			}
			selection.grid.push_back(score);
			const double value = (kind == CriterionKind::aic) ? score.aic : score.mdl;
			const double eps = 1e-9 * std::max({1.0, std::abs(value), std::abs(best_value)});
			bool better = false;
			if (!have_best || value < best_value - eps) {
				better = true;
			} else if (std::abs(value - best_value) <= eps) {
				const int sum = p + q;
				const int best_sum = best_score.p + best_score.q;
				better = sum < best_sum || (sum == best_sum && p < best_score.p);
			}
			if (better) {
				best_model = std::move(model);
				best_score = score;
				best_value = value;
				have_best = true;
			}
		}
	}
	if (!have_best)
		throw SingularSystem("every order pair in the grid failed to estimate");
	selection.model = std::move(best_model);
	return selection;
}

/// Difference d times (retaining seeds), then estimate an ARMA on the result.
/// The differenced-series mean is kept on the inner model and acts as drift.
inline ArimaModel fit_arima(const TimeSeries& series, int p, int d, int q) {
	if (d < 0)
		throw ConfigError("differencing order must be non-negative");
	ArimaModel model;
	model.d = d;
	if (d == 0) {
		model.inner = estimate_arma(series, p, q);
		return model;
	}
	DifferencedSeries diffed = difference(series, d);
	model.inner = estimate_arma(diffed.series, p, q);
	model.seed_values = std::move(diffed.seeds);
	return model;
}

/// Forecast in differenced space, then integrate back from the last d
/// observed values of the supplied history.
inline std::vector<double> forecast_arima(const ArimaModel& model,
                                          const TimeSeries& history, int steps) {
	if (model.d == 0)
		return forecast_arma(model.inner, history, steps);
	if (history.size() <= static_cast<std::size_t>(model.d))
		throw InsufficientHistory("history too short to difference " +
		                          std::to_string(model.d) + " times");

	// tails[k] = last value of the k-times differenced history
	std::vector<double> tails(static_cast<std::size_t>(model.d));
	std::vector<double> level = history.values;
	for (int k = 0; k < model.d; ++k) {
		tails[static_cast<std::size_t>(k)] = level.back();
		std::vector<double> next(level.size() - 1);
		for (std::size_t i = 0; i + 1 < level.size(); ++i)
			next[i] = level[i + 1] - level[i];
		level = std::move(next);
	}

	TimeSeries diffed_history{history.start_time + model.d * history.step_seconds,
	                          history.step_seconds, std::move(level)};
	const std::vector<double> diff_forecasts =
	    forecast_arma(model.inner, diffed_history, steps);

	std::vector<double> forecasts;
	forecasts.reserve(diff_forecasts.size());
	for (double value : diff_forecasts) {
		for (int k = model.d - 1; k >= 0; --k) {
			value += tails[static_cast<std::size_t>(k)];
			tails[static_cast<std::size_t>(k)] = value;
		}
		forecasts.push_back(value);
	}
	return forecasts;
}

} // namespace windcast
