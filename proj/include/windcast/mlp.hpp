#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "windcast/errors.hpp"
#include "windcast/rng.hpp"
#include "windcast/scaling.hpp"
#include "windcast/supervised.hpp"
#include "windcast/time_series.hpp"

namespace windcast {

/// Activation kinds, named after their conventional training-toolbox labels.
enum class Activation { logsig, tansig, purelin };

inline double apply_activation(Activation kind, double s) {
	switch (kind) {
	case Activation::logsig: return 1.0 / (1.0 + std::exp(-s));
	case Activation::tansig: return std::tanh(s);
	case Activation::purelin: return s;
	}
	return s;
}

/// Derivative expressed through the activation output y.
inline double activation_derivative_from_output(Activation kind, double y) {
	switch (kind) {
	case Activation::logsig: return y * (1.0 - y);
	case Activation::tansig: return 1.0 - y * y;
	case Activation::purelin: return 1.0;
	}
	return 1.0;
}

inline bool activation_is_bounded(Activation kind) {
	return kind != Activation::purelin;
}

inline std::string activation_name(Activation kind) {
	switch (kind) {
	case Activation::logsig: return "logsig";
	case Activation::tansig: return "tansig";
	case Activation::purelin: return "purelin";
	}
	return "purelin";
}

inline Activation activation_from_name(const std::string& name) {
	if (name == "logsig") return Activation::logsig;
	if (name == "tansig") return Activation::tansig;
	if (name == "purelin") return Activation::purelin;
	throw ConfigError("unknown activation '" + name +
	                  "' (expected logsig, tansig or purelin)");
}

/// Topology plus one activation per computational layer (hidden layers in
/// order, then the output layer).
struct NetworkConfig {
	int input_size = 1;
	std::vector<int> hidden_layer_sizes;
	int output_size = 1;
	std::vector<Activation> activations;
	std::uint64_t seed = 0;
};

/// Fully connected feedforward network. Each layer computes
/// act(W x + b) with W(k, j) the weight from source j to neuron k.
class MlpNetwork {
public:
	struct Layer {
		Eigen::MatrixXd weights;
		Eigen::VectorXd biases;
		Activation activation = Activation::purelin;
	};

	MlpNetwork() = default;
	explicit MlpNetwork(std::vector<Layer> layers) : layers_(std::move(layers)) {}

	const std::vector<Layer>& layers() const { return layers_; }
	std::vector<Layer>& layers() { return layers_; }

	int input_size() const {
		return layers_.empty() ? 0 : static_cast<int>(layers_.front().weights.cols());
	}
	int output_size() const {
		return layers_.empty() ? 0 : static_cast<int>(layers_.back().weights.rows());
	}

	std::size_t parameter_count() const {
		std::size_t count = 0;
		for (const Layer& layer : layers_)
			count += static_cast<std::size_t>(layer.weights.size() + layer.biases.size());
		return count;
	}

	/// Flattened parameter vector: per layer, weights in neuron-major order
	/// (row by row), then that layer's biases.
	Eigen::VectorXd parameters() const {
		Eigen::VectorXd flat(static_cast<Eigen::Index>(parameter_count()));
		Eigen::Index at = 0;
		for (const Layer& layer : layers_) {
			for (Eigen::Index k = 0; k < layer.weights.rows(); ++k)
				for (Eigen::Index j = 0; j < layer.weights.cols(); ++j)
					flat(at++) = layer.weights(k, j);
			for (Eigen::Index k = 0; k < layer.biases.size(); ++k)
				flat(at++) = layer.biases(k);
		}
		return flat;
	}

	void set_parameters(const Eigen::VectorXd& flat) {
		if (flat.size() != static_cast<Eigen::Index>(parameter_count()))
			throw SizeMismatch("parameter vector length does not match the network");
		Eigen::Index at = 0;
		for (Layer& layer : layers_) {
			for (Eigen::Index k = 0; k < layer.weights.rows(); ++k)
				for (Eigen::Index j = 0; j < layer.weights.cols(); ++j)
					layer.weights(k, j) = flat(at++);
			for (Eigen::Index k = 0; k < layer.biases.size(); ++k)
				layer.biases(k) = flat(at++);
		}
	}

private:
	std::vector<Layer> layers_;
};

/// Seeded uniform initialisation in [-1/sqrt(fan_in), +1/sqrt(fan_in)],
/// biases zero. The same seed always yields the same network.
inline MlpNetwork init_network(const NetworkConfig& config) {
	if (config.input_size < 1 || config.output_size < 1)
		throw ConfigError("input_size and output_size must be at least 1");
	for (int size : config.hidden_layer_sizes)
		if (size < 1)
			throw ConfigError("hidden layer sizes must be at least 1");
	if (config.activations.size() != config.hidden_layer_sizes.size() + 1)
		throw ConfigError("need one activation per hidden layer plus the output layer");

	std::vector<int> widths;
	widths.push_back(config.input_size);
	widths.insert(widths.end(), config.hidden_layer_sizes.begin(), config.hidden_layer_sizes.end());
	widths.push_back(config.output_size);

	Rng rng(config.seed);
	std::vector<MlpNetwork::Layer> layers;
	layers.reserve(widths.size() - 1);
	for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
		MlpNetwork::Layer layer;
		const int fan_in = widths[l];
		const int fan_out = widths[l + 1];
		const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
		layer.weights.resize(fan_out, fan_in);
		for (int k = 0; k < fan_out; ++k)
			for (int j = 0; j < fan_in; ++j)
				layer.weights(k, j) = rng.uniform(-bound, bound);
		layer.biases = Eigen::VectorXd::Zero(fan_out);
		layer.activation = config.activations[l];
		layers.push_back(std::move(layer));
	}
	return MlpNetwork(std::move(layers));
}

inline Eigen::VectorXd forward(const MlpNetwork& network, const Eigen::VectorXd& input) {
	if (input.size() != network.input_size())
		throw SizeMismatch("input length " + std::to_string(input.size()) +
		                   " does not match network input size " +
		                   std::to_string(network.input_size()));
	Eigen::VectorXd activation = input;
	for (const auto& layer : network.layers()) {
		Eigen::VectorXd pre = layer.weights * activation + layer.biases;
		for (Eigen::Index k = 0; k < pre.size(); ++k)
			pre(k) = apply_activation(layer.activation, pre(k));
		activation = std::move(pre);
	}
	return activation;
}

inline std::vector<double> forward(const MlpNetwork& network, const std::vector<double>& input) {
	Eigen::VectorXd in = Eigen::Map<const Eigen::VectorXd>(input.data(),
	                                                       static_cast<Eigen::Index>(input.size()));
	const Eigen::VectorXd out = forward(network, in);
	return {out.data(), out.data() + out.size()};
}

namespace detail {

/// Sample-major dataset matrices (one row per sample).
struct Dataset {
	Eigen::MatrixXd inputs;
	Eigen::MatrixXd targets;

	Eigen::Index size() const { return inputs.rows(); }
};

inline Dataset to_dataset(const SupervisedSet& set, int input_size, int output_size) {
	if (set.size() == 0)
		throw SeriesTooShort("training set is empty");
	if (set.num_lags != input_size)
		throw SizeMismatch("dataset has " + std::to_string(set.num_lags) +
		                   " lags but the network expects " + std::to_string(input_size));
	if (output_size != 1)
		throw SizeMismatch("supervised sets carry scalar targets; output_size must be 1");
	Dataset data;
	data.inputs.resize(static_cast<Eigen::Index>(set.size()), input_size);
	data.targets.resize(static_cast<Eigen::Index>(set.size()), 1);
	for (std::size_t i = 0; i < set.size(); ++i) {
		for (int j = 0; j < input_size; ++j)
			data.inputs(static_cast<Eigen::Index>(i), j) = set.inputs[i][static_cast<std::size_t>(j)];
		data.targets(static_cast<Eigen::Index>(i), 0) = set.targets[i];
	}
	return data;
}

inline Eigen::MatrixXd apply_activation_matrix(Activation kind, Eigen::MatrixXd pre) {
	for (Eigen::Index i = 0; i < pre.rows(); ++i)
		for (Eigen::Index j = 0; j < pre.cols(); ++j)
			pre(i, j) = apply_activation(kind, pre(i, j));
	return pre;
}

inline Eigen::MatrixXd derivative_from_output_matrix(Activation kind, const Eigen::MatrixXd& out) {
	Eigen::MatrixXd d(out.rows(), out.cols());
	for (Eigen::Index i = 0; i < out.rows(); ++i)
		for (Eigen::Index j = 0; j < out.cols(); ++j)
			d(i, j) = activation_derivative_from_output(kind, out(i, j));
	return d;
}

/// Per-layer activations for a whole batch; index 0 is the input itself.
inline std::vector<Eigen::MatrixXd> forward_batch(const MlpNetwork& network,
                                                  const Eigen::MatrixXd& inputs) {
	std::vector<Eigen::MatrixXd> acts;
	acts.reserve(network.layers().size() + 1);
	acts.push_back(inputs);
	for (const auto& layer : network.layers()) {
		Eigen::MatrixXd pre = acts.back() * layer.weights.transpose();
		pre.rowwise() += layer.biases.transpose();
		acts.push_back(apply_activation_matrix(layer.activation, std::move(pre)));
	}
	return acts;
}

inline Eigen::MatrixXd predict_batch(const MlpNetwork& network, const Eigen::MatrixXd& inputs) {
	return forward_batch(network, inputs).back();
}

inline double batch_mse(const MlpNetwork& network, const Eigen::MatrixXd& inputs,
                        const Eigen::MatrixXd& targets) {
	const Eigen::MatrixXd outputs = predict_batch(network, inputs);
	return (outputs - targets).squaredNorm() / static_cast<double>(inputs.rows());
}

/// Reverse-mode gradient of half the summed squared error.
inline Eigen::VectorXd batch_gradient(const MlpNetwork& network, const Eigen::MatrixXd& inputs,
                                      const Eigen::MatrixXd& targets) {
	const auto& layers = network.layers();
	const std::vector<Eigen::MatrixXd> acts = forward_batch(network, inputs);

	std::vector<Eigen::MatrixXd> grad_w(layers.size());
	std::vector<Eigen::VectorXd> grad_b(layers.size());
	Eigen::MatrixXd delta = (acts.back() - targets)
	        .cwiseProduct(derivative_from_output_matrix(layers.back().activation, acts.back()));
	for (std::size_t l = layers.size(); l-- > 0;) {
		grad_w[l] = delta.transpose() * acts[l];
		grad_b[l] = delta.colwise().sum();
		if (l > 0)
			delta = (delta * layers[l].weights)
			        .cwiseProduct(derivative_from_output_matrix(layers[l - 1].activation, acts[l]));
	}

	Eigen::VectorXd flat(static_cast<Eigen::Index>(network.parameter_count()));
	Eigen::Index at = 0;
	for (std::size_t l = 0; l < layers.size(); ++l) {
		for (Eigen::Index k = 0; k < grad_w[l].rows(); ++k)
			for (Eigen::Index j = 0; j < grad_w[l].cols(); ++j)
				flat(at++) = grad_w[l](k, j);
		for (Eigen::Index k = 0; k < grad_b[l].size(); ++k)
			flat(at++) = grad_b[l](k);
	}
	return flat;
}

/// Residuals e = target - output and the Jacobian of the outputs w.r.t. the
/// flattened parameters; one row per (sample, output unit) pair.
inline void residuals_and_jacobian(const MlpNetwork& network, const Eigen::MatrixXd& inputs,
                                   const Eigen::MatrixXd& targets, Eigen::VectorXd& residuals,
                                   Eigen::MatrixXd& jacobian) {
	const auto& layers = network.layers();
	const std::vector<Eigen::MatrixXd> acts = forward_batch(network, inputs);
	const Eigen::Index n = inputs.rows();
	const Eigen::Index out_dim = targets.cols();
	const auto params = static_cast<Eigen::Index>(network.parameter_count());

	residuals.resize(n * out_dim);
	jacobian.resize(n * out_dim, params);
	for (Eigen::Index unit = 0; unit < out_dim; ++unit) {
		// seed the backward pass with d(output_unit)/d(pre-activation)
		Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(n, layers.back().weights.rows());
		delta.col(unit) = derivative_from_output_matrix(layers.back().activation, acts.back()).col(unit);
		std::vector<Eigen::MatrixXd> deltas(layers.size());
		deltas.back() = delta;
		for (std::size_t l = layers.size() - 1; l-- > 0;)
			deltas[l] = (deltas[l + 1] * layers[l + 1].weights)
			        .cwiseProduct(derivative_from_output_matrix(layers[l].activation, acts[l + 1]));

		Eigen::Index at = 0;
		for (std::size_t l = 0; l < layers.size(); ++l) {
			const Eigen::Index rows_l = layers[l].weights.rows();
			const Eigen::Index cols_l = layers[l].weights.cols();
			for (Eigen::Index k = 0; k < rows_l; ++k)
				for (Eigen::Index j = 0; j < cols_l; ++j) {
					jacobian.block(unit * n, at, n, 1).noalias() =
					    deltas[l].col(k).cwiseProduct(acts[l].col(j));
					++at;
				}
			for (Eigen::Index k = 0; k < rows_l; ++k) {
				jacobian.block(unit * n, at, n, 1) = deltas[l].col(k);
				++at;
			}
		}
		residuals.segment(unit * n, n) = targets.col(unit) - acts.back().col(unit);
	}
}

} // namespace detail

/// Gradient of half the summed squared error over the dataset, flattened in
/// the same layout as MlpNetwork::parameters().
inline std::vector<double> compute_gradient(const MlpNetwork& network,
                                            const SupervisedSet& dataset) {
	const detail::Dataset data =
	    detail::to_dataset(dataset, network.input_size(), network.output_size());
	const Eigen::VectorXd grad = detail::batch_gradient(network, data.inputs, data.targets);
	return {grad.data(), grad.data() + grad.size()};
}

enum class Trainer { gradient_descent, levenberg_marquardt, scaled_conjugate_gradient };

inline std::string trainer_name(Trainer t) {
	switch (t) {
	case Trainer::gradient_descent: return "gd";
	case Trainer::levenberg_marquardt: return "lm";
	case Trainer::scaled_conjugate_gradient: return "scg";
	}
	return "lm";
}

inline Trainer trainer_from_name(const std::string& name) {
	if (name == "gd" || name == "traingd") return Trainer::gradient_descent;
	if (name == "lm" || name == "trainlm") return Trainer::levenberg_marquardt;
	if (name == "scg" || name == "trainscg") return Trainer::scaled_conjugate_gradient;
	throw ConfigError("unknown trainer '" + name + "' (expected gd, lm or scg)");
}

struct TrainParams {
	Trainer trainer = Trainer::levenberg_marquardt;
	int max_epochs = 1000;
	double goal_mse = 1e-12;
	double mu0 = 1e-3;      // LM damping schedule
	double mu_inc = 10.0;
	double mu_dec = 0.1;
	double mu_max = 1e10;
	double learning_rate = 0.01; // gradient descent only
	double validation_fraction = 0.0;
	int patience = 6;
	std::uint64_t seed = 0; // base seed for multi-seed trials
};

enum class StopReason { goal, patience, max_epochs, damping_ceiling };

inline std::string stop_reason_name(StopReason reason) {
	switch (reason) {
	case StopReason::goal: return "goal";
	case StopReason::patience: return "patience";
	case StopReason::max_epochs: return "max_epochs";
	case StopReason::damping_ceiling: return "damping_ceiling";
	}
	return "max_epochs";
}

struct TrainReport {
	int epochs_run = 0;
	double final_train_mse = std::numeric_limits<double>::quiet_NaN();
	double best_validation_mse = std::numeric_limits<double>::quiet_NaN();
	std::vector<double> train_mse_history;
	std::vector<double> validation_mse_history; // empty without a validation split
	StopReason stop_reason = StopReason::max_epochs;
};

namespace detail {

/// Shared trainer scaffolding: chronological validation split, patience
/// bookkeeping and best-validation snapshotting.
class TrainSession {
public:
	TrainSession(MlpNetwork& network, const SupervisedSet& dataset, const TrainParams& params)
	    : network_(network), params_(params) {
		if (params.max_epochs < 1)
			throw ConfigError("max_epochs must be at least 1");
		if (params.validation_fraction < 0.0 || params.validation_fraction > 0.5)
			throw ConfigError("validation_fraction must lie in [0, 0.5]");
		const Dataset all = to_dataset(dataset, network.input_size(), network.output_size());
		const auto n = all.size();
		auto n_val = static_cast<Eigen::Index>(
		    std::floor(static_cast<double>(n) * params.validation_fraction));
		if (n - n_val < 1)
			throw SeriesTooShort("validation split leaves no training samples");
		train_x_ = all.inputs.topRows(n - n_val);
		train_y_ = all.targets.topRows(n - n_val);
		if (n_val > 0) {
			val_x_ = all.inputs.bottomRows(n_val);
			val_y_ = all.targets.bottomRows(n_val);
		}
	}

	const Eigen::MatrixXd& train_inputs() const { return train_x_; }
	const Eigen::MatrixXd& train_targets() const { return train_y_; }
	bool has_validation() const { return val_x_.rows() > 0; }

	double train_mse() const { return batch_mse(network_, train_x_, train_y_); }

	/// Records one finished epoch; returns true when training should stop.
	bool record_epoch(double train_mse, TrainReport& report) {
		report.train_mse_history.push_back(train_mse);
		report.epochs_run = static_cast<int>(report.train_mse_history.size());
		if (!std::isfinite(train_mse) || train_mse > 1e12)
			throw TrainingDiverged("training diverged at epoch " +
			                       std::to_string(report.epochs_run) +
			                       " (train MSE " + std::to_string(train_mse) + ")");
		if (has_validation()) {
			const double val = batch_mse(network_, val_x_, val_y_);
			report.validation_mse_history.push_back(val);
			if (!(val >= best_val_)) { // strict improvement, NaN-safe
				best_val_ = val;
				best_params_ = network_.parameters();
				epochs_since_best_ = 0;
			} else {
				++epochs_since_best_;
			}
			if (epochs_since_best_ >= params_.patience) {
				report.stop_reason = StopReason::patience;
				return true;
			}
		}
		if (train_mse <= params_.goal_mse) {
			report.stop_reason = StopReason::goal;
			return true;
		}
		return false;
	}

	/// Restores the best-validation snapshot (when one exists) and fills the
	/// summary fields.
	void finish(TrainReport& report) {
		if (has_validation() && best_params_.size() > 0) {
			network_.set_parameters(best_params_);
			report.best_validation_mse = best_val_;
		}
		report.final_train_mse = train_mse();
	}

private:
	MlpNetwork& network_;
	const TrainParams& params_;
	Eigen::MatrixXd train_x_, val_x_;
	Eigen::MatrixXd train_y_, val_y_;
	double best_val_ = std::numeric_limits<double>::infinity();
	Eigen::VectorXd best_params_;
	int epochs_since_best_ = 0;
};

} // namespace detail

/// Full-batch gradient descent on half the summed squared error.
inline std::pair<MlpNetwork, TrainReport> train_gd(const MlpNetwork& network,
                                                   const SupervisedSet& dataset,
                                                   const TrainParams& params) {
	if (params.learning_rate <= 0.0)
		throw ConfigError("learning_rate must be positive");
	MlpNetwork net = network;
	TrainReport report;
	detail::TrainSession session(net, dataset, params);

	if (session.train_mse() <= params.goal_mse) {
		report.stop_reason = StopReason::goal;
		session.finish(report);
		return {std::move(net), report};
	}

	for (int epoch = 0; epoch < params.max_epochs; ++epoch) {
		const Eigen::VectorXd grad =
		    detail::batch_gradient(net, session.train_inputs(), session.train_targets());
		net.set_parameters(net.parameters() - params.learning_rate * grad);
		if (session.record_epoch(session.train_mse(), report))
			break;
	}
	session.finish(report);
	return {std::move(net), report};
}

/// Levenberg-Marquardt: solve (J^T J + mu I) step = J^T e per epoch, accept
/// only steps that reduce the SSE, shrinking mu after success and growing it
/// after rejection. The accepted-step SSE sequence is strictly decreasing.
inline std::pair<MlpNetwork, TrainReport> train_lm(const MlpNetwork& network,
                                                   const SupervisedSet& dataset,
                                                   const TrainParams& params) {
	MlpNetwork net = network;
	TrainReport report;
	detail::TrainSession session(net, dataset, params);

	if (session.train_mse() <= params.goal_mse) {
		report.stop_reason = StopReason::goal;
		session.finish(report);
		return {std::move(net), report};
	}

	double mu = params.mu0;
	Eigen::VectorXd residuals;
	Eigen::MatrixXd jacobian;
	bool stopped = false;
	for (int epoch = 0; epoch < params.max_epochs && !stopped; ++epoch) {
		detail::residuals_and_jacobian(net, session.train_inputs(), session.train_targets(),
		                               residuals, jacobian);
		const double sse = residuals.squaredNorm();
		const Eigen::MatrixXd normal = jacobian.transpose() * jacobian;
		const Eigen::VectorXd rhs = jacobian.transpose() * residuals;
		const Eigen::VectorXd base = net.parameters();

		bool accepted = false;
		while (!accepted) {
			Eigen::MatrixXd damped = normal;
			damped.diagonal().array() += mu;
			const Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
			Eigen::VectorXd step;
			bool solvable = ldlt.info() == Eigen::Success;
			if (solvable) {
				step = ldlt.solve(rhs);
				solvable = step.allFinite();
			}
			if (solvable) {
				net.set_parameters(base + step);
				Eigen::VectorXd trial_residuals =
				    session.train_targets() -
				    detail::predict_batch(net, session.train_inputs());
				const double trial_sse = trial_residuals.squaredNorm();
				if (std::isfinite(trial_sse) && trial_sse < sse) {
					accepted = true;
					mu *= params.mu_dec;
					break;
				}
				net.set_parameters(base);
			}
			mu *= params.mu_inc;
			if (mu > params.mu_max) {
				report.stop_reason = StopReason::damping_ceiling;
				stopped = true;
				break;
			}
		}
		if (accepted)
			stopped = session.record_epoch(session.train_mse(), report);
	}
	if (!stopped)
		report.stop_reason = StopReason::max_epochs;
	session.finish(report);
	return {std::move(net), report};
}

/// Scaled conjugate gradient (Moller): conjugate directions with the
/// Hessian-direction product estimated by finite-differencing the gradient
/// along the direction, and a scalar damping lambda steered by the
/// comparison parameter instead of a line search.
inline std::pair<MlpNetwork, TrainReport> train_scg(const MlpNetwork& network,
                                                    const SupervisedSet& dataset,
                                                    const TrainParams& params) {
	MlpNetwork net = network;
	TrainReport report;
	detail::TrainSession session(net, dataset, params);

	if (session.train_mse() <= params.goal_mse) {
		report.stop_reason = StopReason::goal;
		session.finish(report);
		return {std::move(net), report};
	}

	const Eigen::MatrixXd& inputs = session.train_inputs();
	const Eigen::MatrixXd& targets = session.train_targets();
	const auto half_sse = [&](const Eigen::VectorXd& w) {
		MlpNetwork probe = net;
		probe.set_parameters(w);
		return 0.5 * (detail::predict_batch(probe, inputs) - targets).squaredNorm();
	};
	const auto gradient_at = [&](const Eigen::VectorXd& w) {
		MlpNetwork probe = net;
		probe.set_parameters(w);
		return detail::batch_gradient(probe, inputs, targets);
	};

	constexpr double kSigma = 1e-5;
	const auto restart_period = static_cast<int>(net.parameter_count());
	Eigen::VectorXd w = net.parameters();
	Eigen::VectorXd r = -gradient_at(w);
	Eigen::VectorXd p = r;
	double lambda = 1e-6;
	double lambda_bar = 0.0;
	double error = half_sse(w);
	bool success = true;
	double delta = 0.0;
	bool stopped = false;

	for (int epoch = 0; epoch < params.max_epochs && !stopped; ++epoch) {
		const double p_norm2 = p.squaredNorm();
		if (p_norm2 <= 0.0 || !std::isfinite(p_norm2)) {
			report.stop_reason = StopReason::damping_ceiling;
			stopped = true;
			break;
		}
		if (success) {
			const double sigma_k = kSigma / std::sqrt(p_norm2);
			const Eigen::VectorXd s = (gradient_at(w + sigma_k * p) + r) / sigma_k;
			delta = p.dot(s);
		}
		delta += (lambda - lambda_bar) * p_norm2;
		if (delta <= 0.0) { // force the local quadratic model positive definite
			lambda_bar = 2.0 * (lambda - delta / p_norm2);
			delta = -delta + lambda * p_norm2;
			lambda = lambda_bar;
		}
		const double mu = p.dot(r);
		const double alpha = mu / delta;
		const double error_trial = half_sse(w + alpha * p);
		const double comparison = 2.0 * delta * (error - error_trial) / (mu * mu);

		if (std::isfinite(comparison) && comparison >= 0.0) {
			w += alpha * p;
			net.set_parameters(w);
			error = error_trial;
			const Eigen::VectorXd r_new = -gradient_at(w);
			lambda_bar = 0.0;
			success = true;
			if ((epoch + 1) % restart_period == 0) {
				p = r_new;
			} else {
				const double beta = (r_new.squaredNorm() - r_new.dot(r)) / mu;
				p = r_new + beta * p;
			}
			r = r_new;
			if (comparison >= 0.75)
				lambda *= 0.25;
		} else {
			lambda_bar = lambda;
			success = false;
		}
		if (std::isfinite(comparison) && comparison < 0.25)
			lambda += delta * (1.0 - comparison) / p_norm2;
		if (!std::isfinite(lambda) || lambda > 1e100) {
			report.stop_reason = StopReason::damping_ceiling;
			stopped = true;
			break;
		}
		stopped = session.record_epoch(session.train_mse(), report);
	}
	if (!stopped)
		report.stop_reason = StopReason::max_epochs;
	session.finish(report);
	return {std::move(net), report};
}

inline std::pair<MlpNetwork, TrainReport> train(const MlpNetwork& network,
                                                const SupervisedSet& dataset,
                                                const TrainParams& params) {
	switch (params.trainer) {
	case Trainer::gradient_descent: return train_gd(network, dataset, params);
	case Trainer::levenberg_marquardt: return train_lm(network, dataset, params);
	case Trainer::scaled_conjugate_gradient: return train_scg(network, dataset, params);
	}
	return train_lm(network, dataset, params);
}

/// One trained-network prediction run over a train/test split.
struct PipelineResult {
	std::vector<double> predictions;         // m/s, one per predictable test index
	std::vector<std::size_t> target_indices; // indices into the test series
	TrainReport report;
	MlpNetwork network;
	ScalingParams scaling;
	bool targets_scaled = false;
};

/// Scales with train-fitted parameters (targets too whenever the output
/// activation is bounded), trains, then predicts over the test window using
/// lag windows that may reach back into the training tail.
inline PipelineResult fit_predict_pipeline(const TimeSeries& train_series, const TimeSeries& test_series,
                                           const NetworkConfig& config, const TrainParams& params,
                                           int horizon_steps, int num_lags,
                                           double target_lo = 0.1, double target_hi = 0.9) {
	if (num_lags != config.input_size)
		throw ConfigError("num_lags must equal the network input size");
	if (config.output_size != 1)
		throw ConfigError("the forecasting pipeline uses a single output node");
	if (train_series.step_seconds != test_series.step_seconds)
		throw NonUniformGrid("train and test series use different grid steps");

	PipelineResult result;
	try {
		result.scaling = fit_scaler(train_series, target_lo, target_hi);
	} catch (const ConstantSeries&) {
		// degenerate but valid map: the constant sits mid-range and inverts back
		const double v = train_series.values.front();
		result.scaling = ScalingParams{v - 1.0, v + 1.0, target_lo, target_hi};
	}
	result.targets_scaled = activation_is_bounded(config.activations.back());

	TimeSeries scaled_train = train_series;
	scaled_train.values = apply_scale(result.scaling, train_series.values);
	SupervisedSet training_set = make_supervised(scaled_train, num_lags, horizon_steps);
	if (!result.targets_scaled) {
		SupervisedSet raw = make_supervised(train_series, num_lags, horizon_steps);
		training_set.targets = std::move(raw.targets);
	}

	auto [trained, report] = train(init_network(config), training_set, params);
	result.report = std::move(report);

	std::vector<double> combined_scaled = apply_scale(result.scaling, train_series.values);
	const std::vector<double> test_scaled = apply_scale(result.scaling, test_series.values);
	combined_scaled.insert(combined_scaled.end(), test_scaled.begin(), test_scaled.end());

	const std::size_t n_train = train_series.size();
	const std::size_t total = combined_scaled.size();
	const auto window = static_cast<std::size_t>(num_lags);
	const auto lead = static_cast<std::size_t>(horizon_steps);
	Eigen::VectorXd lag_vector(num_lags);
	for (std::size_t target = n_train; target < total; ++target) {
		if (target + 1 < lead + window) continue; // window would start before the data
		const std::size_t window_end = target - lead; // inclusive
		for (std::size_t j = 0; j < window; ++j)
			lag_vector(static_cast<Eigen::Index>(j)) =
			    combined_scaled[window_end + 1 - window + j];
		const double raw_output = forward(trained, lag_vector)(0);
		const double prediction =
		    result.targets_scaled ? invert_scale(result.scaling, raw_output) : raw_output;
		result.predictions.push_back(prediction);
		result.target_indices.push_back(target - n_train);
	}
	result.network = std::move(trained);
	return result;
}

/// Runs the pipeline across `trials` derived seeds and keeps the best run,
/// judged by best validation MSE when a split is active and final training
/// MSE otherwise. Ties keep the earliest trial, so selection is
/// deterministic.
inline PipelineResult fit_predict_multi_seed(const TimeSeries& train_series, const TimeSeries& test_series,
                                             const NetworkConfig& config, const TrainParams& params,
                                             int horizon_steps, int num_lags, int trials,
                                             double target_lo = 0.1, double target_hi = 0.9) {
	if (trials < 1)
		throw ConfigError("need at least one trial");
	bool have_best = false;
	PipelineResult best;
	double best_score = std::numeric_limits<double>::infinity();
	for (int trial = 0; trial < trials; ++trial) {
		NetworkConfig trial_config = config;
		trial_config.seed = derive_seed(params.seed, static_cast<std::uint64_t>(trial));
		PipelineResult run = fit_predict_pipeline(train_series, test_series, trial_config, params,
		                                          horizon_steps, num_lags, target_lo, target_hi);
		const double score = std::isnan(run.report.best_validation_mse)
		                         ? run.report.final_train_mse
		                         : run.report.best_validation_mse;
		if (!have_best || score < best_score) {
			best = std::move(run);
			best_score = score;
			have_best = true;
		}
	}
	return best;
}

} // namespace windcast
