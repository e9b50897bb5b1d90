#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "windcast/errors.hpp"
#include "windcast/mlp.hpp"

namespace windcast {

enum class ModelFamily { polynomial, arma, arima, mlp };

inline std::string family_name(ModelFamily family) {
	switch (family) {
	case ModelFamily::polynomial: return "polynomial";
	case ModelFamily::arma: return "arma";
	case ModelFamily::arima: return "arima";
	case ModelFamily::mlp: return "mlp";
	}
	return "mlp";
}

inline ModelFamily family_from_name(const std::string& name) {
	if (name == "polynomial") return ModelFamily::polynomial;
	if (name == "arma") return ModelFamily::arma;
	if (name == "arima") return ModelFamily::arima;
	if (name == "mlp") return ModelFamily::mlp;
	throw ConfigError("unknown model family '" + name +
	                  "' (expected polynomial, arma, arima or mlp)");
}

struct PolynomialOptions {
	std::vector<int> degrees = {1, 2, 3};
	double validation_fraction = 0.25; // tail of the training pairs used for degree selection
};

struct ArmaOptions {
	int p = 1;
	int q = 1;
};

struct ArimaOptions {
	int p = 1;
	int d = 1;
	int q = 1;
};

struct MlpOptions {
	std::vector<int> hidden_layers = {3};
	std::vector<std::string> activations = {"tansig", "purelin"};
	std::string trainer = "lm";
	int max_epochs = 200;
	double goal_mse = 1e-12;
	double learning_rate = 0.01;
	double validation_fraction = 0.2;
	int patience = 6;
	int trials = 3; // seeded restarts; the best run by validation MSE wins
};

/// One resolved run: data location, protocol knobs and per-family
/// hyperparameters. Defaults follow the three-hourly wind setup.
struct RunConfig {
	std::string data_path;
	std::string output_dir = ".";
	ModelFamily family = ModelFamily::mlp;
	int horizon_hours = 3;
	std::vector<int> compare_horizons_hours = {3, 6, 12};
	int num_lags = 2;
	double train_fraction = 0.7;
	double scale_lo = 0.1;
	double scale_hi = 0.9;
	std::uint64_t seed = 42;
	PolynomialOptions polynomial;
	ArmaOptions arma;
	ArimaOptions arima;
	MlpOptions mlp;
};

/// Converts the horizon in hours to grid steps; it must be a positive
/// multiple of the series step.
inline int horizon_steps_for(int horizon_hours, std::int64_t step_seconds) {
	const std::int64_t horizon_seconds = static_cast<std::int64_t>(horizon_hours) * 3600;
	if (horizon_hours <= 0 || horizon_seconds % step_seconds != 0)
		throw ConfigError("horizon of " + std::to_string(horizon_hours) +
		                  " h is not a positive multiple of the " +
		                  std::to_string(step_seconds) + " s grid step");
	return static_cast<int>(horizon_seconds / step_seconds);
}

namespace detail {

template <typename T>
void read_into(const nlohmann::json& j, const char* key, T& target) {
	const auto it = j.find(key);
	if (it == j.end()) return;
	try {
		target = it->get<T>();
	} catch (const nlohmann::json::exception&) {
		throw ConfigError(std::string("config field '") + key + "' has the wrong type");
	}
}

} // namespace detail

/// Applies a JSON config object over the built-in defaults. Unknown keys are
/// rejected so typos do not silently fall back to defaults.
inline RunConfig run_config_from_json(const nlohmann::json& j) {
	if (!j.is_object())
		throw ConfigError("config file must hold a JSON object");
	static const std::vector<std::string> known = {
	    "data", "output_dir", "model", "horizon_hours", "compare_horizons_hours",
	    "num_lags", "train_fraction", "scale_lo", "scale_hi", "seed",
	    "polynomial", "arma", "arima", "mlp"};
	for (const auto& [key, value] : j.items())
		if (std::find(known.begin(), known.end(), key) == known.end())
			throw ConfigError("unknown config key '" + key + "'");

	RunConfig config;
	detail::read_into(j, "data", config.data_path);
	detail::read_into(j, "output_dir", config.output_dir);
	if (j.contains("model"))
		config.family = family_from_name(j.at("model").get<std::string>());
	detail::read_into(j, "horizon_hours", config.horizon_hours);
	detail::read_into(j, "compare_horizons_hours", config.compare_horizons_hours);
	detail::read_into(j, "num_lags", config.num_lags);
	detail::read_into(j, "train_fraction", config.train_fraction);
	detail::read_into(j, "scale_lo", config.scale_lo);
	detail::read_into(j, "scale_hi", config.scale_hi);
	detail::read_into(j, "seed", config.seed);

	if (j.contains("polynomial")) {
		const auto& p = j.at("polynomial");
		detail::read_into(p, "degrees", config.polynomial.degrees);
		detail::read_into(p, "validation_fraction", config.polynomial.validation_fraction);
	}
	if (j.contains("arma")) {
		const auto& a = j.at("arma");
		detail::read_into(a, "p", config.arma.p);
		detail::read_into(a, "q", config.arma.q);
	}
	if (j.contains("arima")) {
		const auto& a = j.at("arima");
		detail::read_into(a, "p", config.arima.p);
		detail::read_into(a, "d", config.arima.d);
		detail::read_into(a, "q", config.arima.q);
	}
	if (j.contains("mlp")) {
		const auto& m = j.at("mlp");
		detail::read_into(m, "hidden_layers", config.mlp.hidden_layers);
		detail::read_into(m, "activations", config.mlp.activations);
		detail::read_into(m, "trainer", config.mlp.trainer);
		detail::read_into(m, "max_epochs", config.mlp.max_epochs);
		detail::read_into(m, "goal_mse", config.mlp.goal_mse);
		detail::read_into(m, "learning_rate", config.mlp.learning_rate);
		detail::read_into(m, "validation_fraction", config.mlp.validation_fraction);
		detail::read_into(m, "patience", config.mlp.patience);
		detail::read_into(m, "trials", config.mlp.trials);
	}
	return config;
}

inline void validate_run_config(const RunConfig& config) {
	if (config.data_path.empty())
		throw ConfigError("no input data file given");
	if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0))
		throw ConfigError("train_fraction must lie strictly between 0 and 1");
	if (!(config.scale_lo < config.scale_hi))
		throw ConfigError("scale_lo must be below scale_hi");
	if (config.num_lags < 1)
		throw ConfigError("num_lags must be at least 1");
	if (config.compare_horizons_hours.empty())
		throw ConfigError("compare needs at least one horizon");
}

inline NetworkConfig network_config_from(const RunConfig& config) {
	NetworkConfig net;
	net.input_size = config.num_lags;
	net.hidden_layer_sizes = config.mlp.hidden_layers;
	net.output_size = 1;
	for (const std::string& name : config.mlp.activations)
		net.activations.push_back(activation_from_name(name));
	net.seed = config.seed;
	return net;
}

inline TrainParams train_params_from(const RunConfig& config) {
	TrainParams params;
	params.trainer = trainer_from_name(config.mlp.trainer);
	params.max_epochs = config.mlp.max_epochs;
	params.goal_mse = config.mlp.goal_mse;
	params.learning_rate = config.mlp.learning_rate;
	params.validation_fraction = config.mlp.validation_fraction;
	params.patience = config.mlp.patience;
	params.seed = config.seed;
	return params;
}

} // namespace windcast
