#pragma once

#include <fstream>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "windcast/arma.hpp"
#include "windcast/errors.hpp"
#include "windcast/mlp.hpp"
#include "windcast/polynomial.hpp"
#include "windcast/scaling.hpp"

namespace windcast {

inline constexpr int kModelSchemaVersion = 1;

/// Everything needed to reload a trained network and reproduce its
/// predictions: topology, flattened parameters, scaling and lag layout.
struct MlpBundle {
	MlpNetwork network;
	NetworkConfig config;
	ScalingParams scaling;
	bool targets_scaled = false;
	int num_lags = 1;
};

using FittedModel = std::variant<PolynomialModel, ArmaModel, ArimaModel, MlpBundle>;

struct ModelFile {
	int horizon_steps = 1;
	FittedModel model;
};

inline std::string model_family(const FittedModel& model) {
	if (std::holds_alternative<PolynomialModel>(model)) return "polynomial";
	if (std::holds_alternative<ArmaModel>(model)) return "arma";
	if (std::holds_alternative<ArimaModel>(model)) return "arima";
	return "mlp";
}

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j, const std::string& key) {
	const auto it = j.find(key);
	if (it == j.end())
		throw SchemaError("model file is missing required field '" + key + "'");
	return *it;
}

inline double json_double(const nlohmann::json& j, const std::string& key) {
	const auto& field = require_field(j, key);
	if (field.is_null())
		return std::numeric_limits<double>::quiet_NaN();
	if (!field.is_number())
		throw SchemaError("field '" + key + "' must be a number");
	return field.get<double>();
}

inline int json_int(const nlohmann::json& j, const std::string& key) {
	const auto& field = require_field(j, key);
	if (!field.is_number_integer())
		throw SchemaError("field '" + key + "' must be an integer");
	return field.get<int>();
}

inline std::vector<double> json_double_vector(const nlohmann::json& j, const std::string& key) {
	const auto& field = require_field(j, key);
	if (!field.is_array())
		throw SchemaError("field '" + key + "' must be an array");
	std::vector<double> out;
	out.reserve(field.size());
	for (const auto& item : field) {
		if (!item.is_number())
			throw SchemaError("field '" + key + "' must hold numbers only");
		out.push_back(item.get<double>());
	}
	return out;
}

inline nlohmann::json scaling_to_json(const ScalingParams& s) {
	return {{"source_min", s.source_min},
	        {"source_max", s.source_max},
	        {"target_lo", s.target_lo},
	        {"target_hi", s.target_hi}};
}

inline ScalingParams scaling_from_json(const nlohmann::json& j) {
	ScalingParams s;
	s.source_min = json_double(j, "source_min");
	s.source_max = json_double(j, "source_max");
	s.target_lo = json_double(j, "target_lo");
	s.target_hi = json_double(j, "target_hi");
	return s;
}

inline nlohmann::json arma_to_json(const ArmaModel& model) {
	// the operator polynomials are stored in their printed form
	// (1 - psi_1 L - ...), alongside the coefficient convention used here
	std::vector<double> ar_operator{1.0}, ma_operator{1.0};
	for (double c : model.ar_coeffs) ar_operator.push_back(-c);
	for (double c : model.ma_coeffs) ma_operator.push_back(-c);
	return {{"p", model.p},
	        {"q", model.q},
	        {"ar_coeffs", model.ar_coeffs},
	        {"ma_coeffs", model.ma_coeffs},
	        {"ar_operator", ar_operator},
	        {"ma_operator", ma_operator},
	        {"mean", model.mean},
	        {"noise_variance", model.noise_variance},
	        {"refinement_converged", model.refinement_converged}};
}

inline ArmaModel arma_from_json(const nlohmann::json& j) {
	ArmaModel model;
	model.p = json_int(j, "p");
	model.q = json_int(j, "q");
	model.ar_coeffs = json_double_vector(j, "ar_coeffs");
	model.ma_coeffs = json_double_vector(j, "ma_coeffs");
	model.mean = json_double(j, "mean");
	model.noise_variance = json_double(j, "noise_variance");
	const auto& flag = require_field(j, "refinement_converged");
	if (!flag.is_boolean())
		throw SchemaError("field 'refinement_converged' must be a boolean");
	model.refinement_converged = flag.get<bool>();
	if (model.ar_coeffs.size() != static_cast<std::size_t>(model.p) ||
	    model.ma_coeffs.size() != static_cast<std::size_t>(model.q))
		throw SchemaError("ARMA coefficient counts do not match the stated orders");
	return model;
}

inline nlohmann::json mlp_to_json(const MlpBundle& bundle) {
	nlohmann::json activations = nlohmann::json::array();
	for (Activation a : bundle.config.activations)
		activations.push_back(activation_name(a));
	const Eigen::VectorXd flat = bundle.network.parameters();
	return {{"input_size", bundle.config.input_size},
	        {"hidden_layer_sizes", bundle.config.hidden_layer_sizes},
	        {"output_size", bundle.config.output_size},
	        {"activations", activations},
	        {"seed", bundle.config.seed},
	        {"parameters", std::vector<double>(flat.data(), flat.data() + flat.size())},
	        {"scaling", scaling_to_json(bundle.scaling)},
	        {"targets_scaled", bundle.targets_scaled},
	        {"num_lags", bundle.num_lags}};
}

inline MlpBundle mlp_from_json(const nlohmann::json& j) {
	MlpBundle bundle;
	bundle.config.input_size = json_int(j, "input_size");
	bundle.config.output_size = json_int(j, "output_size");
	const auto& hidden = require_field(j, "hidden_layer_sizes");
	if (!hidden.is_array())
		throw SchemaError("field 'hidden_layer_sizes' must be an array");
	for (const auto& item : hidden) bundle.config.hidden_layer_sizes.push_back(item.get<int>());
	const auto& acts = require_field(j, "activations");
	if (!acts.is_array())
		throw SchemaError("field 'activations' must be an array");
	for (const auto& item : acts)
		bundle.config.activations.push_back(activation_from_name(item.get<std::string>()));
	bundle.config.seed = require_field(j, "seed").get<std::uint64_t>();
	bundle.scaling = scaling_from_json(require_field(j, "scaling"));
	const auto& flag = require_field(j, "targets_scaled");
	if (!flag.is_boolean())
		throw SchemaError("field 'targets_scaled' must be a boolean");
	bundle.targets_scaled = flag.get<bool>();
	bundle.num_lags = json_int(j, "num_lags");

	try {
		bundle.network = init_network(bundle.config); // shapes only; parameters overwritten
	} catch (const ConfigError& e) {
		throw SchemaError(e.what());
	}
	const std::vector<double> flat = json_double_vector(j, "parameters");
	if (flat.size() != bundle.network.parameter_count())
		throw SchemaError("parameter vector length does not match the stated topology");
	bundle.network.set_parameters(
	    Eigen::Map<const Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size())));
	return bundle;
}

} // namespace detail

inline nlohmann::json model_to_json(const ModelFile& file) {
	nlohmann::json j;
	j["schema_version"] = kModelSchemaVersion;
	j["family"] = model_family(file.model);
	j["horizon_steps"] = file.horizon_steps;
	if (const auto* poly = std::get_if<PolynomialModel>(&file.model)) {
		j["polynomial"] = {{"degree", poly->degree},
		                   {"coefficients", poly->coefficients},
		                   {"train_mse", poly->train_mse},
		                   {"train_r", poly->train_r}};
	} else if (const auto* arma = std::get_if<ArmaModel>(&file.model)) {
		j["arma"] = detail::arma_to_json(*arma);
	} else if (const auto* arima = std::get_if<ArimaModel>(&file.model)) {
		j["arima"] = {{"d", arima->d},
		              {"seed_values", arima->seed_values},
		              {"arma", detail::arma_to_json(arima->inner)}};
	} else if (const auto* mlp = std::get_if<MlpBundle>(&file.model)) {
		j["mlp"] = detail::mlp_to_json(*mlp);
	}
	return j;
}

inline ModelFile model_from_json(const nlohmann::json& j) {
	if (!j.is_object())
		throw SchemaError("model file must hold a JSON object");
	const int version = detail::json_int(j, "schema_version");
	if (version != kModelSchemaVersion)
		throw SchemaError("unsupported schema_version " + std::to_string(version));
	const auto& family_field = detail::require_field(j, "family");
	if (!family_field.is_string())
		throw SchemaError("field 'family' must be a string");
	const std::string family = family_field.get<std::string>();

	ModelFile file;
	file.horizon_steps = detail::json_int(j, "horizon_steps");
	if (file.horizon_steps < 1)
		throw SchemaError("horizon_steps must be at least 1");
	if (family == "polynomial") {
		const auto& payload = detail::require_field(j, "polynomial");
		PolynomialModel model;
		model.degree = detail::json_int(payload, "degree");
		model.coefficients = detail::json_double_vector(payload, "coefficients");
		model.train_mse = detail::json_double(payload, "train_mse");
		model.train_r = detail::json_double(payload, "train_r");
		model.horizon_steps = file.horizon_steps;
		if (model.coefficients.size() != static_cast<std::size_t>(model.degree) + 1)
			throw SchemaError("polynomial coefficient count does not match the degree");
		file.model = std::move(model);
	} else if (family == "arma") {
		file.model = detail::arma_from_json(detail::require_field(j, "arma"));
	} else if (family == "arima") {
		const auto& payload = detail::require_field(j, "arima");
		ArimaModel model;
		model.d = detail::json_int(payload, "d");
		model.seed_values = detail::json_double_vector(payload, "seed_values");
		model.inner = detail::arma_from_json(detail::require_field(payload, "arma"));
		file.model = std::move(model);
	} else if (family == "mlp") {
		file.model = detail::mlp_from_json(detail::require_field(j, "mlp"));
	} else {
		throw SchemaError("unknown model family '" + family + "'");
	}
	return file;
}

/// Stable serialisation: keys are emitted in sorted order and doubles use the
/// shortest round-trip representation, so identical models produce identical
/// bytes.
inline void write_json_file(const std::string& path, const nlohmann::json& j) {
	std::ofstream out(path);
	if (!out)
		throw IoError("cannot open '" + path + "' for writing");
	out << j.dump(2) << '\n';
	if (!out)
		throw IoError("failed writing '" + path + "'");
}

inline nlohmann::json read_json_file(const std::string& path) {
	std::ifstream in(path);
	if (!in)
		throw IoError("cannot open '" + path + "' for reading");
	try {
		return nlohmann::json::parse(in);
	} catch (const nlohmann::json::parse_error& e) {
		throw SchemaError("invalid JSON in '" + path + "': " + e.what());
	}
}

inline void save_model(const std::string& path, const ModelFile& file) {
	write_json_file(path, model_to_json(file));
}

inline ModelFile load_model(const std::string& path) {
	return model_from_json(read_json_file(path));
}

} // namespace windcast
