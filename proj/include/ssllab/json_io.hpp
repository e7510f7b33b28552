#pragma once

#include "json.hpp"

#include "ssllab/augment.hpp"
#include "ssllab/eval.hpp"
#include "ssllab/model.hpp"
#include "ssllab/ssl_objectives.hpp"
#include "ssllab/synth_data.hpp"
#include "ssllab/train.hpp"

namespace ssllab {

// JSON (de)serialization of every externally visible config and record
// type. Object keys are emitted in sorted order (nlohmann default), so
// dumps are canonical and hashable.

void to_json(nlohmann::json& j, const AugmentPolicy& p);
void from_json(const nlohmann::json& j, AugmentPolicy& p);

void to_json(nlohmann::json& j, const SslConfig& c);
void from_json(const nlohmann::json& j, SslConfig& c);

void to_json(nlohmann::json& j, const OptimizerConfig& c);
void from_json(const nlohmann::json& j, OptimizerConfig& c);

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

void to_json(nlohmann::json& j, const DatasetSpec& s);
void from_json(const nlohmann::json& j, DatasetSpec& s);

void to_json(nlohmann::json& j, const MetricsReport& r);
void from_json(const nlohmann::json& j, MetricsReport& r);

void to_json(nlohmann::json& j, const EpochStats& e);
void from_json(const nlohmann::json& j, EpochStats& e);

void to_json(nlohmann::json& j, const RunRecord& r);
void from_json(const nlohmann::json& j, RunRecord& r);

// Canonical single-line dump used for hashing and config echoes.
std::string canonical_json(const TrainConfig& cfg);

// Parses a config file, reporting the parse location on malformed JSON and
// the offending field on validation errors.
TrainConfig parse_train_config(const std::string& text);
DatasetSpec parse_dataset_spec(const std::string& text);

}  // namespace ssllab
