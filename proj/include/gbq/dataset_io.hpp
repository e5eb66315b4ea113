#pragma once

// JSON views of the core types and the JSON-lines dataset format.
//
// A dataset file holds one header object on the first line followed by one
// example per line. See docs/formats.md.

#include "gbq/dataset.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace gbq {

using json = nlohmann::json;

std::string axis_name(Axis a);
Axis parse_axis(const std::string& s);
std::string shape_name(PulseShape s);
PulseShape parse_shape(const std::string& s);

json to_json(const PSDSpec& spec);
PSDSpec psd_from_json(const json& j);

json to_json(const PulseTrain& train);
PulseTrain pulse_train_from_json(const json& j);
json to_json(const PulseSequence& seq);
PulseSequence pulse_sequence_from_json(const json& j);

json to_json(const SimulationConfig& cfg);
SimulationConfig sim_config_from_json(const json& j);

json to_json(const MeasurementRecord& rec);
MeasurementRecord record_from_json(const json& j);

json to_json(const DatasetHeader& h, std::size_t count);
DatasetHeader header_from_json(const json& j);

json to_json(const DatasetExample& ex);
DatasetExample example_from_json(const json& j, const DatasetHeader& h);

void write_dataset(const Dataset& d, const std::filesystem::path& path);

/// Parses and checks every line; throws DatasetSchemaError with the line
/// number on malformed input.
Dataset read_dataset(const std::filesystem::path& path);

/// DIR/NAME.train.jsonl and DIR/NAME.test.jsonl.
std::filesystem::path split_path(const std::filesystem::path& dir, const std::string& name,
                                 const std::string& split);

}  // namespace gbq
