// SPDX-License-Identifier: Apache-2.0
//
// JSON mappings for configuration and method types. Unknown keys are
// rejected so typos in config files surface as config errors.

#pragma once

#include <nlohmann/json.hpp>

#include "lora_lab/adaptation.hpp"
#include "lora_lab/params.hpp"
#include "lora_lab/synthdata.hpp"
#include "lora_lab/training.hpp"

namespace lora_lab {

using Json = nlohmann::ordered_json;

Json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const Json& j);

Json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const Json& j, TrainConfig defaults = {});

Json to_json(const AdaptationMethod& m);
AdaptationMethod method_from_json(const Json& j);

Json to_json(const DatasetSpec& s);
DatasetSpec dataset_spec_from_json(const Json& j, DatasetSpec defaults = {});

Json to_json(const ParamReport& r);
Json to_json(const GradCheckReport& r);
Json to_json(const EpochStats& s);

/// Parses JSON text; throws ParseError with the line of the first error.
Json parse_json_text(std::string_view text);

}  // namespace lora_lab
