// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint files: one line of compact JSON header (format version, model
// config, tensor names/shapes/trainability) terminated by '\n', followed by
// the tensors as 64-bit little-endian doubles, concatenated in header order.
//
// A base checkpoint holds the model weights. An adaptation delta holds the
// method, its extra tensors (group "adaptation") and the base tensors the
// method trains (group "base", e.g. the head), so base + delta reconstructs
// the adapted model.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lora_lab/adaptation.hpp"
#include "lora_lab/params.hpp"

namespace lora_lab {

inline constexpr int kCheckpointFormatVersion = 1;

struct BaseCheckpoint {
    ModelConfig config;
    ModelParams params;
};

struct AdaptedModel {
    ModelConfig config;
    ModelParams params;
    AdaptationState state;
};

std::vector<std::uint8_t> encode_base_checkpoint(const ModelConfig& cfg, const ModelParams& params);
/// Throws ParseError on malformed input.
BaseCheckpoint decode_base_checkpoint(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_adaptation_delta(const ModelConfig& cfg, const ModelParams& params,
                                                  const AdaptationState& state);
/// Instruments a copy of `base` with the delta's method and overwrites the
/// stored tensors. The delta's config may differ from the base only in
/// max_seq_len. Throws ParseError on malformed input, ShapeError on a
/// geometry mismatch.
AdaptedModel apply_adaptation_delta(const BaseCheckpoint& base, std::span<const std::uint8_t> bytes);

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
/// Throws ConfigError naming the path when it cannot be opened.
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

void save_base_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg,
                          const ModelParams& params);
BaseCheckpoint load_base_checkpoint(const std::filesystem::path& path);
void save_adaptation_delta(const std::filesystem::path& path, const ModelConfig& cfg,
                           const ModelParams& params, const AdaptationState& state);
AdaptedModel load_adapted_model(const std::filesystem::path& base_path,
                                const std::filesystem::path& delta_path);

}  // namespace lora_lab
