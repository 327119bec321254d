// SPDX-License-Identifier: Apache-2.0
//
// Seeded synthetic genuine/spoof feature sequences.
//
// Frame t, dim j of a genuine sequence is sin(2 pi f_c t / L + 2 pi j / D)
// plus N(0, sigma^2) noise. A spoof sequence additionally carries
// a * sin(2 pi f_a t / L) on its first `artifact_dims` dims. Source and target
// tasks differ only in the artifact frequency f_a.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lora_lab/evaluation.hpp"
#include "lora_lab/numerics.hpp"

namespace lora_lab {

enum class Split : std::uint8_t { Train, Dev, Eval };

std::string_view split_name(Split s);
Split parse_split(std::string_view s);

struct DatasetSpec {
    std::size_t n_per_class = 100;
    std::size_t seq_len = 32;
    std::size_t feat_dim = 64;
    double noise_sigma = 1.0;
    double artifact_amp = 0.6;
    double artifact_freq = 4.0;
    /// 0 selects feat_dim / 4.
    std::size_t artifact_dims = 0;
    double base_freq = 1.0;
    std::uint64_t seed = 0;
    Split split = Split::Train;

    static constexpr double kSourceArtifactFreq = 4.0;
    static constexpr double kTargetArtifactFreq = 7.0;

    std::size_t effective_artifact_dims() const {
        return artifact_dims == 0 ? feat_dim / 4 : artifact_dims;
    }
    /// Throws ConfigError on L < 2, negative amplitudes or sigma,
    /// artifact_dims > feat_dim, or zero sizes.
    void validate() const;
};

struct Trial {
    std::string id;
    Label label = Label::Genuine;
    Matrix features;  // seq_len x feat_dim
};

struct Dataset {
    std::vector<Trial> trials;
    Split split = Split::Train;

    std::size_t seq_len() const { return trials.empty() ? 0 : trials.front().features.rows(); }
    std::size_t feat_dim() const { return trials.empty() ? 0 : trials.front().features.cols(); }
    std::size_t count(Label l) const;
};

/// Genuine and spoof trials interleaved (g, s, g, s, ...). Feature values are
/// rounded to 32-bit floats so a dataset equals its file round-trip.
Dataset generate_dataset(const DatasetSpec& spec);

/// Keeps the last `target_len` frames of a longer sequence; zero-pads a
/// shorter one at the end.
Matrix crop_or_pad(const Matrix& seq, std::size_t target_len);
Dataset crop_or_pad(const Dataset& data, std::size_t target_len);

/// "LADS" file: magic, u32 version, u32 n_trials, u32 seq_len, u32 feat_dim,
/// then per trial u16 id length, id bytes, u8 label, f32 features
/// row-major; all little-endian.
inline constexpr std::uint32_t kDatasetFormatVersion = 1;

std::vector<std::uint8_t> encode_dataset(const Dataset& data);
/// Throws ParseError on a bad magic, version, truncation or label byte.
Dataset decode_dataset(std::span<const std::uint8_t> bytes);

void write_dataset(const std::filesystem::path& path, const Dataset& data);
/// Throws ConfigError naming the path when it cannot be opened.
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace lora_lab
