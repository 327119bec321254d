// SPDX-License-Identifier: Apache-2.0
//
// Threshold-free equal error rate and score-file I/O.
//
//   P_fa(t)   = #{spoof trials with score > t}   / #spoof
//   P_miss(t) = #{genuine trials with score < t} / #genuine
//
// Ties at t count toward neither rate. Scores are "higher means more
// genuine".

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lora_lab {

enum class Label : std::uint8_t { Genuine = 0, Spoof = 1 };

std::string_view label_name(Label l);
/// Accepts "genuine" or "spoof"; throws ParseError otherwise.
Label parse_label(std::string_view token);

struct TrialScore {
    std::string trial_id;
    Label label = Label::Genuine;
    double score = 0.0;

    friend bool operator==(const TrialScore&, const TrialScore&) = default;
};

struct ErrorRates {
    double p_fa = 0.0;
    double p_miss = 0.0;
};

struct EERResult {
    double eer = 0.0;
    double threshold = 0.0;
    double far_at = 0.0;
    double frr_at = 0.0;
    std::size_t n_genuine = 0;
    std::size_t n_spoof = 0;
};

/// Throws DomainError unless both classes are present.
ErrorRates far_frr_at(std::span<const TrialScore> scores, double theta);

/// Sweeps the rates over one threshold inside every open interval between
/// adjacent distinct scores (interval midpoints), plus one threshold below
/// the minimum and one above the maximum; those points observe every value
/// of both step functions. P_fa - P_miss is strictly decreasing along the
/// candidates, so the crossing is unique: either a candidate where the rates
/// are equal, or two neighbours between which both rates are linearly
/// interpolated to the point of equality. Throws DomainError unless both
/// classes are present.
EERResult compute_eer(std::span<const TrialScore> scores);

/// The candidate thresholds used by `compute_eer`, ascending.
std::vector<double> eer_candidate_thresholds(std::span<const TrialScore> scores);

/// `trial_id,label,score` per line, no header; scores written with 17
/// significant digits. Throws ConfigError when the file cannot be opened.
void write_scores(const std::filesystem::path& path, std::span<const TrialScore> scores);
std::string format_scores(std::span<const TrialScore> scores);

/// Throws ParseError (with line number) on malformed lines or unknown
/// labels, ConfigError when the file cannot be opened.
std::vector<TrialScore> read_scores(const std::filesystem::path& path);
std::vector<TrialScore> parse_scores(std::string_view text);

/// {"eer", "threshold", "n_genuine", "n_spoof"} as a JSON document.
std::string eer_report_json(const EERResult& r);

}  // namespace lora_lab
