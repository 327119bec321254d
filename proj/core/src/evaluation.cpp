// SPDX-License-Identifier: Apache-2.0

#include "lora_lab/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lora_lab/errors.hpp"

namespace lora_lab {

namespace {

struct ClassCounts {
    std::size_t genuine = 0;
    std::size_t spoof = 0;
};

ClassCounts count_classes(std::span<const TrialScore> scores) {
    ClassCounts c;
    for (const auto& s : scores) {
        if (!std::isfinite(s.score)) throw DomainError("trial '" + s.trial_id + "' has a non-finite score");
        (s.label == Label::Genuine ? c.genuine : c.spoof)++;
    }
    if (c.genuine == 0 || c.spoof == 0) {
        throw DomainError("EER needs at least one genuine and one spoof trial (got " +
                          std::to_string(c.genuine) + " genuine, " + std::to_string(c.spoof) +
                          " spoof)");
    }
    return c;
}

std::vector<double> distinct_sorted_scores(std::span<const TrialScore> scores) {
    std::vector<double> v;
    v.reserve(scores.size());
    for (const auto& s : scores) v.push_back(s.score);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

std::string_view label_name(Label l) { return l == Label::Genuine ? "genuine" : "spoof"; }

Label parse_label(std::string_view token) {
    if (token == "genuine") return Label::Genuine;
    if (token == "spoof") return Label::Spoof;
    throw ParseError("unknown label '" + std::string(token) + "' (expected genuine or spoof)");
}

ErrorRates far_frr_at(std::span<const TrialScore> scores, double theta) {
    const ClassCounts c = count_classes(scores);
    std::size_t fa = 0;
    std::size_t miss = 0;
    for (const auto& s : scores) {
        if (s.label == Label::Spoof && s.score > theta) ++fa;
        if (s.label == Label::Genuine && s.score < theta) ++miss;
    }
    return {static_cast<double>(fa) / static_cast<double>(c.spoof),
            static_cast<double>(miss) / static_cast<double>(c.genuine)};
}

std::vector<double> eer_candidate_thresholds(std::span<const TrialScore> scores) {
    const std::vector<double> d = distinct_sorted_scores(scores);
    std::vector<double> out;
    if (d.empty()) return out;
    out.reserve(d.size() + 1);
    out.push_back(d.front() - 1.0);
    for (std::size_t i = 0; i + 1 < d.size(); ++i) out.push_back(d[i] + 0.5 * (d[i + 1] - d[i]));
    out.push_back(d.back() + 1.0);
    return out;
}

EERResult compute_eer(std::span<const TrialScore> scores) {
    const ClassCounts c = count_classes(scores);

    // Sorted sweep: per distinct score, how many genuine / spoof trials hold it.
    std::vector<std::pair<double, Label>> sorted;
    sorted.reserve(scores.size());
    for (const auto& s : scores) sorted.emplace_back(s.score, s.label);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    const double n_gen = static_cast<double>(c.genuine);
    const double n_spf = static_cast<double>(c.spoof);
    const std::vector<double> candidates = eer_candidate_thresholds(scores);

    // Below every score: all spoof trials are false alarms, no misses.
    std::size_t spoof_above = c.spoof;
    std::size_t genuine_below = 0;
    double prev_theta = candidates.front();
    double prev_fa = 1.0;
    double prev_miss = 0.0;

    EERResult r;
    r.n_genuine = c.genuine;
    r.n_spoof = c.spoof;

    auto settle = [&](double theta, double fa, double miss) {
        r.threshold = theta;
        r.far_at = fa;
        r.frr_at = miss;
        r.eer = fa;
    };

    if (prev_fa - prev_miss <= 0.0) {
        settle(prev_theta, prev_fa, prev_miss);
        return r;
    }

    std::size_t i = 0;
    for (std::size_t k = 1; k < candidates.size(); ++k) {
        // Move past the distinct score lying between candidates k-1 and k.
        const double value = sorted[i].first;
        while (i < sorted.size() && sorted[i].first == value) {
            if (sorted[i].second == Label::Spoof) --spoof_above;
            else ++genuine_below;
            ++i;
        }
        const double theta = candidates[k];
        const double fa = static_cast<double>(spoof_above) / n_spf;
        const double miss = static_cast<double>(genuine_below) / n_gen;
        const double diff = fa - miss;
        if (diff == 0.0) {
            settle(theta, fa, miss);
            return r;
        }
        if (diff < 0.0) {
            const double prev_diff = prev_fa - prev_miss;
            const double lambda = prev_diff / (prev_diff - diff);
            r.threshold = prev_theta + lambda * (theta - prev_theta);
            r.far_at = prev_fa + lambda * (fa - prev_fa);
            r.frr_at = prev_miss + lambda * (miss - prev_miss);
            r.eer = 0.5 * (r.far_at + r.frr_at);
            return r;
        }
        prev_theta = theta;
        prev_fa = fa;
        prev_miss = miss;
    }
    // Above every score P_fa = 0 <= P_miss, so the loop always returns.
    settle(prev_theta, prev_fa, prev_miss);
    return r;
}

std::string format_scores(std::span<const TrialScore> scores) {
    std::string out;
    char buf[64];
    for (const auto& s : scores) {
        if (s.trial_id.find_first_of(",\n\r") != std::string::npos) {
            throw DomainError("trial id '" + s.trial_id + "' contains a separator character");
        }
        std::snprintf(buf, sizeof buf, "%.17g", s.score);
        out += s.trial_id;
        out += ',';
        out += label_name(s.label);
        out += ',';
        out += buf;
        out += '\n';
    }
    return out;
}

void write_scores(const std::filesystem::path& path, std::span<const TrialScore> scores) {
    const std::string text = format_scores(scores);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open score file for writing: " + path.string());
    f << text;
    if (!f) throw LabError("failed writing score file: " + path.string());
}

std::vector<TrialScore> parse_scores(std::string_view text) {
    std::vector<TrialScore> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::string_view raw = text.substr(pos, nl == text.npos ? text.npos : nl - pos);
        pos = nl == text.npos ? text.size() : nl + 1;
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty()) continue;

        const std::size_t c1 = line.find(',');
        const std::size_t c2 = c1 == line.npos ? line.npos : line.find(',', c1 + 1);
        if (c1 == line.npos || c2 == line.npos || line.find(',', c2 + 1) != line.npos) {
            throw ParseError("expected 'trial_id,label,score'", line_no);
        }
        TrialScore s;
        s.trial_id = std::string(trim(line.substr(0, c1)));
        if (s.trial_id.empty()) throw ParseError("empty trial id", line_no);
        try {
            s.label = parse_label(trim(line.substr(c1 + 1, c2 - c1 - 1)));
        } catch (const ParseError& e) {
            throw ParseError(e.what(), line_no);
        }
        const std::string_view num = trim(line.substr(c2 + 1));
        const auto [end, ec] = std::from_chars(num.data(), num.data() + num.size(), s.score);
        if (ec != std::errc() || end != num.data() + num.size() || num.empty()) {
            throw ParseError("malformed score '" + std::string(num) + "'", line_no);
        }
        if (!std::isfinite(s.score)) throw ParseError("score must be finite", line_no);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<TrialScore> read_scores(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open score file: " + path.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    try {
        return parse_scores(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string(), e);
    }
}

std::string eer_report_json(const EERResult& r) {
    nlohmann::ordered_json j;
    j["eer"] = r.eer;
    j["threshold"] = r.threshold;
    j["n_genuine"] = r.n_genuine;
    j["n_spoof"] = r.n_spoof;
    return j.dump(2);
}

}  // namespace lora_lab
