// SPDX-License-Identifier: Apache-2.0

#include "lora_lab/synthdata.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>

#include "lora_lab/errors.hpp"

namespace lora_lab {

namespace {

constexpr char kMagic[4] = {'L', 'A', 'D', 'S'};

class ByteWriter {
public:
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    template <typename T>
    void le(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i)
            out_.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
    }
    void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::span<const std::uint8_t> take(std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n) {
            throw ParseError("dataset file truncated while reading " + std::string(what) +
                             " at byte offset " + std::to_string(pos_));
        }
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    template <typename T>
    T le(const char* what) {
        const auto s = take(sizeof(T), what);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(s[i]) << (8 * i);
        return static_cast<T>(v);
    }
    float f32(const char* what) { return std::bit_cast<float>(le<std::uint32_t>(what)); }
    std::size_t offset() const { return pos_; }
    bool done() const { return pos_ == bytes_.size(); }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::string trial_id(Split split, std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%05zu", std::string(split_name(split)).c_str(), index);
    return buf;
}

}  // namespace

std::string_view split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Dev: return "dev";
        case Split::Eval: return "eval";
    }
    return "train";
}

Split parse_split(std::string_view s) {
    if (s == "train") return Split::Train;
    if (s == "dev") return Split::Dev;
    if (s == "eval") return Split::Eval;
    throw ConfigError("unknown split '" + std::string(s) + "' (expected train, dev or eval)");
}

void DatasetSpec::validate() const {
    if (seq_len < 2) throw ConfigError("dataset spec: seq_len must be >= 2");
    if (feat_dim < 1) throw ConfigError("dataset spec: feat_dim must be >= 1");
    if (n_per_class < 1) throw ConfigError("dataset spec: n_per_class must be >= 1");
    if (!(noise_sigma >= 0.0) || !(artifact_amp >= 0.0)) {
        throw ConfigError("dataset spec: noise_sigma and artifact_amp must be >= 0");
    }
    if (artifact_dims > feat_dim) {
        throw ConfigError("dataset spec: artifact_dims (" + std::to_string(artifact_dims) +
                          ") exceeds feat_dim (" + std::to_string(feat_dim) + ")");
    }
}

std::size_t Dataset::count(Label l) const {
    std::size_t n = 0;
    for (const auto& t : trials)
        if (t.label == l) ++n;
    return n;
}

Dataset generate_dataset(const DatasetSpec& spec) {
    spec.validate();
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const std::size_t L = spec.seq_len;
    const std::size_t D = spec.feat_dim;
    const std::size_t art = spec.effective_artifact_dims();

    RngStream rng(spec.seed);
    Dataset data;
    data.split = spec.split;
    data.trials.reserve(2 * spec.n_per_class);
    for (std::size_t i = 0; i < 2 * spec.n_per_class; ++i) {
        Trial t;
        t.id = trial_id(spec.split, i);
        t.label = i % 2 == 0 ? Label::Genuine : Label::Spoof;
        t.features = Matrix(L, D);
        for (std::size_t f = 0; f < L; ++f) {
            const double phase_t = two_pi * spec.base_freq * static_cast<double>(f) / static_cast<double>(L);
            const double artifact =
                spec.artifact_amp *
                std::sin(two_pi * spec.artifact_freq * static_cast<double>(f) / static_cast<double>(L));
            for (std::size_t j = 0; j < D; ++j) {
                double x = std::sin(phase_t + two_pi * static_cast<double>(j) / static_cast<double>(D)) +
                           spec.noise_sigma * rng.gaussian();
                if (t.label == Label::Spoof && j < art) x += artifact;
                t.features(f, j) = static_cast<double>(static_cast<float>(x));
            }
        }
        data.trials.push_back(std::move(t));
    }
    return data;
}

Matrix crop_or_pad(const Matrix& seq, std::size_t target_len) {
    if (target_len < 1) throw ConfigError("crop_or_pad: target length must be >= 1");
    Matrix out(target_len, seq.cols());
    const std::size_t keep = std::min(target_len, seq.rows());
    const std::size_t first = seq.rows() - keep;
    for (std::size_t r = 0; r < keep; ++r) {
        const auto src = seq.row(first + r);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

Dataset crop_or_pad(const Dataset& data, std::size_t target_len) {
    Dataset out;
    out.split = data.split;
    out.trials.reserve(data.trials.size());
    for (const auto& t : data.trials) out.trials.push_back({t.id, t.label, crop_or_pad(t.features, target_len)});
    return out;
}

std::vector<std::uint8_t> encode_dataset(const Dataset& data) {
    const std::size_t L = data.seq_len();
    const std::size_t D = data.feat_dim();
    ByteWriter w;
    w.raw(kMagic, sizeof kMagic);
    w.le<std::uint32_t>(kDatasetFormatVersion);
    w.le<std::uint32_t>(static_cast<std::uint32_t>(data.trials.size()));
    w.le<std::uint32_t>(static_cast<std::uint32_t>(L));
    w.le<std::uint32_t>(static_cast<std::uint32_t>(D));
    for (const auto& t : data.trials) {
        if (t.features.rows() != L || t.features.cols() != D) {
            throw ShapeError("dataset trial '" + t.id + "' is " + t.features.shape_string() +
                             ", expected " + std::to_string(L) + "x" + std::to_string(D));
        }
        if (t.id.size() > 0xFFFF) throw DomainError("trial id longer than 65535 bytes");
        w.le<std::uint16_t>(static_cast<std::uint16_t>(t.id.size()));
        w.raw(t.id.data(), t.id.size());
        w.le<std::uint8_t>(static_cast<std::uint8_t>(t.label));
        for (double v : t.features.data()) w.f32(static_cast<float>(v));
    }
    return w.take();
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    const auto magic = r.take(4, "magic");
    if (std::memcmp(magic.data(), kMagic, 4) != 0) throw ParseError("not a LADS dataset file (bad magic)");
    const auto version = r.le<std::uint32_t>("version");
    if (version != kDatasetFormatVersion) {
        throw ParseError("unsupported dataset format version " + std::to_string(version));
    }
    const auto n = r.le<std::uint32_t>("trial count");
    const auto L = r.le<std::uint32_t>("seq_len");
    const auto D = r.le<std::uint32_t>("feat_dim");
    Dataset data;
    data.trials.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        Trial t;
        const auto id_len = r.le<std::uint16_t>("trial id length");
        const auto id = r.take(id_len, "trial id");
        t.id.assign(id.begin(), id.end());
        const auto label = r.le<std::uint8_t>("label");
        if (label > 1) {
            throw ParseError("trial " + std::to_string(i) + ": invalid label byte " +
                             std::to_string(label) + " at offset " + std::to_string(r.offset() - 1));
        }
        t.label = static_cast<Label>(label);
        t.features = Matrix(L, D);
        for (double& v : t.features.data()) v = r.f32("features");
        data.trials.push_back(std::move(t));
    }
    if (!r.done()) {
        throw ParseError("trailing bytes after " + std::to_string(n) + " trials at offset " +
                         std::to_string(r.offset()));
    }
    return data;
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
    const auto bytes = encode_dataset(data);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open dataset file for writing: " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw LabError("failed writing dataset file: " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open dataset file: " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                          std::istreambuf_iterator<char>());
    try {
        return decode_dataset(bytes);
    } catch (const ParseError& e) {
        throw ParseError(path.string(), e);
    }
}

}  // namespace lora_lab
