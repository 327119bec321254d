// SPDX-License-Identifier: Apache-2.0

#include "lora_lab/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "lora_lab/errors.hpp"
#include "lora_lab/serialization.hpp"

namespace lora_lab {

namespace {

constexpr std::string_view kFormatName = "lora_lab.checkpoint";

struct Entry {
    const Tensor* tensor;
    std::string_view group;
};

std::vector<std::uint8_t> encode(Json header, const std::vector<Entry>& entries) {
    Json list = Json::array();
    std::size_t payload = 0;
    for (const auto& e : entries) {
        list.push_back(Json{{"name", e.tensor->name},
                            {"group", e.group},
                            {"rows", e.tensor->value.rows()},
                            {"cols", e.tensor->value.cols()},
                            {"trainable", e.tensor->trainable}});
        payload += e.tensor->value.size();
    }
    header["tensors"] = std::move(list);
    const std::string text = header.dump();

    std::vector<std::uint8_t> out;
    out.reserve(text.size() + 1 + payload * 8);
    out.insert(out.end(), text.begin(), text.end());
    out.push_back('\n');
    for (const auto& e : entries) {
        for (double v : e.tensor->value.data()) {
            const auto bits = std::bit_cast<std::uint64_t>(v);
            for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
        }
    }
    return out;
}

struct DecodedTensor {
    std::string name;
    std::string group;
    bool trainable = false;
    Matrix value;
};

struct Decoded {
    Json header;
    std::vector<DecodedTensor> tensors;
};

Decoded decode(std::span<const std::uint8_t> bytes, std::string_view expected_kind) {
    const auto nl = std::find(bytes.begin(), bytes.end(), std::uint8_t{'\n'});
    if (nl == bytes.end()) throw ParseError("checkpoint: missing header line");
    const std::string text(bytes.begin(), nl);

    Decoded d;
    try {
        d.header = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError(std::string("checkpoint: invalid header JSON: ") + e.what(), 1);
    }
    try {
        if (d.header.at("format").get<std::string>() != kFormatName) {
            throw ParseError("checkpoint: not a lora_lab checkpoint");
        }
        const int version = d.header.at("format_version").get<int>();
        if (version != kCheckpointFormatVersion) {
            throw ParseError("checkpoint: unsupported format version " + std::to_string(version));
        }
        const std::string kind = d.header.at("kind").get<std::string>();
        if (kind != expected_kind) {
            throw ParseError("checkpoint: expected a '" + std::string(expected_kind) +
                             "' checkpoint, found '" + kind + "'");
        }

        std::size_t offset = static_cast<std::size_t>(nl - bytes.begin()) + 1;
        for (const auto& t : d.header.at("tensors")) {
            DecodedTensor dt;
            dt.name = t.at("name").get<std::string>();
            dt.group = t.at("group").get<std::string>();
            dt.trainable = t.at("trainable").get<bool>();
            const auto rows = t.at("rows").get<std::size_t>();
            const auto cols = t.at("cols").get<std::size_t>();
            if (cols != 0 && rows > (bytes.size() - offset) / 8 / cols) {
                throw ParseError("checkpoint: payload truncated in tensor '" + dt.name + "'");
            }
            const std::size_t n = rows * cols;
            std::vector<double> values(n);
            for (std::size_t i = 0; i < n; ++i, offset += 8) {
                std::uint64_t bits = 0;
                for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[offset + b]) << (8 * b);
                values[i] = std::bit_cast<double>(bits);
            }
            dt.value = Matrix(rows, cols, std::move(values));
            d.tensors.push_back(std::move(dt));
        }
        if (offset != bytes.size()) {
            throw ParseError("checkpoint: " + std::to_string(bytes.size() - offset) +
                             " trailing payload bytes");
        }
    } catch (const Json::exception& e) {
        throw ParseError(std::string("checkpoint: malformed header: ") + e.what(), 1);
    }
    return d;
}

ModelConfig header_config(const Json& header) {
    try {
        return model_config_from_json(header.at("config"));
    } catch (const Json::exception& e) {
        throw ParseError(std::string("checkpoint: malformed config: ") + e.what(), 1);
    } catch (const ConfigError& e) {
        throw ParseError(std::string("checkpoint: ") + e.what(), 1);
    }
}

void assign(Tensor& dst, DecodedTensor&& src) {
    if (dst.value.rows() != src.value.rows() || dst.value.cols() != src.value.cols()) {
        throw ShapeError("checkpoint tensor '" + src.name + "' is " + src.value.shape_string() +
                         ", model expects " + dst.value.shape_string());
    }
    dst.value = std::move(src.value);
    dst.trainable = src.trainable;
}

}  // namespace

std::vector<std::uint8_t> encode_base_checkpoint(const ModelConfig& cfg, const ModelParams& params) {
    params.check_against(cfg);
    Json header{{"format", kFormatName},
                {"format_version", kCheckpointFormatVersion},
                {"kind", "base"},
                {"config", to_json(cfg)}};
    std::vector<Entry> entries;
    for (const auto& t : params) entries.push_back({&t, "base"});
    return encode(std::move(header), entries);
}

BaseCheckpoint decode_base_checkpoint(std::span<const std::uint8_t> bytes) {
    Decoded d = decode(bytes, "base");
    BaseCheckpoint ck;
    ck.config = header_config(d.header);
    try {
        for (auto& t : d.tensors) {
            if (t.group != "base") throw ParseError("checkpoint: tensor '" + t.name + "' is not in group base");
            ck.params.add(t.name, std::move(t.value), t.trainable);
        }
        ck.params.check_against(ck.config);
    } catch (const ConfigError& e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    } catch (const ShapeError& e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    }
    return ck;
}

std::vector<std::uint8_t> encode_adaptation_delta(const ModelConfig& cfg, const ModelParams& params,
                                                  const AdaptationState& state) {
    params.check_against(cfg);
    Json header{{"format", kFormatName},
                {"format_version", kCheckpointFormatVersion},
                {"kind", "delta"},
                {"config", to_json(cfg)},
                {"method", to_json(state.method)}};
    std::vector<Entry> entries;
    for (const auto& t : params)
        if (t.trainable) entries.push_back({&t, "base"});
    for (const auto& t : state.tensors) entries.push_back({&t, "adaptation"});
    return encode(std::move(header), entries);
}

AdaptedModel apply_adaptation_delta(const BaseCheckpoint& base, std::span<const std::uint8_t> bytes) {
    Decoded d = decode(bytes, "delta");
    AdaptedModel m;
    m.config = header_config(d.header);
    ModelConfig geometry = m.config;
    geometry.max_seq_len = base.config.max_seq_len;
    if (!(geometry == base.config)) {
        throw ShapeError("adaptation delta geometry does not match the base checkpoint");
    }
    AdaptationMethod method;
    try {
        method = method_from_json(d.header.at("method"));
    } catch (const Json::exception& e) {
        throw ParseError(std::string("checkpoint: malformed method: ") + e.what(), 1);
    } catch (const ConfigError& e) {
        throw ParseError(std::string("checkpoint: ") + e.what(), 1);
    }
    m.params = base.params;
    RngStream unused(0);
    m.state = instrument(m.params, m.config, method, unused);
    for (auto& t : d.tensors) {
        if (t.group == "base") {
            Tensor* dst = m.params.find(t.name);
            if (!dst) throw ParseError("checkpoint: unknown base tensor '" + t.name + "'");
            assign(*dst, std::move(t));
        } else if (t.group == "adaptation") {
            Tensor* dst = m.state.tensors.find(t.name);
            if (!dst) throw ParseError("checkpoint: unknown adaptation tensor '" + t.name + "'");
            assign(*dst, std::move(t));
        } else {
            throw ParseError("checkpoint: unknown tensor group '" + t.group + "'");
        }
    }
    return m;
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open file for writing: " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw LabError("failed writing file: " + path.string());
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open file: " + path.string());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void save_base_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg,
                          const ModelParams& params) {
    write_bytes(path, encode_base_checkpoint(cfg, params));
}

BaseCheckpoint load_base_checkpoint(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    try {
        return decode_base_checkpoint(bytes);
    } catch (const ParseError& e) {
        throw ParseError(path.string(), e);
    }
}

void save_adaptation_delta(const std::filesystem::path& path, const ModelConfig& cfg,
                           const ModelParams& params, const AdaptationState& state) {
    write_bytes(path, encode_adaptation_delta(cfg, params, state));
}

AdaptedModel load_adapted_model(const std::filesystem::path& base_path,
                                const std::filesystem::path& delta_path) {
    const BaseCheckpoint base = load_base_checkpoint(base_path);
    const auto bytes = read_bytes(delta_path);
    try {
        return apply_adaptation_delta(base, bytes);
    } catch (const ParseError& e) {
        throw ParseError(delta_path.string(), e);
    }
}

}  // namespace lora_lab
