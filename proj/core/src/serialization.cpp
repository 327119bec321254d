// SPDX-License-Identifier: Apache-2.0

#include "lora_lab/serialization.hpp"

#include <algorithm>
#include <initializer_list>

#include "lora_lab/errors.hpp"

namespace lora_lab {

namespace {

void reject_unknown_keys(const Json& j, std::string_view what,
                         std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw ConfigError(std::string(what) + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError(std::string(what) + ": unknown key '" + key + "'");
        }
    }
}

template <typename T>
void read_field(const Json& j, const char* key, T& out, std::string_view what) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    try {
        if constexpr (std::is_unsigned_v<T>) {
            if (!it->is_number_unsigned()) throw ConfigError("");
        }
        out = it->template get<T>();
    } catch (const std::exception&) {
        throw ConfigError(std::string(what) + ": field '" + key + "' has the wrong type");
    }
}

}  // namespace

Json to_json(const ModelConfig& c) {
    return Json{{"d_model", c.d_model}, {"n_heads", c.n_heads},     {"n_layers", c.n_layers},
                {"d_ff", c.d_ff},       {"n_classes", c.n_classes}, {"max_seq_len", c.max_seq_len}};
}

ModelConfig model_config_from_json(const Json& j) {
    constexpr std::string_view what = "model config";
    reject_unknown_keys(j, what, {"d_model", "n_heads", "n_layers", "d_ff", "n_classes", "max_seq_len"});
    ModelConfig c;
    read_field(j, "d_model", c.d_model, what);
    read_field(j, "n_heads", c.n_heads, what);
    read_field(j, "n_layers", c.n_layers, what);
    read_field(j, "d_ff", c.d_ff, what);
    read_field(j, "n_classes", c.n_classes, what);
    read_field(j, "max_seq_len", c.max_seq_len, what);
    c.validate();
    return c;
}

Json to_json(const TrainConfig& c) {
    return Json{{"learning_rate", c.learning_rate}, {"beta1", c.beta1},
                {"beta2", c.beta2},                 {"eps", c.eps},
                {"batch_size", c.batch_size},       {"epochs", c.epochs},
                {"seed", c.seed}};
}

TrainConfig train_config_from_json(const Json& j, TrainConfig c) {
    constexpr std::string_view what = "train config";
    reject_unknown_keys(j, what, {"learning_rate", "beta1", "beta2", "eps", "batch_size", "epochs", "seed"});
    read_field(j, "learning_rate", c.learning_rate, what);
    read_field(j, "beta1", c.beta1, what);
    read_field(j, "beta2", c.beta2, what);
    read_field(j, "eps", c.eps, what);
    read_field(j, "batch_size", c.batch_size, what);
    read_field(j, "epochs", c.epochs, what);
    read_field(j, "seed", c.seed, what);
    c.validate();
    return c;
}

Json to_json(const AdaptationMethod& m) {
    Json j{{"kind", method_kind(m)}};
    if (const auto* l = std::get_if<LoRAConfig>(&m)) {
        j["rank"] = l->rank;
        j["alpha"] = l->effective_alpha();
        j["targets"] = l->targets.to_string();
    } else if (const auto* a = std::get_if<AdapterConfig>(&m)) {
        j["bottleneck"] = a->bottleneck;
    }
    return j;
}

AdaptationMethod method_from_json(const Json& j) {
    constexpr std::string_view what = "method";
    reject_unknown_keys(j, what, {"kind", "rank", "alpha", "targets", "bottleneck"});
    std::string kind;
    read_field(j, "kind", kind, what);
    if (kind == "fixed") return FixedMethod{};
    if (kind == "finetune") return FullFinetuneMethod{};
    if (kind == "lora") {
        LoRAConfig l;
        read_field(j, "rank", l.rank, what);
        if (j.contains("alpha")) {
            double alpha = 0.0;
            read_field(j, "alpha", alpha, what);
            l.alpha = alpha;
        }
        if (j.contains("targets")) {
            std::string t;
            read_field(j, "targets", t, what);
            l.targets = TargetSet::parse(t);
        }
        return l;
    }
    if (kind == "adapter") {
        AdapterConfig a;
        read_field(j, "bottleneck", a.bottleneck, what);
        return a;
    }
    throw ConfigError("method: unknown kind '" + kind + "' (expected fixed, finetune, lora or adapter)");
}

Json to_json(const DatasetSpec& s) {
    return Json{{"n_per_class", s.n_per_class},
                {"seq_len", s.seq_len},
                {"feat_dim", s.feat_dim},
                {"noise_sigma", s.noise_sigma},
                {"artifact_amp", s.artifact_amp},
                {"artifact_freq", s.artifact_freq},
                {"artifact_dims", s.effective_artifact_dims()},
                {"base_freq", s.base_freq},
                {"seed", s.seed},
                {"split", split_name(s.split)}};
}

DatasetSpec dataset_spec_from_json(const Json& j, DatasetSpec s) {
    constexpr std::string_view what = "dataset spec";
    reject_unknown_keys(j, what,
                        {"n_per_class", "seq_len", "feat_dim", "noise_sigma", "artifact_amp",
                         "artifact_freq", "artifact_dims", "base_freq", "seed", "split"});
    read_field(j, "n_per_class", s.n_per_class, what);
    read_field(j, "seq_len", s.seq_len, what);
    read_field(j, "feat_dim", s.feat_dim, what);
    read_field(j, "noise_sigma", s.noise_sigma, what);
    read_field(j, "artifact_amp", s.artifact_amp, what);
    read_field(j, "artifact_freq", s.artifact_freq, what);
    read_field(j, "artifact_dims", s.artifact_dims, what);
    read_field(j, "base_freq", s.base_freq, what);
    read_field(j, "seed", s.seed, what);
    if (j.contains("split")) {
        std::string split;
        read_field(j, "split", split, what);
        s.split = parse_split(split);
    }
    s.validate();
    return s;
}

Json to_json(const ParamReport& r) {
    return Json{{"total", r.total}, {"trainable", r.trainable}, {"frozen", r.frozen}, {"ratio", r.ratio}};
}

Json to_json(const GradCheckReport& r) {
    Json tensors = Json::array();
    for (const auto& t : r.tensors) {
        tensors.push_back(Json{{"name", t.name},
                               {"checked", t.checked},
                               {"size", t.size},
                               {"max_rel_error", t.max_rel_error}});
    }
    return Json{{"max_rel_error", r.max_rel_error}, {"tensors", std::move(tensors)}};
}

Json to_json(const EpochStats& s) {
    Json j{{"epoch", s.epoch}, {"mean_loss", s.mean_loss}, {"wall_ms", s.wall_ms}, {"steps", s.steps}};
    if (s.dev_eer >= 0.0) j["dev_eer"] = s.dev_eer;
    return j;
}

Json parse_json_text(std::string_view text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        // Translate the byte offset into a line number for the message.
        const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
        const std::size_t line =
            1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
        throw ParseError(std::string("invalid JSON: ") + e.what(), line);
    }
}

}  // namespace lora_lab
