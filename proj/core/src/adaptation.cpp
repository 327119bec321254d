// SPDX-License-Identifier: Apache-2.0

#include "lora_lab/adaptation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "lora_lab/errors.hpp"

namespace lora_lab {

namespace {

constexpr std::array<Target, 3> kAllTargets{Target::Q, Target::K, Target::V};

std::string trim_lower(std::string_view s) {
    std::string out;
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c)))
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

std::string format_real(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

TargetSet TargetSet::parse(std::string_view text) {
    TargetSet set;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string token =
            trim_lower(text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos));
        if (token == "q" || token == "w_q") {
            set.bits_ |= static_cast<std::uint8_t>(Target::Q);
        } else if (token == "k" || token == "w_k") {
            set.bits_ |= static_cast<std::uint8_t>(Target::K);
        } else if (token == "v" || token == "w_v") {
            set.bits_ |= static_cast<std::uint8_t>(Target::V);
        } else if (!token.empty()) {
            throw ConfigError("unknown LoRA target '" + token + "' (expected q, k or v)");
        }
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    if (set.empty()) throw ConfigError("LoRA target set must not be empty");
    return set;
}

std::size_t TargetSet::size() const {
    return static_cast<std::size_t>(std::count_if(kAllTargets.begin(), kAllTargets.end(),
                                                  [&](Target t) { return contains(t); }));
}

std::vector<Target> TargetSet::members() const {
    std::vector<Target> out;
    for (Target t : kAllTargets)
        if (contains(t)) out.push_back(t);
    return out;
}

std::string TargetSet::to_string() const {
    std::string out;
    for (Target t : members()) {
        if (!out.empty()) out += ',';
        out += target_letter(t);
    }
    return out;
}

std::string_view target_letter(Target t) {
    switch (t) {
        case Target::Q: return "q";
        case Target::K: return "k";
        case Target::V: return "v";
    }
    return "?";
}

std::string_view target_weight_suffix(Target t) {
    switch (t) {
        case Target::Q: return "attn.W_q";
        case Target::K: return "attn.W_k";
        case Target::V: return "attn.W_v";
    }
    return "?";
}

std::vector<TargetSet> all_target_combinations() {
    using T = Target;
    return {{T::Q}, {T::K}, {T::V}, {T::Q, T::V}, {T::Q, T::K}, {T::K, T::V}, {T::Q, T::K, T::V}};
}

std::string method_kind(const AdaptationMethod& m) {
    struct {
        std::string operator()(const FixedMethod&) const { return "fixed"; }
        std::string operator()(const FullFinetuneMethod&) const { return "finetune"; }
        std::string operator()(const LoRAConfig&) const { return "lora"; }
        std::string operator()(const AdapterConfig&) const { return "adapter"; }
    } visitor;
    return std::visit(visitor, m);
}

std::string describe(const AdaptationMethod& m) {
    if (const auto* l = std::get_if<LoRAConfig>(&m)) {
        return "lora(r=" + std::to_string(l->rank) + ",alpha=" + format_real(l->effective_alpha()) +
               ",targets=" + l->targets.to_string() + ")";
    }
    if (const auto* a = std::get_if<AdapterConfig>(&m)) {
        return "adapter(m=" + std::to_string(a->bottleneck) + ")";
    }
    return method_kind(m);
}

AdapterConfig default_adapter(const ModelConfig& cfg) {
    return AdapterConfig{std::max<std::size_t>(1, cfg.d_ff / 8)};
}

std::string AdaptationState::lora_a_name(std::size_t layer, Target t) {
    return ModelParams::layer_name(layer, std::string(target_weight_suffix(t)) + ".lora_A");
}

std::string AdaptationState::lora_b_name(std::size_t layer, Target t) {
    return ModelParams::layer_name(layer, std::string(target_weight_suffix(t)) + ".lora_B");
}

std::string AdaptationState::adapter_name(std::size_t layer, std::string_view part) {
    return ModelParams::layer_name(layer, "adapter." + std::string(part));
}

std::vector<double> lora_forward(const Matrix& w, const Matrix& a, const Matrix& b, double alpha,
                                 std::span<const double> x) {
    if (a.cols() != w.cols() || b.rows() != w.rows() || b.cols() != a.rows() || a.rows() == 0) {
        throw ShapeError("lora_forward: W " + w.shape_string() + ", B " + b.shape_string() +
                         ", A " + a.shape_string() + " do not compose");
    }
    const double scale = alpha / static_cast<double>(a.rows());
    std::vector<double> h = matvec(w, x);
    const std::vector<double> ax = matvec(a, x);
    const std::vector<double> bax = matvec(b, ax);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] += scale * bax[i];
    return h;
}

Matrix lora_merge(const Matrix& w, const Matrix& a, const Matrix& b, double alpha) {
    if (a.cols() != w.cols() || b.rows() != w.rows() || b.cols() != a.rows() || a.rows() == 0) {
        throw ShapeError("lora_merge: W " + w.shape_string() + ", B " + b.shape_string() + ", A " +
                         a.shape_string() + " do not compose");
    }
    Matrix delta = matmul(b, a);
    scale_inplace(delta, alpha / static_cast<double>(a.rows()));
    Matrix merged = w;
    add_inplace(merged, delta);
    return merged;
}

AdaptationState instrument(ModelParams& params, const ModelConfig& cfg,
                           const AdaptationMethod& method, RngStream& rng) {
    cfg.validate();
    params.check_against(cfg);

    AdaptationState state;
    state.method = method;

    if (std::holds_alternative<FullFinetuneMethod>(method)) {
        params.set_all_trainable(true);
        return state;
    }

    params.set_all_trainable(false);
    params.at(ModelParams::kHeadWeight).trainable = true;
    params.at(ModelParams::kHeadBias).trainable = true;

    if (const auto* lora = std::get_if<LoRAConfig>(&method)) {
        if (lora->rank < 1 || lora->rank > cfg.d_model) {
            throw ConfigError("LoRA rank " + std::to_string(lora->rank) + " outside [1, " +
                              std::to_string(cfg.d_model) + "]");
        }
        if (lora->targets.empty()) throw ConfigError("LoRA target set must not be empty");
        if (!(lora->effective_alpha() > 0.0) || !std::isfinite(lora->effective_alpha())) {
            throw ConfigError("LoRA alpha must be a positive real");
        }
        const double a_std = 1.0 / std::sqrt(static_cast<double>(lora->rank));
        for (std::size_t l = 0; l < cfg.n_layers; ++l) {
            for (Target t : lora->targets.members()) {
                state.tensors.add(AdaptationState::lora_a_name(l, t),
                                  random_gaussian(lora->rank, cfg.d_model, a_std, rng));
                state.tensors.add(AdaptationState::lora_b_name(l, t),
                                  Matrix(cfg.d_model, lora->rank));
            }
        }
    } else if (const auto* adapter = std::get_if<AdapterConfig>(&method)) {
        const std::size_t m = adapter->bottleneck;
        if (m < 1 || m > cfg.d_ff) {
            throw ConfigError("adapter bottleneck " + std::to_string(m) + " outside [1, " +
                              std::to_string(cfg.d_ff) + "]");
        }
        for (std::size_t l = 0; l < cfg.n_layers; ++l) {
            state.tensors.add(AdaptationState::adapter_name(l, "W_down"),
                              random_gaussian(m, cfg.d_model, ModelParams::kInitStd, rng));
            state.tensors.add(AdaptationState::adapter_name(l, "b_down"), Matrix(1, m));
            state.tensors.add(AdaptationState::adapter_name(l, "W_up"),
                              random_gaussian(cfg.d_model, m, ModelParams::kInitStd, rng));
            state.tensors.add(AdaptationState::adapter_name(l, "b_up"), Matrix(1, cfg.d_model));
        }
    }
    return state;
}

ModelParams merge_adaptation(const ModelParams& params, const AdaptationState& state) {
    ModelParams merged = params;
    const LoRAConfig* lora = state.lora();
    if (!lora) return merged;
    const Target first = lora->targets.members().front();
    for (std::size_t l = 0; state.tensors.contains(AdaptationState::lora_a_name(l, first)); ++l) {
        for (Target t : lora->targets.members()) {
            Tensor& w = merged.at(ModelParams::layer_name(l, target_weight_suffix(t)));
            w.value = lora_merge(w.value, state.tensors.at(AdaptationState::lora_a_name(l, t)).value,
                                 state.tensors.at(AdaptationState::lora_b_name(l, t)).value,
                                 lora->effective_alpha());
        }
    }
    return merged;
}

ParamReport count_params(const ModelParams& params, const AdaptationState& state) {
    ParamReport r;
    r.total = params.scalar_count() + state.tensors.scalar_count();
    r.trainable = params.trainable_scalar_count() + state.tensors.trainable_scalar_count();
    r.frozen = r.total - r.trainable;
    r.ratio = r.trainable == 0 ? 0.0
                               : static_cast<double>(params.scalar_count()) /
                                     static_cast<double>(r.trainable);
    return r;
}

std::size_t lora_param_formula(const ModelConfig& cfg, const LoRAConfig& lora) {
    return cfg.n_layers * lora.targets.size() * 2 * lora.rank * cfg.d_model;
}

}  // namespace lora_lab
