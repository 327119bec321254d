// SPDX-License-Identifier: Apache-2.0
//
// Low-rank adaptation of the attention projections, the bottleneck adapter
// baseline, freeze/finetune baselines, weight merging and parameter
// accounting.
//
// A LoRA-adapted projection computes h = W x + (alpha / r) * B (A x) with W
// frozen, A (r x k) and B (d x r) trainable. B starts at zero, so an
// instrumented model is numerically the frozen model until the first update.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lora_lab/numerics.hpp"
#include "lora_lab/params.hpp"

namespace lora_lab {

enum class Target : std::uint8_t { Q = 1, K = 2, V = 4 };

/// Non-empty subset of {Q, K, V}.
class TargetSet {
public:
    constexpr TargetSet() = default;
    constexpr TargetSet(std::initializer_list<Target> targets) {
        for (Target t : targets) bits_ |= static_cast<std::uint8_t>(t);
    }

    /// Parses "q,v", "k", "q,k,v" (any order, case-insensitive). Throws
    /// ConfigError on unknown or empty lists.
    static TargetSet parse(std::string_view text);

    bool contains(Target t) const { return (bits_ & static_cast<std::uint8_t>(t)) != 0; }
    bool empty() const { return bits_ == 0; }
    std::size_t size() const;
    /// Members in canonical q, k, v order.
    std::vector<Target> members() const;
    /// Canonical comma-separated form, e.g. "q,v".
    std::string to_string() const;

    friend bool operator==(TargetSet, TargetSet) = default;

private:
    std::uint8_t bits_ = 0;
};

/// Lower-case letter for the target ("q", "k", "v").
std::string_view target_letter(Target t);
/// Base weight suffix for the target ("attn.W_q", ...).
std::string_view target_weight_suffix(Target t);

/// The seven target combinations compared in the weight-type sweep.
std::vector<TargetSet> all_target_combinations();

struct LoRAConfig {
    std::size_t rank = 4;
    /// Defaults to `rank`, i.e. a scale of exactly 1.
    std::optional<double> alpha;
    TargetSet targets{Target::Q, Target::V};

    double effective_alpha() const { return alpha.value_or(static_cast<double>(rank)); }
    double scale() const { return effective_alpha() / static_cast<double>(rank); }

    friend bool operator==(const LoRAConfig&, const LoRAConfig&) = default;
};

struct AdapterConfig {
    std::size_t bottleneck = 32;
    friend bool operator==(const AdapterConfig&, const AdapterConfig&) = default;
};

struct FixedMethod {
    friend bool operator==(const FixedMethod&, const FixedMethod&) = default;
};

struct FullFinetuneMethod {
    friend bool operator==(const FullFinetuneMethod&, const FullFinetuneMethod&) = default;
};

using AdaptationMethod = std::variant<FixedMethod, FullFinetuneMethod, LoRAConfig, AdapterConfig>;

/// "fixed", "finetune", "lora" or "adapter".
std::string method_kind(const AdaptationMethod& m);
/// Human-readable descriptor, e.g. "lora(r=4,alpha=4,targets=q,v)".
std::string describe(const AdaptationMethod& m);

/// Default adapter bottleneck: d_ff / 8.
AdapterConfig default_adapter(const ModelConfig& cfg);

/// Trainable tensors attached to the base model by `instrument`.
struct AdaptationState {
    AdaptationMethod method = FixedMethod{};
    ParamSet tensors;

    const LoRAConfig* lora() const { return std::get_if<LoRAConfig>(&method); }
    const AdapterConfig* adapter() const { return std::get_if<AdapterConfig>(&method); }

    static std::string lora_a_name(std::size_t layer, Target t);
    static std::string lora_b_name(std::size_t layer, Target t);
    static std::string adapter_name(std::size_t layer, std::string_view part);
};

/// W x + (alpha / r) * B (A x), evaluated as two small matrix-vector
/// products. r is taken from A's row count.
std::vector<double> lora_forward(const Matrix& w, const Matrix& a, const Matrix& b, double alpha,
                                 std::span<const double> x);

/// W + (alpha / r) * B A.
Matrix lora_merge(const Matrix& w, const Matrix& a, const Matrix& b, double alpha);

/// Sets trainability flags on `params` for `method` and creates the
/// method's extra tensors.
///   FullFinetune: every base tensor trainable, no extra tensors.
///   Fixed:        head only.
///   LoRA:         head + A, B for each target in every layer; A ~ N(0, 1/r),
///                 B = 0.
///   Adapter:      head + one bottleneck (down, ReLU, up, residual) after each
///                 FFN block, weights ~ N(0, 0.02^2), zero biases.
/// Throws ConfigError for a rank outside [1, d_model], an empty target set
/// or a bottleneck outside [1, d_ff].
AdaptationState instrument(ModelParams& params, const ModelConfig& cfg,
                           const AdaptationMethod& method, RngStream& rng);

/// Folds every LoRA update into its base weight. The result is used with an
/// empty (Fixed) adaptation state. Non-LoRA states are returned unchanged.
ModelParams merge_adaptation(const ModelParams& params, const AdaptationState& state);

struct ParamReport {
    std::size_t total = 0;
    std::size_t trainable = 0;
    std::size_t frozen = 0;
    /// trainable(FullFinetune) / trainable(method).
    double ratio = 0.0;
};

ParamReport count_params(const ModelParams& params, const AdaptationState& state);

/// n_layers * |targets| * 2 * r * d_model, the LoRA-only trainable count.
std::size_t lora_param_formula(const ModelConfig& cfg, const LoRAConfig& lora);

}  // namespace lora_lab
