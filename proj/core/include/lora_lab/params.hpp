// SPDX-License-Identifier: Apache-2.0
//
// Model geometry and named, flag-carrying parameter tensors.

#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lora_lab/numerics.hpp"

namespace lora_lab {

/// Geometry of the toy transformer encoder classifier.
struct ModelConfig {
    std::size_t d_model = 64;
    std::size_t n_heads = 4;
    std::size_t n_layers = 2;
    std::size_t d_ff = 256;
    std::size_t n_classes = 2;
    std::size_t max_seq_len = 32;

    std::size_t head_dim() const { return d_model / n_heads; }

    /// Throws ConfigError unless every dim is >= 1, n_heads divides d_model
    /// and n_classes == 2.
    void validate() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct Tensor {
    std::string name;
    Matrix value;
    bool trainable = true;
};

/// Ordered collection of uniquely named tensors. Insertion order is stable
/// and defines serialization and RNG-initialization order.
class ParamSet {
public:
    /// Throws ConfigError on a duplicate name.
    Tensor& add(std::string name, Matrix value, bool trainable = true);

    Tensor* find(std::string_view name);
    const Tensor* find(std::string_view name) const;
    /// Throws ConfigError when the name is unknown.
    Tensor& at(std::string_view name);
    const Tensor& at(std::string_view name) const;
    bool contains(std::string_view name) const { return find(name) != nullptr; }

    std::vector<Tensor>& tensors() noexcept { return tensors_; }
    const std::vector<Tensor>& tensors() const noexcept { return tensors_; }
    std::size_t size() const noexcept { return tensors_.size(); }

    auto begin() noexcept { return tensors_.begin(); }
    auto end() noexcept { return tensors_.end(); }
    auto begin() const noexcept { return tensors_.begin(); }
    auto end() const noexcept { return tensors_.end(); }

    std::size_t scalar_count() const;
    std::size_t trainable_scalar_count() const;

    void set_all_trainable(bool trainable);

private:
    std::vector<Tensor> tensors_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

/// Base weights of the encoder classifier.
class ModelParams : public ParamSet {
public:
    static constexpr double kInitStd = 0.02;

    /// Gaussian(0, 0.02) projections, zero biases, unit/zero layer norms.
    /// Every tensor starts trainable.
    static ModelParams initialize(const ModelConfig& cfg, RngStream& rng);

    /// Tensor names in the canonical layout, e.g. "layer.0.attn.W_q".
    static std::string layer_name(std::size_t layer, std::string_view suffix);
    static constexpr std::string_view kHeadWeight = "head.W_head";
    static constexpr std::string_view kHeadBias = "head.b_head";

    /// Throws ShapeError if any tensor required by `cfg` is missing or has
    /// the wrong shape.
    void check_against(const ModelConfig& cfg) const;
};

/// Name-keyed gradients; only trainable tensors have entries.
using GradientSet = std::map<std::string, Matrix, std::less<>>;

}  // namespace lora_lab
