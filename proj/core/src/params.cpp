// SPDX-License-Identifier: Apache-2.0

#include "lora_lab/params.hpp"

#include "lora_lab/errors.hpp"

namespace lora_lab {

void ModelConfig::validate() const {
    if (d_model < 1 || n_heads < 1 || n_layers < 1 || d_ff < 1 || max_seq_len < 1) {
        throw ConfigError("model config: all dimensions must be >= 1");
    }
    if (d_model % n_heads != 0) {
        throw ConfigError("model config: n_heads (" + std::to_string(n_heads) +
                          ") must divide d_model (" + std::to_string(d_model) + ")");
    }
    if (n_classes != 2) throw ConfigError("model config: n_classes must be 2");
}

Tensor& ParamSet::add(std::string name, Matrix value, bool trainable) {
    if (index_.contains(name)) throw ConfigError("duplicate tensor name '" + name + "'");
    index_.emplace(name, tensors_.size());
    tensors_.push_back(Tensor{std::move(name), std::move(value), trainable});
    return tensors_.back();
}

Tensor* ParamSet::find(std::string_view name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &tensors_[it->second];
}

const Tensor* ParamSet::find(std::string_view name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &tensors_[it->second];
}

Tensor& ParamSet::at(std::string_view name) {
    if (auto* t = find(name)) return *t;
    throw ConfigError("unknown tensor '" + std::string(name) + "'");
}

const Tensor& ParamSet::at(std::string_view name) const {
    if (const auto* t = find(name)) return *t;
    throw ConfigError("unknown tensor '" + std::string(name) + "'");
}

std::size_t ParamSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.value.size();
    return n;
}

std::size_t ParamSet::trainable_scalar_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_)
        if (t.trainable) n += t.value.size();
    return n;
}

void ParamSet::set_all_trainable(bool trainable) {
    for (auto& t : tensors_) t.trainable = trainable;
}

std::string ModelParams::layer_name(std::size_t layer, std::string_view suffix) {
    return "layer." + std::to_string(layer) + "." + std::string(suffix);
}

namespace {

struct Shape {
    std::string suffix;
    std::size_t rows;
    std::size_t cols;
    enum class Init { Gaussian, Zero, One } init;
};

std::vector<Shape> layer_layout(const ModelConfig& c) {
    using I = Shape::Init;
    const std::size_t d = c.d_model;
    return {
        {"ln1.gamma", 1, d, I::One},     {"ln1.beta", 1, d, I::Zero},
        {"attn.W_q", d, d, I::Gaussian}, {"attn.b_q", 1, d, I::Zero},
        {"attn.W_k", d, d, I::Gaussian}, {"attn.b_k", 1, d, I::Zero},
        {"attn.W_v", d, d, I::Gaussian}, {"attn.b_v", 1, d, I::Zero},
        {"attn.W_o", d, d, I::Gaussian}, {"attn.b_o", 1, d, I::Zero},
        {"ln2.gamma", 1, d, I::One},     {"ln2.beta", 1, d, I::Zero},
        {"ffn.W_1", c.d_ff, d, I::Gaussian}, {"ffn.b_1", 1, c.d_ff, I::Zero},
        {"ffn.W_2", d, c.d_ff, I::Gaussian}, {"ffn.b_2", 1, d, I::Zero},
    };
}

}  // namespace

ModelParams ModelParams::initialize(const ModelConfig& cfg, RngStream& rng) {
    cfg.validate();
    ModelParams p;
    auto make = [&](const Shape& s) {
        switch (s.init) {
            case Shape::Init::Gaussian: return random_gaussian(s.rows, s.cols, kInitStd, rng);
            case Shape::Init::One: return Matrix(s.rows, s.cols, 1.0);
            case Shape::Init::Zero: break;
        }
        return Matrix(s.rows, s.cols);
    };
    for (std::size_t l = 0; l < cfg.n_layers; ++l)
        for (const auto& s : layer_layout(cfg)) p.add(layer_name(l, s.suffix), make(s));
    p.add(std::string(kHeadWeight), random_gaussian(cfg.n_classes, cfg.d_model, kInitStd, rng));
    p.add(std::string(kHeadBias), Matrix(1, cfg.n_classes));
    return p;
}

void ModelParams::check_against(const ModelConfig& cfg) const {
    auto expect = [&](const std::string& name, std::size_t rows, std::size_t cols) {
        const Tensor* t = find(name);
        if (!t) throw ShapeError("model params: missing tensor '" + name + "'");
        if (t->value.rows() != rows || t->value.cols() != cols) {
            throw ShapeError("model params: tensor '" + name + "' is " + t->value.shape_string() +
                             ", config requires " + std::to_string(rows) + "x" +
                             std::to_string(cols));
        }
    };
    for (std::size_t l = 0; l < cfg.n_layers; ++l)
        for (const auto& s : layer_layout(cfg)) expect(layer_name(l, s.suffix), s.rows, s.cols);
    expect(std::string(kHeadWeight), cfg.n_classes, cfg.d_model);
    expect(std::string(kHeadBias), 1, cfg.n_classes);
}

}  // namespace lora_lab
