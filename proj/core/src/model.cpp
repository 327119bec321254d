// SPDX-License-Identifier: Apache-2.0

#include "lora_lab/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include "lora_lab/errors.hpp"

namespace lora_lab {

namespace {

struct Ref {
    const Tensor* tensor = nullptr;
    Matrix* grad = nullptr;

    const Matrix& value() const { return tensor->value; }
};

struct Projection {
    Ref weight;
    Ref bias;
    Matrix weight_t;
    // LoRA factors; `a.tensor` is null when the projection is not adapted.
    Ref a;
    Ref b;
    Matrix a_t;
    Matrix b_t;
    // The key bias shifts every score of a query row by the same amount, so
    // softmax cancels it exactly. Leaving it out of the arithmetic makes its
    // gradient exactly zero instead of rounding noise.
    bool apply_bias = true;

    bool adapted() const { return a.tensor != nullptr; }
};

struct LayerRefs {
    Ref ln1_gamma, ln1_beta, ln2_gamma, ln2_beta;
    std::array<Projection, 3> qkv;  // indexed q, k, v
    Projection out, ff1, ff2;
    std::optional<Projection> down, up;

    // Which parts of the layer own a trainable tensor.
    bool attention_trainable = false;
    bool ffn_trainable = false;
};

struct ModelView {
    const ModelConfig* cfg = nullptr;
    std::vector<LayerRefs> layers;
    Ref head_w, head_b;
    double lora_scale = 1.0;
    // Lowest layer holding a trainable tensor; n_layers when none does.
    std::size_t lowest_trainable = 0;
};

constexpr std::array<Target, 3> kQkv{Target::Q, Target::K, Target::V};

Ref make_ref(const Tensor& t, GradientSet* grads) {
    Ref r{&t, nullptr};
    if (grads && t.trainable) {
        auto [it, inserted] = grads->try_emplace(t.name, t.value.rows(), t.value.cols());
        r.grad = &it->second;
    }
    return r;
}

void expect_shape(const Tensor& t, std::size_t rows, std::size_t cols) {
    if (t.value.rows() != rows || t.value.cols() != cols) {
        throw ShapeError("tensor '" + t.name + "' is " + t.value.shape_string() + ", expected " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    }
}

Projection make_projection(const ModelParams& p, std::size_t layer, std::string_view w,
                           std::string_view b, GradientSet* grads) {
    Projection proj;
    proj.weight = make_ref(p.at(ModelParams::layer_name(layer, w)), grads);
    proj.bias = make_ref(p.at(ModelParams::layer_name(layer, b)), grads);
    proj.weight_t = transpose(proj.weight.value());
    return proj;
}

Projection make_adapter_projection(const ParamSet& s, std::size_t layer, std::string_view w,
                                   std::string_view b, GradientSet* grads) {
    Projection proj;
    proj.weight = make_ref(s.at(AdaptationState::adapter_name(layer, w)), grads);
    proj.bias = make_ref(s.at(AdaptationState::adapter_name(layer, b)), grads);
    proj.weight_t = transpose(proj.weight.value());
    return proj;
}

bool trainable(const Ref& r) { return r.tensor && r.tensor->trainable; }
bool trainable(const Projection& p) {
    return trainable(p.weight) || trainable(p.bias) || trainable(p.a) || trainable(p.b);
}

ModelView build_view(const ModelConfig& cfg, const ModelParams& params,
                     const AdaptationState& state, GradientSet* grads) {
    cfg.validate();
    params.check_against(cfg);

    ModelView view;
    view.cfg = &cfg;
    const LoRAConfig* lora = state.lora();
    const AdapterConfig* adapter = state.adapter();
    if (lora) view.lora_scale = lora->scale();

    view.layers.resize(cfg.n_layers);
    view.lowest_trainable = cfg.n_layers;
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        LayerRefs& L = view.layers[l];
        L.ln1_gamma = make_ref(params.at(ModelParams::layer_name(l, "ln1.gamma")), grads);
        L.ln1_beta = make_ref(params.at(ModelParams::layer_name(l, "ln1.beta")), grads);
        L.ln2_gamma = make_ref(params.at(ModelParams::layer_name(l, "ln2.gamma")), grads);
        L.ln2_beta = make_ref(params.at(ModelParams::layer_name(l, "ln2.beta")), grads);
        L.qkv[0] = make_projection(params, l, "attn.W_q", "attn.b_q", grads);
        L.qkv[1] = make_projection(params, l, "attn.W_k", "attn.b_k", grads);
        L.qkv[1].apply_bias = false;
        L.qkv[2] = make_projection(params, l, "attn.W_v", "attn.b_v", grads);
        L.out = make_projection(params, l, "attn.W_o", "attn.b_o", grads);
        L.ff1 = make_projection(params, l, "ffn.W_1", "ffn.b_1", grads);
        L.ff2 = make_projection(params, l, "ffn.W_2", "ffn.b_2", grads);

        if (lora) {
            for (std::size_t i = 0; i < kQkv.size(); ++i) {
                if (!lora->targets.contains(kQkv[i])) continue;
                Projection& proj = L.qkv[i];
                const Tensor& a = state.tensors.at(AdaptationState::lora_a_name(l, kQkv[i]));
                const Tensor& b = state.tensors.at(AdaptationState::lora_b_name(l, kQkv[i]));
                expect_shape(a, lora->rank, cfg.d_model);
                expect_shape(b, cfg.d_model, lora->rank);
                proj.a = make_ref(a, grads);
                proj.b = make_ref(b, grads);
                proj.a_t = transpose(a.value);
                proj.b_t = transpose(b.value);
            }
        }
        if (adapter) {
            L.down = make_adapter_projection(state.tensors, l, "W_down", "b_down", grads);
            L.up = make_adapter_projection(state.tensors, l, "W_up", "b_up", grads);
            expect_shape(*L.down->weight.tensor, adapter->bottleneck, cfg.d_model);
            expect_shape(*L.up->weight.tensor, cfg.d_model, adapter->bottleneck);
        }

        L.attention_trainable = trainable(L.ln1_gamma) || trainable(L.ln1_beta) ||
                                trainable(L.out) ||
                                std::any_of(L.qkv.begin(), L.qkv.end(),
                                            [](const Projection& p) { return trainable(p); });
        L.ffn_trainable = trainable(L.ln2_gamma) || trainable(L.ln2_beta) || trainable(L.ff1) ||
                          trainable(L.ff2);
        const bool any = L.attention_trainable || L.ffn_trainable ||
                         (L.down && (trainable(*L.down) || trainable(*L.up)));
        if (any && view.lowest_trainable == cfg.n_layers) view.lowest_trainable = l;
    }
    view.head_w = make_ref(params.at(ModelParams::kHeadWeight), grads);
    view.head_b = make_ref(params.at(ModelParams::kHeadBias), grads);
    return view;
}

// ---------------------------------------------------------------------------
// Forward pieces

struct LayerNormCache {
    Matrix xhat;
    std::vector<double> rstd;
};

Matrix layer_norm_forward(const Matrix& x, const Matrix& gamma, const Matrix& beta,
                          LayerNormCache& cache) {
    const std::size_t n = x.cols();
    cache.xhat = Matrix(x.rows(), n);
    cache.rstd.assign(x.rows(), 0.0);
    Matrix y(x.rows(), n);
    const auto g = gamma.row(0);
    const auto b = beta.row(0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto xi = x.row(i);
        double mean = 0.0;
        for (double v : xi) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : xi) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
        cache.rstd[i] = rstd;
        auto xh = cache.xhat.row(i);
        auto yi = y.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            xh[j] = (xi[j] - mean) * rstd;
            yi[j] = xh[j] * g[j] + b[j];
        }
    }
    return y;
}

Matrix layer_norm_backward(const Matrix& dy, const LayerNormCache& cache, const Ref& gamma,
                           const Ref& beta, bool need_input_grad) {
    const std::size_t n = dy.cols();
    const auto g = gamma.value().row(0);
    Matrix dx;
    if (need_input_grad) dx = Matrix(dy.rows(), n);
    std::vector<double> dxhat(n);
    for (std::size_t i = 0; i < dy.rows(); ++i) {
        const auto dyi = dy.row(i);
        const auto xh = cache.xhat.row(i);
        if (gamma.grad) {
            auto gg = gamma.grad->row(0);
            for (std::size_t j = 0; j < n; ++j) gg[j] += dyi[j] * xh[j];
        }
        if (beta.grad) {
            auto gb = beta.grad->row(0);
            for (std::size_t j = 0; j < n; ++j) gb[j] += dyi[j];
        }
        if (!need_input_grad) continue;
        double mean1 = 0.0;
        double mean2 = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            dxhat[j] = dyi[j] * g[j];
            mean1 += dxhat[j];
            mean2 += dxhat[j] * xh[j];
        }
        mean1 /= static_cast<double>(n);
        mean2 /= static_cast<double>(n);
        auto dxi = dx.row(i);
        for (std::size_t j = 0; j < n; ++j)
            dxi[j] = cache.rstd[i] * (dxhat[j] - mean1 - xh[j] * mean2);
    }
    return dx;
}

Matrix linear_forward(const Projection& p, const Matrix& in) {
    Matrix y = matmul(in, p.weight_t);
    if (p.apply_bias) add_row_bias(y, p.bias.value());
    return y;
}

// in W^T + b, plus scale * (in A^T) B^T when adapted. `u` receives in A^T.
Matrix projection_forward(const Projection& p, const Matrix& in, double scale, Matrix& u) {
    Matrix y = linear_forward(p, in);
    if (p.adapted()) {
        u = matmul(in, p.a_t);
        Matrix delta = matmul(u, p.b_t);
        scale_inplace(delta, scale);
        add_inplace(y, delta);
    }
    return y;
}

void accumulate_linear_grads(const Projection& p, const Matrix& dy, const Matrix& in) {
    if (p.weight.grad) matmul_tn_accumulate(dy, in, *p.weight.grad);
    if (p.bias.grad && p.apply_bias) column_sums_accumulate(dy, *p.bias.grad);
}

void relu_inplace(Matrix& m) {
    for (double& v : m.data()) v = v > 0.0 ? v : 0.0;
}

void relu_backward_inplace(Matrix& grad, const Matrix& pre) {
    auto g = grad.data();
    auto z = pre.data();
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!(z[i] > 0.0)) g[i] = 0.0;
}

Matrix column_block(const Matrix& m, std::size_t first, std::size_t width) {
    Matrix out(m.rows(), width);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto src = m.row(i).subspan(first, width);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

void store_column_block(Matrix& m, const Matrix& block, std::size_t first) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto src = block.row(i);
        std::copy(src.begin(), src.end(), m.row(i).begin() + static_cast<std::ptrdiff_t>(first));
    }
}

struct LayerTrace {
    LayerNormCache ln1;
    Matrix n1;
    std::array<Matrix, 3> qkv;
    std::array<Matrix, 3> lora_u;
    std::vector<Matrix> probs;  // per head, L x L
    Matrix attn_concat;
    LayerNormCache ln2;
    Matrix n2;
    Matrix z1;  // pre-ReLU
    Matrix h;
    Matrix x2;
    Matrix adapter_pre;
    Matrix adapter_act;
};

struct ExampleTrace {
    std::vector<LayerTrace> layers;
    Matrix pooled;
    Matrix logits;
};

Matrix layer_forward(const ModelView& view, const LayerRefs& L, const Matrix& x, LayerTrace& t) {
    const ModelConfig& cfg = *view.cfg;
    const std::size_t dh = cfg.head_dim();
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

    t.n1 = layer_norm_forward(x, L.ln1_gamma.value(), L.ln1_beta.value(), t.ln1);
    for (std::size_t i = 0; i < 3; ++i)
        t.qkv[i] = projection_forward(L.qkv[i], t.n1, view.lora_scale, t.lora_u[i]);

    t.attn_concat = Matrix(x.rows(), cfg.d_model);
    t.probs.resize(cfg.n_heads);
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
        const Matrix qh = column_block(t.qkv[0], h * dh, dh);
        const Matrix kh = column_block(t.qkv[1], h * dh, dh);
        const Matrix vh = column_block(t.qkv[2], h * dh, dh);
        Matrix scores = matmul_nt(qh, kh);
        scale_inplace(scores, inv_sqrt_dh);
        t.probs[h] = softmax_rows(scores);
        store_column_block(t.attn_concat, matmul(t.probs[h], vh), h * dh);
    }
    Matrix x1 = linear_forward(L.out, t.attn_concat);
    add_inplace(x1, x);

    t.n2 = layer_norm_forward(x1, L.ln2_gamma.value(), L.ln2_beta.value(), t.ln2);
    t.z1 = linear_forward(L.ff1, t.n2);
    t.h = t.z1;
    relu_inplace(t.h);
    t.x2 = linear_forward(L.ff2, t.h);
    add_inplace(t.x2, x1);

    if (!L.down) return t.x2;
    t.adapter_pre = linear_forward(*L.down, t.x2);
    t.adapter_act = t.adapter_pre;
    relu_inplace(t.adapter_act);
    Matrix out = linear_forward(*L.up, t.adapter_act);
    add_inplace(out, t.x2);
    return out;
}

void check_sequence(const ModelConfig& cfg, const Matrix& x, std::size_t index) {
    if (x.rows() != cfg.max_seq_len || x.cols() != cfg.d_model) {
        throw ShapeError("sequence " + std::to_string(index) + " is " + x.shape_string() +
                         ", model expects " + std::to_string(cfg.max_seq_len) + "x" +
                         std::to_string(cfg.d_model));
    }
}

// Layer inputs are needed by the backward pass: trace.layers[l] does not keep
// x itself, so the caller keeps `inputs`.
ExampleTrace example_forward(const ModelView& view, const Matrix& x,
                             std::vector<Matrix>* inputs) {
    ExampleTrace trace;
    trace.layers.resize(view.layers.size());
    Matrix cur = x;
    for (std::size_t l = 0; l < view.layers.size(); ++l) {
        if (inputs) inputs->push_back(cur);
        cur = layer_forward(view, view.layers[l], cur, trace.layers[l]);
    }
    trace.pooled = Matrix(1, cur.cols());
    column_sums_accumulate(cur, trace.pooled);
    scale_inplace(trace.pooled, 1.0 / static_cast<double>(cur.rows()));
    trace.logits = matmul_nt(trace.pooled, view.head_w.value());
    add_row_bias(trace.logits, view.head_b.value());
    return trace;
}

// ---------------------------------------------------------------------------
// Reverse pieces

// Returns d(loss)/d(layer input) when `need_input_grad`, otherwise an empty
// matrix.
Matrix layer_backward(const ModelView& view, const LayerRefs& L, const Matrix& x,
                      const LayerTrace& t, Matrix d_out, bool need_input_grad) {
    const ModelConfig& cfg = *view.cfg;
    const std::size_t dh = cfg.head_dim();
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
    const bool need_ffn = need_input_grad || L.ffn_trainable || L.attention_trainable;
    const bool need_attention = need_input_grad || L.attention_trainable;

    Matrix dx2 = std::move(d_out);
    if (L.down) {
        accumulate_linear_grads(*L.up, dx2, t.adapter_act);
        if (!need_ffn && !trainable(*L.down)) return {};
        Matrix dact = matmul(dx2, L.up->weight.value());
        relu_backward_inplace(dact, t.adapter_pre);
        accumulate_linear_grads(*L.down, dact, t.x2);
        if (!need_ffn) return {};
        add_inplace(dx2, matmul(dact, L.down->weight.value()));
    }
    if (!need_ffn) return {};

    // FFN block: x2 = x1 + W2 relu(W1 LN2(x1) + b1) + b2
    accumulate_linear_grads(L.ff2, dx2, t.h);
    Matrix dz1 = matmul(dx2, L.ff2.weight.value());
    relu_backward_inplace(dz1, t.z1);
    accumulate_linear_grads(L.ff1, dz1, t.n2);
    Matrix dx1 = dx2;
    if (need_attention) {
        const Matrix dn2 = matmul(dz1, L.ff1.weight.value());
        add_inplace(dx1, layer_norm_backward(dn2, t.ln2, L.ln2_gamma, L.ln2_beta, true));
    } else {
        const Matrix dn2 = (L.ln2_gamma.grad || L.ln2_beta.grad)
                               ? matmul(dz1, L.ff1.weight.value())
                               : Matrix();
        if (!dn2.empty()) layer_norm_backward(dn2, t.ln2, L.ln2_gamma, L.ln2_beta, false);
        return {};
    }

    // Attention block: x1 = x + Wo concat_h(softmax(q_h k_h^T / sqrt(dh)) v_h) + bo
    accumulate_linear_grads(L.out, dx1, t.attn_concat);
    const Matrix dconcat = matmul(dx1, L.out.weight.value());
    std::array<Matrix, 3> dqkv{Matrix(x.rows(), cfg.d_model), Matrix(x.rows(), cfg.d_model),
                               Matrix(x.rows(), cfg.d_model)};
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
        const Matrix qh = column_block(t.qkv[0], h * dh, dh);
        const Matrix kh = column_block(t.qkv[1], h * dh, dh);
        const Matrix vh = column_block(t.qkv[2], h * dh, dh);
        const Matrix doh = column_block(dconcat, h * dh, dh);
        const Matrix& p = t.probs[h];

        const Matrix dp = matmul_nt(doh, vh);
        store_column_block(dqkv[2], matmul_tn(p, doh), h * dh);

        Matrix ds(p.rows(), p.cols());
        for (std::size_t i = 0; i < p.rows(); ++i) {
            const auto pi = p.row(i);
            const auto dpi = dp.row(i);
            double dot = 0.0;
            for (std::size_t j = 0; j < pi.size(); ++j) dot += pi[j] * dpi[j];
            auto dsi = ds.row(i);
            for (std::size_t j = 0; j < pi.size(); ++j)
                dsi[j] = pi[j] * (dpi[j] - dot) * inv_sqrt_dh;
        }
        store_column_block(dqkv[0], matmul(ds, kh), h * dh);
        store_column_block(dqkv[1], matmul_tn(ds, qh), h * dh);
    }

    const bool need_dn1 = need_input_grad || trainable(L.ln1_gamma) || trainable(L.ln1_beta);
    Matrix dn1;
    if (need_dn1) dn1 = Matrix(x.rows(), cfg.d_model);
    for (std::size_t i = 0; i < 3; ++i) {
        const Projection& proj = L.qkv[i];
        const Matrix& dy = dqkv[i];
        accumulate_linear_grads(proj, dy, t.n1);
        if (need_dn1) add_inplace(dn1, matmul(dy, proj.weight.value()));
        if (proj.adapted()) {
            Matrix dy_scaled = dy;
            scale_inplace(dy_scaled, view.lora_scale);
            if (proj.b.grad) matmul_tn_accumulate(dy_scaled, t.lora_u[i], *proj.b.grad);
            const Matrix du = matmul(dy_scaled, proj.b.value());
            if (proj.a.grad) matmul_tn_accumulate(du, t.n1, *proj.a.grad);
            if (need_dn1) add_inplace(dn1, matmul(du, proj.a.value()));
        }
    }
    if (!need_dn1) return {};
    Matrix dx_ln = layer_norm_backward(dn1, t.ln1, L.ln1_gamma, L.ln1_beta, need_input_grad);
    if (!need_input_grad) return {};
    add_inplace(dx_ln, dx1);
    return dx_ln;
}

}  // namespace

Matrix attention(const Matrix& q, const Matrix& k, const Matrix& v) {
    if (q.cols() != k.cols() || k.rows() != v.rows() || q.cols() == 0) {
        throw ShapeError("attention: Q " + q.shape_string() + ", K " + k.shape_string() + ", V " +
                         v.shape_string() + " do not compose");
    }
    Matrix scores = matmul_nt(q, k);
    scale_inplace(scores, 1.0 / std::sqrt(static_cast<double>(q.cols())));
    return matmul(softmax_rows(scores), v);
}

Matrix forward(const ModelConfig& cfg, const ModelParams& params, const AdaptationState& state,
               std::span<const Matrix> batch) {
    const ModelView view = build_view(cfg, params, state, nullptr);
    Matrix logits(batch.size(), cfg.n_classes);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        check_sequence(cfg, batch[i], i);
        const ExampleTrace trace = example_forward(view, batch[i], nullptr);
        std::copy(trace.logits.data().begin(), trace.logits.data().end(), logits.row(i).begin());
    }
    return logits;
}

double cross_entropy(const Matrix& logits, std::span<const std::size_t> labels) {
    if (logits.rows() != labels.size()) {
        throw ShapeError("cross_entropy: " + std::to_string(logits.rows()) + " logit rows but " +
                         std::to_string(labels.size()) + " labels");
    }
    if (labels.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= logits.cols()) {
            throw DomainError("cross_entropy: label " + std::to_string(labels[i]) +
                              " out of range for " + std::to_string(logits.cols()) + " classes");
        }
        const auto row = logits.row(i);
        const double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double z : row) sum += std::exp(z - mx);
        total += mx + std::log(sum) - row[labels[i]];
    }
    return total / static_cast<double>(labels.size());
}

BackwardResult backward(const ModelConfig& cfg, const ModelParams& params,
                        const AdaptationState& state, std::span<const Matrix> batch,
                        std::span<const std::size_t> labels) {
    if (batch.size() != labels.size()) {
        throw ShapeError("backward: " + std::to_string(batch.size()) + " sequences but " +
                         std::to_string(labels.size()) + " labels");
    }
    BackwardResult result;
    const ModelView view = build_view(cfg, params, state, &result.grads);
    result.logits = Matrix(batch.size(), cfg.n_classes);
    if (batch.empty()) return result;
    const double inv_batch = 1.0 / static_cast<double>(batch.size());

    for (std::size_t i = 0; i < batch.size(); ++i) {
        check_sequence(cfg, batch[i], i);
        if (labels[i] >= cfg.n_classes) {
            throw DomainError("backward: label " + std::to_string(labels[i]) + " out of range");
        }
        std::vector<Matrix> inputs;
        const ExampleTrace trace = example_forward(view, batch[i], &inputs);
        std::copy(trace.logits.data().begin(), trace.logits.data().end(),
                  result.logits.row(i).begin());

        // d(mean CE)/d(logits) = (softmax - onehot) / batch
        Matrix dlogits = softmax_rows(trace.logits);
        dlogits(0, labels[i]) -= 1.0;
        scale_inplace(dlogits, inv_batch);

        if (view.head_w.grad) matmul_tn_accumulate(dlogits, trace.pooled, *view.head_w.grad);
        if (view.head_b.grad) add_inplace(*view.head_b.grad, dlogits);
        if (view.lowest_trainable >= view.layers.size()) continue;

        const Matrix dpooled = matmul(dlogits, view.head_w.value());
        const std::size_t frames = batch[i].rows();
        Matrix d(frames, cfg.d_model);
        for (std::size_t r = 0; r < frames; ++r) {
            auto dr = d.row(r);
            for (std::size_t j = 0; j < cfg.d_model; ++j)
                dr[j] = dpooled(0, j) / static_cast<double>(frames);
        }
        for (std::size_t l = view.layers.size(); l-- > view.lowest_trainable;) {
            d = layer_backward(view, view.layers[l], inputs[l], trace.layers[l], std::move(d),
                               l > view.lowest_trainable);
        }
    }
    result.loss = cross_entropy(result.logits, labels);
    return result;
}

std::vector<double> detection_scores(const Matrix& logits) {
    if (logits.cols() != 2) throw ShapeError("detection_scores: expected two logit columns");
    std::vector<double> s(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) s[i] = logits(i, 0) - logits(i, 1);
    return s;
}

}  // namespace lora_lab
