// SPDX-License-Identifier: Apache-2.0
//
// Pre-norm transformer encoder classifier with hand-written reverse pass.
//
// Per layer:  x1 = x  + Attn(LN1(x))        (LoRA terms inside Q/K/V)
//             x2 = x1 + FFN(LN2(x1))        (ReLU)
//             out = x2 + Up(ReLU(Down(x2)))  (adapter method only)
// followed by mean-pooling over frames and a linear head. Class 0 is
// genuine, class 1 is spoof. The key bias is a parameter but has no effect
// on the output (softmax is shift invariant per query), so its gradient is
// exactly zero.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lora_lab/adaptation.hpp"
#include "lora_lab/numerics.hpp"
#include "lora_lab/params.hpp"

namespace lora_lab {

/// softmax(q k^T / sqrt(d_h)) v for a single head, d_h = q.cols().
Matrix attention(const Matrix& q, const Matrix& k, const Matrix& v);

/// Logits, one row per sequence (batch x n_classes). Every sequence must be
/// max_seq_len x d_model.
Matrix forward(const ModelConfig& cfg, const ModelParams& params, const AdaptationState& state,
               std::span<const Matrix> batch);

/// Mean over rows of -log softmax(logits)[label], in nats.
double cross_entropy(const Matrix& logits, std::span<const std::size_t> labels);

struct BackwardResult {
    double loss = 0.0;
    Matrix logits;
    /// Gradients of the mean loss for every trainable tensor, base and
    /// adaptation alike. Frozen tensors have no entry.
    GradientSet grads;
};

BackwardResult backward(const ModelConfig& cfg, const ModelParams& params,
                        const AdaptationState& state, std::span<const Matrix> batch,
                        std::span<const std::size_t> labels);

/// Detection score per row: logit(genuine) - logit(spoof).
std::vector<double> detection_scores(const Matrix& logits);

}  // namespace lora_lab
