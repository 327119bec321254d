// SPDX-License-Identifier: Apache-2.0
//
// Adam over the trainable subset, the epoch loop with dev-EER model
// selection, and a central-difference gradient checker.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "lora_lab/adaptation.hpp"
#include "lora_lab/evaluation.hpp"
#include "lora_lab/params.hpp"
#include "lora_lab/synthdata.hpp"

namespace lora_lab {

struct TrainConfig {
    /// Reference learning rate; synthetic desk-scale runs use
    /// kDeskScaleLearningRate instead.
    double learning_rate = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t batch_size = 16;
    std::size_t epochs = 50;
    std::uint64_t seed = 0;

    static constexpr double kDeskScaleLearningRate = 1e-3;

    void validate() const;
};

/// Adam moments, kept only for tensors that receive gradients.
struct AdamState {
    struct Moments {
        Matrix m;
        Matrix v;
    };
    std::map<std::string, Moments, std::less<>> moments;
    std::size_t step = 0;

    /// Number of scalars held across both moment buffers.
    std::size_t scalar_count() const;
};

/// Every tensor of the base model followed by every adaptation tensor.
std::vector<Tensor*> collect_tensors(ModelParams& params, AdaptationState& state);

/// One bias-corrected Adam update of every tensor named in `grads`.
/// Throws ContractError for a gradient of a frozen or unknown tensor, or a
/// trainable tensor without a gradient.
void adam_step(AdamState& adam, const std::vector<Tensor*>& tensors, const GradientSet& grads,
               const TrainConfig& cfg);

struct EpochStats {
    std::size_t epoch = 0;
    double mean_loss = 0.0;
    double wall_ms = 0.0;
    std::size_t steps = 0;
    /// Filled by `fit` when a dev set is given; negative otherwise.
    double dev_eer = -1.0;
};

std::vector<std::size_t> class_ids(std::span<const Trial* const> trials);

/// Fisher-Yates shuffle of the trial order, then full batches plus a
/// trailing partial batch. Only the loop is timed. Throws ConfigError for an
/// empty dataset.
EpochStats train_epoch(const ModelConfig& cfg, ModelParams& params, AdaptationState& state,
                       AdamState& adam, const Dataset& data, const TrainConfig& train,
                       RngStream& rng);

/// Detection scores (logit genuine - logit spoof) for every trial, in order.
std::vector<TrialScore> score_dataset(const ModelConfig& cfg, const ModelParams& params,
                                      const AdaptationState& state, const Dataset& data,
                                      std::size_t chunk = 64);

struct FitResult {
    std::vector<EpochStats> epochs;
    std::size_t best_epoch = 0;
    double best_dev_eer = -1.0;
};

/// Runs `train.epochs` epochs. With a non-empty `dev` set, the trainable
/// tensors of the epoch with the lowest dev EER (earliest on ties) are
/// restored at the end. `on_epoch` sees every epoch's stats.
FitResult fit(const ModelConfig& cfg, ModelParams& params, AdaptationState& state,
              const Dataset& train_data, const Dataset* dev, const TrainConfig& train,
              const std::function<void(const EpochStats&)>& on_epoch = {});

struct TensorCheck {
    std::string name;
    std::size_t checked = 0;
    std::size_t size = 0;
    double max_rel_error = 0.0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::vector<TensorCheck> tensors;
};

inline constexpr double kGradCheckStep = 1e-5;

/// Small geometry used by the gradient checker by default.
ModelConfig grad_check_config();

/// Compares analytic gradients against central differences (h = 1e-5) for
/// every trainable scalar, or a random quarter (rounded up) of each tensor
/// when the model has more than 1000 trainable scalars. Relative error is
/// |a - n| / max(|a|, |n|, 1e-8). Weights, adaptation tensors and inputs are
/// drawn at unit-ish scale from `seed` so that no gradient path is
/// degenerate (in particular LoRA B is non-zero). Requires d_model <= 16.
GradCheckReport grad_check(const ModelConfig& cfg, const AdaptationMethod& method,
                           std::uint64_t seed);

}  // namespace lora_lab
