// SPDX-License-Identifier: Apache-2.0
//
// Pretrain -> adapt -> evaluate pipelines, parameter sweeps and the epoch
// timing grid, with their JSON/CSV reports.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lora_lab/adaptation.hpp"
#include "lora_lab/evaluation.hpp"
#include "lora_lab/params.hpp"
#include "lora_lab/serialization.hpp"
#include "lora_lab/synthdata.hpp"
#include "lora_lab/training.hpp"

namespace lora_lab {

struct DataConfig {
    /// Target-task training trials per class.
    std::size_t train_per_class = 500;
    /// Source-task training trials per class. Pretraining sees more data
    /// than adaptation, as a pretrained backbone would.
    std::size_t source_train_per_class = 2500;
    std::size_t dev_per_class = 100;
    std::size_t eval_per_class = 500;
    std::size_t seq_len = 32;
    double noise_sigma = 1.0;
    double artifact_amp = 0.6;
    /// 0 selects feat_dim / 4.
    std::size_t artifact_dims = 0;
    double base_freq = 1.0;
    double source_freq = DatasetSpec::kSourceArtifactFreq;
    double target_freq = DatasetSpec::kTargetArtifactFreq;
};

struct ExperimentConfig {
    ModelConfig model;
    DataConfig data;
    TrainConfig pretrain = default_pretrain();
    TrainConfig adapt = default_adapt();
    /// LoRA settings used wherever the sweep axis does not override them.
    LoRAConfig lora{.rank = 2, .alpha = std::nullopt, .targets = {Target::Q, Target::V}};
    /// Defaults to d_ff / 8.
    std::optional<std::size_t> adapter_bottleneck;
    std::uint64_t master_seed = 2023;

    static TrainConfig default_pretrain();
    static TrainConfig default_adapt();

    AdapterConfig adapter() const;
    void validate() const;
};

Json to_json(const ExperimentConfig& c);
/// Missing keys keep their defaults; unknown keys are config errors.
ExperimentConfig experiment_config_from_json(const Json& j);

/// Seed for sweep point `index`: splitmix64(master_seed ^ index).
std::uint64_t point_seed(std::uint64_t master_seed, std::uint64_t index);

struct TaskData {
    Dataset train;
    Dataset dev;
    Dataset eval;
};

enum class Task { Source, Target };

std::size_t train_per_class(const ExperimentConfig& cfg, Task task);

/// Train/dev/eval splits for a task, each from its own seed derived from the
/// master seed. All splits are generated with `seq_len` frames.

TaskData make_task_data(const ExperimentConfig& cfg, Task task, std::size_t seq_len);
TaskData crop_task(const TaskData& data, std::size_t seq_len);
DatasetSpec task_spec(const ExperimentConfig& cfg, Task task, Split split, std::size_t seq_len,
                      std::size_t n_per_class);

using EpochCallback = std::function<void(const std::string& phase, const EpochStats&)>;

/// Full training of a freshly initialized model on the source task.
ModelParams pretrain_base(const ExperimentConfig& cfg, const TaskData& source,
                          FitResult* fit = nullptr, const EpochCallback& on_epoch = {});

struct RunReport {
    std::string method;
    std::string descriptor;
    double eer = 0.0;
    double eer_threshold = 0.0;
    std::size_t trainable_params = 0;
    std::size_t total_params = 0;
    double param_ratio = 0.0;
    double epoch_time_ms = 0.0;
    std::size_t float_footprint = 0;
    std::uint64_t seed = 0;
    std::size_t best_epoch = 0;
    double best_dev_eer = -1.0;
    Json config;
};

Json to_json(const RunReport& r);
RunReport run_report_from_json(const Json& j);

struct AdaptArtifacts {
    ModelParams params;
    AdaptationState state;
    std::vector<TrialScore> eval_scores;
    FitResult fit;
};

/// Instruments a copy of `base` with `method` (RNG seeded by `seed`), trains
/// on `target.train` with dev-EER model selection and reports eval EER,
/// parameter counts, median epoch time and float footprint.
RunReport run_adaptation(const ExperimentConfig& cfg, const ModelConfig& model,
                         const ModelParams& base, const AdaptationMethod& method,
                         const TaskData& target, std::uint64_t seed,
                         AdaptArtifacts* artifacts = nullptr, const EpochCallback& on_epoch = {});

/// Per-example activation values cached for the reverse pass.
std::size_t activation_floats_per_example(const ModelConfig& cfg, const AdaptationState& state);

/// Resident 64-bit values while training: all parameters, one gradient and
/// two Adam moments per trainable scalar, and `batch` examples' activations.
std::size_t float_footprint(const ModelConfig& cfg, const ModelParams& params,
                            const AdaptationState& state, std::size_t batch);

enum class SweepAxis { Rank, Targets, Length, Method };

SweepAxis parse_sweep_axis(std::string_view name);
std::string_view axis_name(SweepAxis axis);

struct SweepOptions {
    std::vector<std::size_t> ranks{2, 4, 8, 16};
    std::vector<TargetSet> targets = all_target_combinations();
    std::vector<std::size_t> lengths{8, 16, 32, 64};
    std::vector<std::string> methods{"fixed", "finetune", "adapter", "lora"};
};

struct SweepPoint {
    std::string value;
    /// Position on the axis; strictly increasing along a sweep.
    double order = 0.0;
    RunReport report;
};

struct SweepResult {
    std::string axis;
    std::vector<SweepPoint> points;
};

/// Method name -> method using the experiment's LoRA and adapter settings.
AdaptationMethod method_by_name(const ExperimentConfig& cfg, std::string_view name);

/// One adapt+evaluate run per axis value, all sharing one pretrained base
/// and one set of datasets. Point i trains with seed point_seed(master, i).
SweepResult run_sweep(SweepAxis axis, const ExperimentConfig& cfg, const SweepOptions& options = {},
                      const std::function<void(const SweepPoint&)>& on_point = {});

Json to_json(const SweepResult& r);
SweepResult sweep_result_from_json(const Json& j);
/// CSV laid out like the corresponding results table.
std::string sweep_csv(const SweepResult& r);

struct BenchOptions {
    std::vector<std::size_t> lengths{8, 16, 32, 64};
    std::vector<std::size_t> batches{2, 4, 8, 16, 32};
    std::size_t n_trials = 256;
    std::size_t warmup_epochs = 1;
    std::size_t timed_epochs = 3;
};

struct BenchCell {
    std::size_t length = 0;
    std::size_t batch = 0;
    double finetune_ms = 0.0;
    double lora_ms = 0.0;
    std::size_t finetune_footprint = 0;
    std::size_t lora_footprint = 0;
};

struct BenchResult {
    std::vector<BenchCell> cells;
};

/// Median epoch wall time and float footprint of full fine-tuning and LoRA
/// for every (length, batch) cell, run serially. Within a cell the timed
/// epochs of the two methods alternate.
BenchResult run_bench(const ExperimentConfig& cfg, const BenchOptions& options,
                      const std::function<void(const BenchCell&)>& on_cell = {});

Json to_json(const BenchResult& r);
std::string bench_csv(const BenchResult& r);

double median(std::vector<double> values);

}  // namespace lora_lab
