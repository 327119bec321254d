// SPDX-License-Identifier: Apache-2.0

#include "lora_lab/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "lora_lab/errors.hpp"
#include "lora_lab/model.hpp"

namespace lora_lab {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("train config: learning_rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw ConfigError("train config: beta1 and beta2 must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw ConfigError("train config: eps must be > 0");
    if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
}

std::size_t AdamState::scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, mom] : moments) n += mom.m.size() + mom.v.size();
    return n;
}

std::vector<Tensor*> collect_tensors(ModelParams& params, AdaptationState& state) {
    std::vector<Tensor*> out;
    out.reserve(params.size() + state.tensors.size());
    for (auto& t : params) out.push_back(&t);
    for (auto& t : state.tensors) out.push_back(&t);
    return out;
}

void adam_step(AdamState& adam, const std::vector<Tensor*>& tensors, const GradientSet& grads,
               const TrainConfig& cfg) {
    std::size_t trainable = 0;
    for (const Tensor* t : tensors) {
        if (!t->trainable) continue;
        ++trainable;
        if (!grads.contains(t->name)) {
            throw ContractError("adam_step: no gradient for trainable tensor '" + t->name + "'");
        }
    }
    if (grads.size() != trainable) {
        for (const auto& [name, g] : grads) {
            const auto it = std::find_if(tensors.begin(), tensors.end(),
                                         [&](const Tensor* t) { return t->name == name; });
            if (it == tensors.end()) throw ContractError("adam_step: gradient for unknown tensor '" + name + "'");
            if (!(*it)->trainable) throw ContractError("adam_step: gradient for frozen tensor '" + name + "'");
        }
    }

    ++adam.step;
    const double t = static_cast<double>(adam.step);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (Tensor* tensor : tensors) {
        if (!tensor->trainable) continue;
        const Matrix& g = grads.find(tensor->name)->second;
        if (g.rows() != tensor->value.rows() || g.cols() != tensor->value.cols()) {
            throw ShapeError("adam_step: gradient for '" + tensor->name + "' is " + g.shape_string() +
                             ", tensor is " + tensor->value.shape_string());
        }
        auto [it, inserted] = adam.moments.try_emplace(
            tensor->name,
            AdamState::Moments{Matrix(g.rows(), g.cols()), Matrix(g.rows(), g.cols())});
        auto m = it->second.m.data();
        auto v = it->second.v.data();
        auto theta = tensor->value.data();
        const auto gd = g.data();
        for (std::size_t i = 0; i < gd.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gd[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gd[i] * gd[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            theta[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.eps);
        }
    }
}

std::vector<std::size_t> class_ids(std::span<const Trial* const> trials) {
    std::vector<std::size_t> ids(trials.size());
    for (std::size_t i = 0; i < trials.size(); ++i) ids[i] = static_cast<std::size_t>(trials[i]->label);
    return ids;
}

EpochStats train_epoch(const ModelConfig& cfg, ModelParams& params, AdaptationState& state,
                       AdamState& adam, const Dataset& data, const TrainConfig& train,
                       RngStream& rng) {
    train.validate();
    if (data.trials.empty()) throw ConfigError("train_epoch: dataset is empty");

    std::vector<std::size_t> order(data.trials.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

    const std::vector<Tensor*> tensors = collect_tensors(params, state);
    EpochStats stats;
    double loss_sum = 0.0;
    std::vector<Matrix> batch;
    std::vector<const Trial*> members;

    const auto start = std::chrono::steady_clock::now();
    for (std::size_t first = 0; first < order.size(); first += train.batch_size) {
        const std::size_t last = std::min(order.size(), first + train.batch_size);
        batch.clear();
        members.clear();
        for (std::size_t i = first; i < last; ++i) {
            members.push_back(&data.trials[order[i]]);
            batch.push_back(members.back()->features);
        }
        const std::vector<std::size_t> labels = class_ids(members);
        BackwardResult r = backward(cfg, params, state, batch, labels);
        adam_step(adam, tensors, r.grads, train);
        loss_sum += r.loss * static_cast<double>(batch.size());
        ++stats.steps;
    }
    const auto stop = std::chrono::steady_clock::now();
    stats.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
    stats.mean_loss = loss_sum / static_cast<double>(order.size());
    return stats;
}

std::vector<TrialScore> score_dataset(const ModelConfig& cfg, const ModelParams& params,
                                      const AdaptationState& state, const Dataset& data,
                                      std::size_t chunk) {
    std::vector<TrialScore> out;
    out.reserve(data.trials.size());
    std::vector<Matrix> batch;
    chunk = std::max<std::size_t>(chunk, 1);
    for (std::size_t first = 0; first < data.trials.size(); first += chunk) {
        const std::size_t last = std::min(data.trials.size(), first + chunk);
        batch.clear();
        for (std::size_t i = first; i < last; ++i) batch.push_back(data.trials[i].features);
        const std::vector<double> s = detection_scores(forward(cfg, params, state, batch));
        for (std::size_t i = first; i < last; ++i)
            out.push_back({data.trials[i].id, data.trials[i].label, s[i - first]});
    }
    return out;
}

namespace {

struct Snapshot {
    std::vector<Matrix> values;
};

Snapshot snapshot_trainable(const std::vector<Tensor*>& tensors) {
    Snapshot s;
    for (const Tensor* t : tensors)
        if (t->trainable) s.values.push_back(t->value);
    return s;
}

void restore_trainable(const std::vector<Tensor*>& tensors, Snapshot s) {
    std::size_t k = 0;
    for (Tensor* t : tensors)
        if (t->trainable) t->value = std::move(s.values[k++]);
}

}  // namespace

FitResult fit(const ModelConfig& cfg, ModelParams& params, AdaptationState& state,
              const Dataset& train_data, const Dataset* dev, const TrainConfig& train,
              const std::function<void(const EpochStats&)>& on_epoch) {
    train.validate();
    RngStream rng(train.seed);
    AdamState adam;
    FitResult result;
    const std::vector<Tensor*> tensors = collect_tensors(params, state);
    const bool select = dev != nullptr && !dev->trials.empty();
    Snapshot best;

    for (std::size_t e = 0; e < train.epochs; ++e) {
        EpochStats stats = train_epoch(cfg, params, state, adam, train_data, train, rng);
        stats.epoch = e + 1;
        if (select) {
            stats.dev_eer = compute_eer(score_dataset(cfg, params, state, *dev)).eer;
            if (result.best_dev_eer < 0.0 || stats.dev_eer < result.best_dev_eer) {
                result.best_dev_eer = stats.dev_eer;
                result.best_epoch = stats.epoch;
                best = snapshot_trainable(tensors);
            }
        }
        if (on_epoch) on_epoch(stats);
        result.epochs.push_back(stats);
    }
    if (select && result.best_epoch > 0) restore_trainable(tensors, std::move(best));
    if (!select) result.best_epoch = train.epochs;
    return result;
}

ModelConfig grad_check_config() {
    ModelConfig c;
    c.d_model = 8;
    c.n_heads = 2;
    c.n_layers = 1;
    c.d_ff = 16;
    c.max_seq_len = 4;
    return c;
}

GradCheckReport grad_check(const ModelConfig& cfg, const AdaptationMethod& method,
                           std::uint64_t seed) {
    cfg.validate();
    if (cfg.d_model > 16) throw ConfigError("grad_check: d_model must be <= 16");

    RngStream rng(seed);
    ModelParams params = ModelParams::initialize(cfg, rng);
    AdaptationState state = instrument(params, cfg, method, rng);
    // Unit-scale weights so every path carries signal; layer-norm gains stay
    // near one.
    for (auto* set : {static_cast<ParamSet*>(&params), &state.tensors}) {
        for (Tensor& t : *set) {
            const bool gain = t.name.ends_with("gamma");
            for (double& v : t.value.data()) v = (gain ? 1.0 : 0.0) + 0.3 * rng.gaussian();
        }
    }

    constexpr std::size_t kBatch = 3;
    std::vector<Matrix> batch;
    std::vector<std::size_t> labels;
    for (std::size_t i = 0; i < kBatch; ++i) {
        batch.push_back(random_gaussian(cfg.max_seq_len, cfg.d_model, 1.0, rng));
        labels.push_back(i % 2);
    }

    const BackwardResult analytic = backward(cfg, params, state, batch, labels);
    const std::vector<Tensor*> tensors = collect_tensors(params, state);
    const std::size_t trainable_scalars = params.trainable_scalar_count() + state.tensors.trainable_scalar_count();
    const bool sample = trainable_scalars > 1000;

    auto loss_at = [&] { return cross_entropy(forward(cfg, params, state, batch), labels); };

    GradCheckReport report;
    for (Tensor* t : tensors) {
        if (!t->trainable) continue;
        const Matrix& g = analytic.grads.at(t->name);
        TensorCheck check{t->name, 0, t->value.size(), 0.0};
        auto values = t->value.data();
        std::vector<std::size_t> order(values.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::size_t n_check = order.size();
        if (sample) {
            // First quarter (rounded up) of a Fisher-Yates shuffle.
            n_check = (order.size() + 3) / 4;
            for (std::size_t k = 0; k < n_check; ++k) {
                std::swap(order[k], order[k + rng.below(order.size() - k)]);
            }
        }
        for (std::size_t k = 0; k < n_check; ++k) {
            const std::size_t i = order[k];
            const double saved = values[i];
            values[i] = saved + kGradCheckStep;
            const double up = loss_at();
            values[i] = saved - kGradCheckStep;
            const double down = loss_at();
            values[i] = saved;
            const double numeric = (up - down) / (2.0 * kGradCheckStep);
            const double a = g.data()[i];
            const double rel =
                std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
            check.max_rel_error = std::max(check.max_rel_error, rel);
            ++check.checked;
        }
        report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
        report.tensors.push_back(std::move(check));
    }
    return report;
}

}  // namespace lora_lab
