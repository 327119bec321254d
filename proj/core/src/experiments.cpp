// SPDX-License-Identifier: Apache-2.0

#include "lora_lab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "lora_lab/errors.hpp"
#include "lora_lab/model.hpp"

namespace lora_lab {

namespace {

// Seed domains for derived data and pretraining streams; sweep points use
// the bare point index.
constexpr std::uint64_t kDataSeedDomain = 0xDA7A000000000000ULL;
constexpr std::uint64_t kPretrainSeedDomain = 0x9E7A000000000000ULL;

std::uint64_t data_seed(std::uint64_t master, Task task, Split split) {
    const std::uint64_t tag = (task == Task::Source ? 0x10u : 0x20u) + static_cast<std::uint64_t>(split);
    return splitmix64(master ^ kDataSeedDomain ^ tag);
}

std::string format_fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string format_params(std::size_t n) { return std::to_string(n); }

}  // namespace

TrainConfig ExperimentConfig::default_pretrain() {
    TrainConfig t;
    t.learning_rate = TrainConfig::kDeskScaleLearningRate;
    t.epochs = 10;
    t.batch_size = 16;
    return t;
}

TrainConfig ExperimentConfig::default_adapt() {
    TrainConfig t;
    t.learning_rate = TrainConfig::kDeskScaleLearningRate;
    t.epochs = 20;
    t.batch_size = 16;
    return t;
}

AdapterConfig ExperimentConfig::adapter() const {
    return adapter_bottleneck ? AdapterConfig{*adapter_bottleneck} : default_adapter(model);
}

void ExperimentConfig::validate() const {
    model.validate();
    pretrain.validate();
    adapt.validate();
    if (lora.rank < 1 || lora.rank > model.d_model) {
        throw ConfigError("experiment: LoRA rank must lie in [1, d_model]");
    }
    const std::size_t m = adapter().bottleneck;
    if (m < 1 || m > model.d_ff) throw ConfigError("experiment: adapter bottleneck must lie in [1, d_ff]");
    if (data.train_per_class < 1 || data.source_train_per_class < 1 || data.eval_per_class < 1) {
        throw ConfigError("experiment: train and eval sets need at least one trial per class");
    }
    if (data.seq_len < 2) throw ConfigError("experiment: seq_len must be >= 2");
}

Json to_json(const ExperimentConfig& c) {
    Json data{{"train_per_class", c.data.train_per_class},
              {"source_train_per_class", c.data.source_train_per_class},
              {"dev_per_class", c.data.dev_per_class},
              {"eval_per_class", c.data.eval_per_class},
              {"seq_len", c.data.seq_len},
              {"noise_sigma", c.data.noise_sigma},
              {"artifact_amp", c.data.artifact_amp},
              {"artifact_dims", c.data.artifact_dims == 0 ? c.model.d_model / 4 : c.data.artifact_dims},
              {"base_freq", c.data.base_freq},
              {"source_freq", c.data.source_freq},
              {"target_freq", c.data.target_freq}};
    return Json{{"model", to_json(c.model)},
                {"data", std::move(data)},
                {"pretrain", to_json(c.pretrain)},
                {"adapt", to_json(c.adapt)},
                {"lora", to_json(AdaptationMethod{c.lora})},
                {"adapter_bottleneck", c.adapter().bottleneck},
                {"master_seed", c.master_seed}};
}

ExperimentConfig experiment_config_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("experiment config: expected a JSON object");
    ExperimentConfig c;
    for (const auto& [key, value] : j.items()) {
        if (key == "model") {
            c.model = model_config_from_json(value);
        } else if (key == "pretrain") {
            c.pretrain = train_config_from_json(value, c.pretrain);
        } else if (key == "adapt") {
            c.adapt = train_config_from_json(value, c.adapt);
        } else if (key == "lora") {
            Json m = value;
            if (m.is_object() && !m.contains("kind")) m["kind"] = "lora";
            const AdaptationMethod method = method_from_json(m);
            if (!std::holds_alternative<LoRAConfig>(method)) {
                throw ConfigError("experiment config: 'lora' must describe a LoRA method");
            }
            c.lora = std::get<LoRAConfig>(method);
        } else if (key == "adapter_bottleneck") {
            if (!value.is_number_unsigned()) throw ConfigError("experiment config: adapter_bottleneck must be a count");
            c.adapter_bottleneck = value.get<std::size_t>();
        } else if (key == "master_seed") {
            if (!value.is_number_unsigned()) throw ConfigError("experiment config: master_seed must be unsigned");
            c.master_seed = value.get<std::uint64_t>();
        } else if (key == "data") {
            if (!value.is_object()) throw ConfigError("experiment config: 'data' must be an object");
            for (const auto& [k, v] : value.items()) {
                auto count = [&](std::size_t& out) {
                    if (!v.is_number_unsigned()) throw ConfigError("experiment config: data." + k + " must be a count");
                    out = v.get<std::size_t>();
                };
                auto real = [&](double& out) {
                    if (!v.is_number()) throw ConfigError("experiment config: data." + k + " must be a number");
                    out = v.get<double>();
                };
                if (k == "train_per_class") count(c.data.train_per_class);
                else if (k == "source_train_per_class") count(c.data.source_train_per_class);
                else if (k == "dev_per_class") count(c.data.dev_per_class);
                else if (k == "eval_per_class") count(c.data.eval_per_class);
                else if (k == "seq_len") count(c.data.seq_len);
                else if (k == "artifact_dims") count(c.data.artifact_dims);
                else if (k == "noise_sigma") real(c.data.noise_sigma);
                else if (k == "artifact_amp") real(c.data.artifact_amp);
                else if (k == "base_freq") real(c.data.base_freq);
                else if (k == "source_freq") real(c.data.source_freq);
                else if (k == "target_freq") real(c.data.target_freq);
                else throw ConfigError("experiment config: unknown key 'data." + k + "'");
            }
        } else {
            throw ConfigError("experiment config: unknown key '" + key + "'");
        }
    }
    c.validate();
    return c;
}

std::uint64_t point_seed(std::uint64_t master_seed, std::uint64_t index) {
    return splitmix64(master_seed ^ index);
}

DatasetSpec task_spec(const ExperimentConfig& cfg, Task task, Split split, std::size_t seq_len,
                      std::size_t n_per_class) {
    DatasetSpec s;
    s.n_per_class = n_per_class;
    s.seq_len = seq_len;
    s.feat_dim = cfg.model.d_model;
    s.noise_sigma = cfg.data.noise_sigma;
    s.artifact_amp = cfg.data.artifact_amp;
    s.artifact_freq = task == Task::Source ? cfg.data.source_freq : cfg.data.target_freq;
    s.artifact_dims = cfg.data.artifact_dims;
    s.base_freq = cfg.data.base_freq;
    s.seed = data_seed(cfg.master_seed, task, split);
    s.split = split;
    return s;
}

std::size_t train_per_class(const ExperimentConfig& cfg, Task task) {
    return task == Task::Source ? cfg.data.source_train_per_class : cfg.data.train_per_class;
}

TaskData make_task_data(const ExperimentConfig& cfg, Task task, std::size_t seq_len) {
    TaskData d;
    d.train = generate_dataset(task_spec(cfg, task, Split::Train, seq_len, train_per_class(cfg, task)));
    if (cfg.data.dev_per_class > 0) {
        d.dev = generate_dataset(task_spec(cfg, task, Split::Dev, seq_len, cfg.data.dev_per_class));
    }
    d.eval = generate_dataset(task_spec(cfg, task, Split::Eval, seq_len, cfg.data.eval_per_class));
    return d;
}

TaskData crop_task(const TaskData& data, std::size_t seq_len) {
    return {crop_or_pad(data.train, seq_len), crop_or_pad(data.dev, seq_len), crop_or_pad(data.eval, seq_len)};
}

ModelParams pretrain_base(const ExperimentConfig& cfg, const TaskData& source, FitResult* fit_out,
                          const EpochCallback& on_epoch) {
    ModelConfig model = cfg.model;
    model.max_seq_len = source.train.seq_len();
    RngStream rng(splitmix64(cfg.master_seed ^ kPretrainSeedDomain));
    ModelParams params = ModelParams::initialize(model, rng);
    AdaptationState state = instrument(params, model, FullFinetuneMethod{}, rng);
    TrainConfig train = cfg.pretrain;
    train.seed = rng.next_u64();
    const FitResult fit = lora_lab::fit(model, params, state, source.train,
                                        source.dev.trials.empty() ? nullptr : &source.dev, train,
                                        [&](const EpochStats& s) {
                                            if (on_epoch) on_epoch("pretrain", s);
                                        });
    if (fit_out) *fit_out = fit;
    return params;
}

std::size_t activation_floats_per_example(const ModelConfig& cfg, const AdaptationState& state) {
    const std::size_t L = cfg.max_seq_len;
    const std::size_t d = cfg.d_model;
    // Layer input, two (x_hat, normed) layer-norm pairs plus their row scales,
    // q/k/v, head-concatenated attention output, FFN pre/post activation and
    // the FFN block output, plus per-head attention probabilities.
    std::size_t per_layer = L * (9 * d + 2 * cfg.d_ff + 2) + cfg.n_heads * L * L;
    if (const auto* lora = state.lora()) per_layer += lora->targets.size() * L * lora->rank;
    if (const auto* adapter = state.adapter()) per_layer += 2 * L * adapter->bottleneck;
    return cfg.n_layers * per_layer + d + cfg.n_classes;
}

std::size_t float_footprint(const ModelConfig& cfg, const ModelParams& params,
                            const AdaptationState& state, std::size_t batch) {
    const ParamReport counts = count_params(params, state);
    return counts.total + 3 * counts.trainable + batch * activation_floats_per_example(cfg, state);
}

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

RunReport run_adaptation(const ExperimentConfig& cfg, const ModelConfig& model,
                         const ModelParams& base, const AdaptationMethod& method,
                         const TaskData& target, std::uint64_t seed, AdaptArtifacts* artifacts,
                         const EpochCallback& on_epoch) {
    ModelParams params = base;
    RngStream rng(seed);
    AdaptationState state = instrument(params, model, method, rng);
    TrainConfig train = cfg.adapt;
    train.seed = rng.next_u64();

    const std::string kind = method_kind(method);
    FitResult fit = lora_lab::fit(model, params, state, target.train,
                                  target.dev.trials.empty() ? nullptr : &target.dev, train,
                                  [&](const EpochStats& s) {
                                      if (on_epoch) on_epoch(kind, s);
                                  });
    std::vector<TrialScore> scores = score_dataset(model, params, state, target.eval);
    const EERResult eer = compute_eer(scores);
    const ParamReport counts = count_params(params, state);

    std::vector<double> times;
    for (const auto& e : fit.epochs) times.push_back(e.wall_ms);

    RunReport r;
    r.method = kind;
    r.descriptor = describe(method);
    r.eer = eer.eer;
    r.eer_threshold = eer.threshold;
    r.trainable_params = counts.trainable;
    r.total_params = counts.total;
    r.param_ratio = counts.ratio;
    r.epoch_time_ms = median(times);
    r.float_footprint = float_footprint(model, params, state, train.batch_size);
    r.seed = seed;
    r.best_epoch = fit.best_epoch;
    r.best_dev_eer = fit.best_dev_eer;
    r.config = Json{{"model", to_json(model)}, {"method", to_json(method)}, {"adapt", to_json(train)},
                    {"master_seed", cfg.master_seed}};

    if (artifacts) {
        artifacts->params = std::move(params);
        artifacts->state = std::move(state);
        artifacts->eval_scores = std::move(scores);
        artifacts->fit = std::move(fit);
    }
    return r;
}

Json to_json(const RunReport& r) {
    return Json{{"method", r.method},
                {"descriptor", r.descriptor},
                {"eer", r.eer},
                {"eer_threshold", r.eer_threshold},
                {"trainable_params", r.trainable_params},
                {"total_params", r.total_params},
                {"param_ratio", r.param_ratio},
                {"epoch_time_ms", r.epoch_time_ms},
                {"float_footprint", r.float_footprint},
                {"seed", r.seed},
                {"best_epoch", r.best_epoch},
                {"best_dev_eer", r.best_dev_eer},
                {"config", r.config}};
}

RunReport run_report_from_json(const Json& j) {
    try {
        RunReport r;
        r.method = j.at("method").get<std::string>();
        r.descriptor = j.at("descriptor").get<std::string>();
        r.eer = j.at("eer").get<double>();
        r.eer_threshold = j.at("eer_threshold").get<double>();
        r.trainable_params = j.at("trainable_params").get<std::size_t>();
        r.total_params = j.at("total_params").get<std::size_t>();
        r.param_ratio = j.at("param_ratio").get<double>();
        r.epoch_time_ms = j.at("epoch_time_ms").get<double>();
        r.float_footprint = j.at("float_footprint").get<std::size_t>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.best_epoch = j.at("best_epoch").get<std::size_t>();
        r.best_dev_eer = j.at("best_dev_eer").get<double>();
        r.config = j.at("config");
        return r;
    } catch (const Json::exception& e) {
        throw ParseError(std::string("run report: ") + e.what());
    }
}

SweepAxis parse_sweep_axis(std::string_view name) {
    if (name == "rank") return SweepAxis::Rank;
    if (name == "targets") return SweepAxis::Targets;
    if (name == "length") return SweepAxis::Length;
    if (name == "method") return SweepAxis::Method;
    throw ConfigError("unknown sweep axis '" + std::string(name) +
                      "' (expected rank, targets, length or method)");
}

std::string_view axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::Rank: return "rank";
        case SweepAxis::Targets: return "targets";
        case SweepAxis::Length: return "length";
        case SweepAxis::Method: return "method";
    }
    return "rank";
}

AdaptationMethod method_by_name(const ExperimentConfig& cfg, std::string_view name) {
    if (name == "fixed") return FixedMethod{};
    if (name == "finetune") return FullFinetuneMethod{};
    if (name == "adapter") return cfg.adapter();
    if (name == "lora") return cfg.lora;
    throw ConfigError("unknown method '" + std::string(name) +
                      "' (expected fixed, finetune, adapter or lora)");
}

namespace {

std::size_t method_order(std::string_view name) {
    constexpr std::array<std::string_view, 4> order{"fixed", "finetune", "adapter", "lora"};
    return static_cast<std::size_t>(std::find(order.begin(), order.end(), name) - order.begin());
}

std::size_t targets_order(TargetSet t) {
    const auto all = all_target_combinations();
    return static_cast<std::size_t>(std::find(all.begin(), all.end(), t) - all.begin());
}

template <typename T, typename Key>
std::vector<T> sorted_unique(std::vector<T> values, Key key, std::string_view what) {
    std::sort(values.begin(), values.end(), [&](const T& a, const T& b) { return key(a) < key(b); });
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (key(values[i]) == key(values[i - 1])) {
            throw ConfigError("sweep: duplicate " + std::string(what) + " value");
        }
    }
    if (values.empty()) throw ConfigError("sweep: no " + std::string(what) + " values");
    return values;
}

}  // namespace

SweepResult run_sweep(SweepAxis axis, const ExperimentConfig& cfg, const SweepOptions& options,
                      const std::function<void(const SweepPoint&)>& on_point) {
    cfg.validate();
    SweepResult result;
    result.axis = std::string(axis_name(axis));

    struct Point {
        std::string value;
        double order;
        AdaptationMethod method;
        std::size_t seq_len;
    };
    std::vector<Point> points;
    const std::size_t base_len = cfg.data.seq_len;

    switch (axis) {
        case SweepAxis::Rank: {
            for (std::size_t r : sorted_unique(options.ranks, [](std::size_t v) { return v; }, "rank")) {
                LoRAConfig l = cfg.lora;
                l.rank = r;
                if (cfg.lora.alpha && *cfg.lora.alpha == static_cast<double>(cfg.lora.rank)) l.alpha.reset();
                points.push_back({std::to_string(r), static_cast<double>(r), l, base_len});
            }
            break;
        }
        case SweepAxis::Targets: {
            for (TargetSet t : sorted_unique(options.targets, targets_order, "targets")) {
                if (targets_order(t) >= all_target_combinations().size()) {
                    throw ConfigError("sweep: invalid target set");
                }
                LoRAConfig l = cfg.lora;
                l.targets = t;
                points.push_back({t.to_string(), static_cast<double>(targets_order(t)), l, base_len});
            }
            break;
        }
        case SweepAxis::Length: {
            for (std::size_t L : sorted_unique(options.lengths, [](std::size_t v) { return v; }, "length")) {
                if (L < 2) throw ConfigError("sweep: lengths must be >= 2");
                points.push_back({std::to_string(L), static_cast<double>(L), cfg.lora, L});
            }
            break;
        }
        case SweepAxis::Method: {
            for (const std::string& m : options.methods) method_by_name(cfg, m);
            for (const std::string& m : sorted_unique(options.methods, method_order, "method")) {
                points.push_back({m, static_cast<double>(method_order(m)), method_by_name(cfg, m), base_len});
            }
            break;
        }
    }

    // Length sweeps generate at the longest length and crop from there, so
    // every point sees the tail of the same underlying sequences.
    std::size_t gen_len = base_len;
    for (const auto& p : points) gen_len = std::max(gen_len, p.seq_len);
    const TaskData source_full = make_task_data(cfg, Task::Source, gen_len);
    const TaskData target_full = make_task_data(cfg, Task::Target, gen_len);
    const TaskData source = gen_len == base_len ? source_full : crop_task(source_full, base_len);

    const ModelParams base = pretrain_base(cfg, source);

    for (std::size_t i = 0; i < points.size(); ++i) {
        const Point& p = points[i];
        ModelConfig model = cfg.model;
        model.max_seq_len = p.seq_len;
        const TaskData target = p.seq_len == gen_len ? target_full : crop_task(target_full, p.seq_len);
        SweepPoint sp{p.value, p.order,
                      run_adaptation(cfg, model, base, p.method, target, point_seed(cfg.master_seed, i))};
        if (on_point) on_point(sp);
        result.points.push_back(std::move(sp));
    }
    return result;
}

Json to_json(const SweepResult& r) {
    Json points = Json::array();
    for (const auto& p : r.points) {
        points.push_back(Json{{"value", p.value}, {"order", p.order}, {"report", to_json(p.report)}});
    }
    return Json{{"axis", r.axis}, {"points", std::move(points)}};
}

SweepResult sweep_result_from_json(const Json& j) {
    try {
        SweepResult r;
        r.axis = j.at("axis").get<std::string>();
        for (const auto& p : j.at("points")) {
            r.points.push_back({p.at("value").get<std::string>(), p.at("order").get<double>(),
                                run_report_from_json(p.at("report"))});
        }
        return r;
    } catch (const Json::exception& e) {
        throw ParseError(std::string("sweep result: ") + e.what());
    }
}

std::string sweep_csv(const SweepResult& r) {
    std::ostringstream os;
    const auto pct = [](double eer) { return format_fixed(100.0 * eer, 2); };
    const auto secs = [](double ms) { return format_fixed(ms / 1000.0, 3); };
    if (r.axis == "rank") {
        os << "r,#Parameters,EER%\n";
        for (const auto& p : r.points)
            os << p.value << ',' << format_params(p.report.trainable_params) << ',' << pct(p.report.eer) << '\n';
    } else if (r.axis == "targets") {
        std::string rank = "?";
        if (!r.points.empty()) {
            const Json& m = r.points.front().report.config.at("method");
            if (m.contains("rank")) rank = std::to_string(m.at("rank").get<std::size_t>());
        }
        os << "Weight Type,r=" << rank << ",#Parameters\n";
        for (const auto& p : r.points) {
            std::string label;
            for (char c : p.value) {
                if (c == ',') label += " ";
                else label += std::string("W_") + c;
            }
            os << '"' << label << "\"," << pct(p.report.eer) << ',' << format_params(p.report.trainable_params) << '\n';
        }
    } else if (r.axis == "length") {
        os << "Length,Train Time(s),EER%\n";
        for (const auto& p : r.points)
            os << p.value << ',' << secs(p.report.epoch_time_ms) << ',' << pct(p.report.eer) << '\n';
    } else {
        os << "Methods,Train Time(s),#Parameters,EER%\n";
        for (const auto& p : r.points) {
            os << p.value << ',' << secs(p.report.epoch_time_ms) << ',' << format_params(p.report.trainable_params)
               << ',' << pct(p.report.eer) << '\n';
        }
    }
    return os.str();
}

BenchResult run_bench(const ExperimentConfig& cfg, const BenchOptions& options,
                      const std::function<void(const BenchCell&)>& on_cell) {
    cfg.validate();
    if (options.lengths.empty() || options.batches.empty()) throw ConfigError("bench: empty grid");
    if (options.timed_epochs < 1) throw ConfigError("bench: need at least one timed epoch");
    if (options.n_trials < 2) throw ConfigError("bench: need at least two trials");

    const std::size_t max_len = *std::max_element(options.lengths.begin(), options.lengths.end());
    const Dataset full =
        generate_dataset(task_spec(cfg, Task::Target, Split::Train, max_len, (options.n_trials + 1) / 2));

    RngStream init_rng(splitmix64(cfg.master_seed ^ kPretrainSeedDomain));
    const ModelParams base = ModelParams::initialize(cfg.model, init_rng);

    BenchResult result;
    for (std::size_t L : options.lengths) {
        if (L < 1) throw ConfigError("bench: lengths must be >= 1");
        const Dataset data = crop_or_pad(full, L);
        ModelConfig model = cfg.model;
        model.max_seq_len = L;
        for (std::size_t batch : options.batches) {
            if (batch < 1) throw ConfigError("bench: batch sizes must be >= 1");
            BenchCell cell{L, batch, 0.0, 0.0, 0, 0};
            struct Runner {
                ModelParams params;
                AdaptationState state;
                AdamState adam;
                RngStream rng;
                std::vector<double> times;
            };
            TrainConfig train = cfg.adapt;
            train.batch_size = batch;
            std::vector<Runner> runners;
            for (const bool lora : {false, true}) {
                Runner r{base, {}, {}, RngStream(point_seed(cfg.master_seed, L * 1000 + batch)), {}};
                const AdaptationMethod method =
                    lora ? AdaptationMethod{cfg.lora} : AdaptationMethod{FullFinetuneMethod{}};
                r.state = instrument(r.params, model, method, r.rng);
                runners.push_back(std::move(r));
            }
            // Epochs of the two methods alternate so that slow spells of the
            // host affect both alike.
            for (auto& r : runners)
                for (std::size_t e = 0; e < options.warmup_epochs; ++e)
                    train_epoch(model, r.params, r.state, r.adam, data, train, r.rng);
            for (std::size_t e = 0; e < options.timed_epochs; ++e)
                for (auto& r : runners)
                    r.times.push_back(train_epoch(model, r.params, r.state, r.adam, data, train, r.rng).wall_ms);
            cell.finetune_ms = median(runners[0].times);
            cell.lora_ms = median(runners[1].times);
            cell.finetune_footprint = float_footprint(model, runners[0].params, runners[0].state, batch);
            cell.lora_footprint = float_footprint(model, runners[1].params, runners[1].state, batch);
            if (on_cell) on_cell(cell);
            result.cells.push_back(cell);
        }
    }
    return result;
}

Json to_json(const BenchResult& r) {
    Json cells = Json::array();
    for (const auto& c : r.cells) {
        cells.push_back(Json{{"length", c.length},
                             {"batch", c.batch},
                             {"finetune_ms", c.finetune_ms},
                             {"lora_ms", c.lora_ms},
                             {"finetune_footprint", c.finetune_footprint},
                             {"lora_footprint", c.lora_footprint}});
    }
    return Json{{"cells", std::move(cells)}};
}

std::string bench_csv(const BenchResult& r) {
    std::vector<std::size_t> lengths;
    std::vector<std::size_t> batches;
    for (const auto& c : r.cells) {
        if (std::find(lengths.begin(), lengths.end(), c.length) == lengths.end()) lengths.push_back(c.length);
        if (std::find(batches.begin(), batches.end(), c.batch) == batches.end()) batches.push_back(c.batch);
    }
    std::ostringstream os;
    os << "Length";
    for (std::size_t b : batches) os << ",Batch=" << b << " finetune,Batch=" << b << " LoRA";
    os << '\n';
    for (std::size_t L : lengths) {
        os << L;
        for (std::size_t b : batches) {
            const auto it = std::find_if(r.cells.begin(), r.cells.end(),
                                         [&](const BenchCell& c) { return c.length == L && c.batch == b; });
            if (it == r.cells.end()) {
                os << ",--,--";
            } else {
                os << ',' << format_fixed(it->finetune_ms / 1000.0, 4) << ',' << format_fixed(it->lora_ms / 1000.0, 4);
            }
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace lora_lab
