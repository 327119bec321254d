// SPDX-License-Identifier: Apache-2.0

#include "lora_lab_cli/cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "lora_lab/checkpoint.hpp"
#include "lora_lab/errors.hpp"
#include "lora_lab/evaluation.hpp"
#include "lora_lab/experiments.hpp"
#include "lora_lab/model.hpp"
#include "lora_lab/serialization.hpp"
#include "lora_lab/synthdata.hpp"
#include "lora_lab/training.hpp"

namespace lora_lab::cli {

namespace {

namespace fs = std::filesystem;

struct Outputs {
    std::string report;
    std::string log;
};

struct MethodFlags {
    std::string method;
    std::optional<std::size_t> rank;
    std::optional<double> alpha;
    std::optional<std::string> targets;
    std::optional<std::size_t> bottleneck;
};

void add_method_flags(CLI::App* cmd, MethodFlags& f, const std::string& default_method) {
    f.method = default_method;
    cmd->add_option("--method", f.method, "fixed | finetune | adapter | lora")
        ->check(CLI::IsMember({"fixed", "finetune", "adapter", "lora"}))
        ->capture_default_str();
    cmd->add_option("--rank", f.rank, "LoRA rank r");
    cmd->add_option("--alpha", f.alpha, "LoRA alpha (default: r)");
    cmd->add_option("--targets", f.targets, "LoRA target weights, e.g. q,v");
    cmd->add_option("--bottleneck", f.bottleneck, "adapter bottleneck width");
}

AdaptationMethod resolve_method(const ExperimentConfig& cfg, const MethodFlags& f) {
    const bool lora_flags = f.rank || f.alpha || f.targets;
    if (lora_flags && f.method != "lora") {
        throw ConfigError("--rank, --alpha and --targets only apply to --method lora");
    }
    if (f.bottleneck && f.method != "adapter") {
        throw ConfigError("--bottleneck only applies to --method adapter");
    }
    if (f.method == "lora") {
        LoRAConfig l = cfg.lora;
        if (f.rank) {
            l.rank = *f.rank;
            if (!f.alpha) l.alpha.reset();
        }
        if (f.alpha) l.alpha = *f.alpha;
        if (f.targets) l.targets = TargetSet::parse(*f.targets);
        return l;
    }
    if (f.method == "adapter") {
        return f.bottleneck ? AdapterConfig{*f.bottleneck} : cfg.adapter();
    }
    return method_by_name(cfg, f.method);
}

std::string read_text(const fs::path& path) {
    const auto bytes = read_bytes(path);
    return {bytes.begin(), bytes.end()};
}

ExperimentConfig load_config(const std::string& path) {
    if (path.empty()) return ExperimentConfig{};
    try {
        return experiment_config_from_json(parse_json_text(read_text(path)));
    } catch (const ParseError& e) {
        throw ParseError(path, e);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    write_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

/// Appends one JSON object per line.
class RunLog {
public:
    explicit RunLog(const std::string& path) {
        if (path.empty()) return;
        file_.open(path, std::ios::app);
        if (!file_) throw ConfigError("cannot open run log for appending: " + path);
    }

    void write(const Json& record) {
        if (!file_.is_open()) return;
        file_ << record.dump() << '\n';
        file_.flush();
    }

    EpochCallback epoch_sink(std::string command) {
        return [this, command = std::move(command)](const std::string& phase, const EpochStats& s) {
            Json rec{{"command", command}, {"phase", phase}};
            rec.update(to_json(s));
            write(rec);
        };
    }

private:
    std::ofstream file_;
};

void emit(std::ostream& out, const Json& report, const Outputs& o) {
    const std::string text = report.dump(2) + "\n";
    out << text;
    if (!o.report.empty()) write_text(o.report, text);
}

Json epochs_json(const FitResult& fit) {
    Json a = Json::array();
    for (const auto& e : fit.epochs) a.push_back(to_json(e));
    return a;
}

// --- subcommands -----------------------------------------------------------

struct GenDataArgs {
    std::string config;
    std::string out;
    std::string task = "source";
    std::string split = "train";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n_per_class;
    std::optional<std::size_t> seq_len;
};

int gen_data(const GenDataArgs& a, const Outputs& o, std::ostream& out) {
    const ExperimentConfig cfg = load_config(a.config);
    const Task task = a.task == "target" ? Task::Target : Task::Source;
    const Split split = parse_split(a.split);
    DatasetSpec spec = task_spec(cfg, task, split, a.seq_len.value_or(cfg.data.seq_len),
                                 a.n_per_class.value_or(split == Split::Train   ? train_per_class(cfg, task)
                                                        : split == Split::Dev   ? cfg.data.dev_per_class
                                                                                : cfg.data.eval_per_class));
    if (a.seed) spec.seed = *a.seed;
    const Dataset data = generate_dataset(spec);
    write_dataset(a.out, data);
    emit(out,
         Json{{"command", "gen-data"},
              {"out", a.out},
              {"n_trials", data.trials.size()},
              {"seq_len", data.seq_len()},
              {"feat_dim", data.feat_dim()},
              {"spec", to_json(spec)}},
         o);
    return kExitOk;
}

struct PretrainArgs {
    std::string config;
    std::string out;
};

int pretrain(const PretrainArgs& a, const Outputs& o, std::ostream& out) {
    const ExperimentConfig cfg = load_config(a.config);
    RunLog log(o.log);
    const TaskData source = make_task_data(cfg, Task::Source, cfg.data.seq_len);
    FitResult fit;
    const ModelParams base = pretrain_base(cfg, source, &fit, log.epoch_sink("pretrain"));
    ModelConfig model = cfg.model;
    model.max_seq_len = cfg.data.seq_len;
    AdaptationState none;
    const EERResult eer = compute_eer(score_dataset(model, base, none, source.eval));
    save_base_checkpoint(a.out, model, base);
    Json report{{"command", "pretrain"},
                {"checkpoint", a.out},
                {"source_eval_eer", eer.eer},
                {"best_epoch", fit.best_epoch},
                {"best_dev_eer", fit.best_dev_eer},
                {"total_params", base.scalar_count()},
                {"epochs", epochs_json(fit)},
                {"config", to_json(cfg)}};
    log.write(Json{{"command", "pretrain"}, {"phase", "done"}, {"source_eval_eer", eer.eer}});
    emit(out, report, o);
    return kExitOk;
}

struct AdaptArgs {
    std::string config;
    std::string base;
    std::string out;
    std::string scores;
    std::optional<std::uint64_t> seed;
    MethodFlags method;
};

int adapt(const AdaptArgs& a, const Outputs& o, std::ostream& out) {
    const ExperimentConfig cfg = load_config(a.config);
    const AdaptationMethod method = resolve_method(cfg, a.method);
    RunLog log(o.log);
    BaseCheckpoint base = load_base_checkpoint(a.base);
    ModelConfig model = base.config;
    model.max_seq_len = cfg.data.seq_len;
    if (model.d_model != cfg.model.d_model || model.n_layers != cfg.model.n_layers ||
        model.n_heads != cfg.model.n_heads || model.d_ff != cfg.model.d_ff) {
        throw ConfigError(a.base + ": checkpoint geometry does not match the config's model section");
    }
    const TaskData target = make_task_data(cfg, Task::Target, cfg.data.seq_len);
    AdaptArtifacts artifacts;
    const RunReport report = run_adaptation(cfg, model, base.params, method, target,
                                            a.seed.value_or(point_seed(cfg.master_seed, 0)),
                                            &artifacts, log.epoch_sink("adapt"));
    if (!a.out.empty()) save_adaptation_delta(a.out, model, artifacts.params, artifacts.state);
    if (!a.scores.empty()) write_scores(a.scores, artifacts.eval_scores);
    log.write(Json{{"command", "adapt"}, {"phase", "done"}, {"report", to_json(report)}});
    emit(out, to_json(report), o);
    return kExitOk;
}

struct EvaluateArgs {
    std::string scores;
    std::string base;
    std::string delta;
    std::string data;
    std::string scores_out;
};

int evaluate(const EvaluateArgs& a, const Outputs& o, std::ostream& out) {
    std::vector<TrialScore> scores;
    if (!a.scores.empty()) {
        if (!a.base.empty() || !a.data.empty()) {
            throw ConfigError("evaluate: give either --scores or --base/--data, not both");
        }
        scores = read_scores(a.scores);
    } else {
        if (a.base.empty() || a.data.empty()) {
            throw ConfigError("evaluate: need --scores, or --base and --data (with optional --delta)");
        }
        const Dataset data = read_dataset(a.data);
        if (a.delta.empty()) {
            BaseCheckpoint base = load_base_checkpoint(a.base);
            base.config.max_seq_len = data.seq_len();
            scores = score_dataset(base.config, base.params, AdaptationState{}, data);
        } else {
            AdaptedModel m = load_adapted_model(a.base, a.delta);
            m.config.max_seq_len = data.seq_len();
            scores = score_dataset(m.config, m.params, m.state, data);
        }
        if (!a.scores_out.empty()) write_scores(a.scores_out, scores);
    }
    emit(out, parse_json_text(eer_report_json(compute_eer(scores))), o);
    return kExitOk;
}

struct GradCheckArgs {
    std::uint64_t seed = 1;
    double tolerance = 1e-4;
    MethodFlags method;
};

int grad_check_cmd(const GradCheckArgs& a, const Outputs& o, std::ostream& out) {
    ExperimentConfig cfg;
    cfg.model = grad_check_config();
    const AdaptationMethod method = resolve_method(cfg, a.method);
    const GradCheckReport report = grad_check(cfg.model, method, a.seed);
    Json j{{"command", "grad-check"},
           {"method", to_json(method)},
           {"config", to_json(cfg.model)},
           {"tolerance", a.tolerance},
           {"passed", report.max_rel_error <= a.tolerance}};
    j.update(to_json(report));
    emit(out, j, o);
    return report.max_rel_error <= a.tolerance ? kExitOk : kExitRuntime;
}

struct CountArgs {
    std::string config;
    MethodFlags method;
};

int count_params_cmd(const CountArgs& a, const Outputs& o, std::ostream& out) {
    const ExperimentConfig cfg = load_config(a.config);
    const AdaptationMethod method = resolve_method(cfg, a.method);
    RngStream rng(cfg.master_seed);
    ModelParams params = ModelParams::initialize(cfg.model, rng);
    const AdaptationState state = instrument(params, cfg.model, method, rng);
    Json j{{"command", "count-params"}, {"method", to_json(method)}};
    j.update(to_json(count_params(params, state)));
    emit(out, j, o);
    return kExitOk;
}

std::vector<std::string> split_list(const std::string& text, char sep) {
    std::vector<std::string> items;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, sep);) {
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

std::size_t parse_count(const std::string& s, const std::string& what) {
    std::size_t pos = 0;
    std::size_t v = 0;
    try {
        v = std::stoul(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != s.size() || s.empty() || s[0] == '-') {
        throw ConfigError("invalid " + what + " value '" + s + "'");
    }
    return v;
}

struct SweepArgs {
    std::string config;
    std::string axis;
    std::string values;
    std::string csv;
};

int sweep_cmd(const SweepArgs& a, const Outputs& o, std::ostream& out) {
    const SweepAxis axis = parse_sweep_axis(a.axis);
    const ExperimentConfig cfg = load_config(a.config);
    SweepOptions options;
    if (!a.values.empty()) {
        switch (axis) {
            case SweepAxis::Rank:
                options.ranks.clear();
                for (const auto& v : split_list(a.values, ',')) options.ranks.push_back(parse_count(v, "rank"));
                break;
            case SweepAxis::Length:
                options.lengths.clear();
                for (const auto& v : split_list(a.values, ',')) options.lengths.push_back(parse_count(v, "length"));
                break;
            case SweepAxis::Targets:
                options.targets.clear();
                for (const auto& v : split_list(a.values, ';')) options.targets.push_back(TargetSet::parse(v));
                break;
            case SweepAxis::Method:
                options.methods = split_list(a.values, ',');
                break;
        }
    }
    RunLog log(o.log);
    const SweepResult result = run_sweep(axis, cfg, options, [&](const SweepPoint& p) {
        log.write(Json{{"command", "sweep"}, {"axis", a.axis}, {"value", p.value}, {"report", to_json(p.report)}});
    });
    if (!a.csv.empty()) write_text(a.csv, sweep_csv(result));
    emit(out, to_json(result), o);
    return kExitOk;
}

struct BenchArgs {
    std::string config;
    std::vector<std::size_t> lengths;
    std::vector<std::size_t> batches;
    std::optional<std::size_t> n_trials;
    std::string csv;
};

int bench_cmd(const BenchArgs& a, const Outputs& o, std::ostream& out) {
    const ExperimentConfig cfg = load_config(a.config);
    BenchOptions options;
    if (!a.lengths.empty()) options.lengths = a.lengths;
    if (!a.batches.empty()) options.batches = a.batches;
    if (a.n_trials) options.n_trials = *a.n_trials;
    RunLog log(o.log);
    const BenchResult result = run_bench(cfg, options, [&](const BenchCell& c) {
        log.write(Json{{"command", "bench"},
                       {"length", c.length},
                       {"batch", c.batch},
                       {"finetune_ms", c.finetune_ms},
                       {"lora_ms", c.lora_ms}});
    });
    if (!a.csv.empty()) write_text(a.csv, bench_csv(result));
    emit(out, to_json(result), o);
    return kExitOk;
}

void add_outputs(CLI::App* cmd, Outputs& o) {
    cmd->add_option("--report", o.report, "also write the JSON report to this file");
    cmd->add_option("--log", o.log, "append JSON-lines progress records to this file");
}

}  // namespace

void configure_allocator() {
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    mallopt(M_TOP_PAD, 256 << 20);
#endif
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"LoRA adaptation lab for synthetic spoof detection", "lora_lab"};
    app.require_subcommand(1);
    Outputs outputs;

    GenDataArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic dataset file");
    gen_cmd->add_option("--config", gen.config, "experiment config JSON");
    gen_cmd->add_option("--out", gen.out, "output dataset file")->required();
    gen_cmd->add_option("--task", gen.task, "source | target")
        ->check(CLI::IsMember({"source", "target"}))
        ->capture_default_str();
    gen_cmd->add_option("--split", gen.split, "train | dev | eval")
        ->check(CLI::IsMember({"train", "dev", "eval"}))
        ->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "RNG seed (default: derived from the master seed)");
    gen_cmd->add_option("--n-per-class", gen.n_per_class, "trials per class");
    gen_cmd->add_option("--seq-len", gen.seq_len, "frames per trial");
    add_outputs(gen_cmd, outputs);

    PretrainArgs pre;
    auto* pre_cmd = app.add_subcommand("pretrain", "train a base model on the source task");
    pre_cmd->add_option("--config", pre.config, "experiment config JSON");
    pre_cmd->add_option("--out", pre.out, "output base checkpoint")->required();
    add_outputs(pre_cmd, outputs);

    AdaptArgs ad;
    auto* adapt_cmd = app.add_subcommand("adapt", "adapt a base checkpoint to the target task");
    adapt_cmd->add_option("--config", ad.config, "experiment config JSON");
    adapt_cmd->add_option("--base", ad.base, "base checkpoint from `pretrain`")->required();
    adapt_cmd->add_option("--out", ad.out, "output adaptation delta checkpoint");
    adapt_cmd->add_option("--scores", ad.scores, "write target eval scores to this file");
    adapt_cmd->add_option("--seed", ad.seed, "adaptation seed");
    add_method_flags(adapt_cmd, ad.method, "lora");
    add_outputs(adapt_cmd, outputs);

    EvaluateArgs ev;
    auto* eval_cmd = app.add_subcommand("evaluate", "compute the EER of a score file or a model");
    eval_cmd->add_option("--scores", ev.scores, "score file (trial_id,label,score)");
    eval_cmd->add_option("--base", ev.base, "base checkpoint");
    eval_cmd->add_option("--delta", ev.delta, "adaptation delta checkpoint");
    eval_cmd->add_option("--data", ev.data, "dataset file to score");
    eval_cmd->add_option("--scores-out", ev.scores_out, "write computed scores to this file");
    add_outputs(eval_cmd, outputs);

    GradCheckArgs gc;
    auto* gc_cmd = app.add_subcommand("grad-check", "compare analytic and numerical gradients");
    gc_cmd->add_option("--seed", gc.seed, "RNG seed")->capture_default_str();
    gc_cmd->add_option("--tol", gc.tolerance, "maximum relative error")->capture_default_str();
    add_method_flags(gc_cmd, gc.method, "lora");
    add_outputs(gc_cmd, outputs);

    CountArgs cp;
    auto* cp_cmd = app.add_subcommand("count-params", "count trainable and total parameters");
    cp_cmd->add_option("--config", cp.config, "experiment config JSON");
    add_method_flags(cp_cmd, cp.method, "lora");
    add_outputs(cp_cmd, outputs);

    SweepArgs sw;
    auto* sweep_cmd_app = app.add_subcommand("sweep", "adapt and evaluate along one axis");
    sweep_cmd_app->add_option("--axis", sw.axis, "rank | targets | length | method")->required();
    sweep_cmd_app->add_option("--config", sw.config, "experiment config JSON");
    sweep_cmd_app->add_option("--values", sw.values,
                              "axis values, comma separated (target sets separated by ';')");
    sweep_cmd_app->add_option("--csv", sw.csv, "write the table CSV to this file");
    add_outputs(sweep_cmd_app, outputs);

    BenchArgs bn;
    auto* bench_cmd_app = app.add_subcommand("bench", "time training epochs over a length x batch grid");
    bench_cmd_app->add_option("--config", bn.config, "experiment config JSON");
    bench_cmd_app->add_option("--lengths", bn.lengths, "sequence lengths")->delimiter(',');
    bench_cmd_app->add_option("--batches", bn.batches, "batch sizes")->delimiter(',');
    bench_cmd_app->add_option("--n-trials", bn.n_trials, "trials per timed epoch");
    bench_cmd_app->add_option("--csv", bn.csv, "write the grid CSV to this file");
    add_outputs(bench_cmd_app, outputs);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (gen_cmd->parsed()) return gen_data(gen, outputs, out);
        if (pre_cmd->parsed()) return pretrain(pre, outputs, out);
        if (adapt_cmd->parsed()) return adapt(ad, outputs, out);
        if (eval_cmd->parsed()) return evaluate(ev, outputs, out);
        if (gc_cmd->parsed()) return grad_check_cmd(gc, outputs, out);
        if (cp_cmd->parsed()) return count_params_cmd(cp, outputs, out);
        if (sweep_cmd_app->parsed()) return sweep_cmd(sw, outputs, out);
        if (bench_cmd_app->parsed()) return bench_cmd(bn, outputs, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "invalid input: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitConfig;
}

}  // namespace lora_lab::cli
