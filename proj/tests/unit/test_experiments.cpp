// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "lora_lab/errors.hpp"
#include "lora_lab/experiments.hpp"

using namespace lora_lab;

namespace {

ExperimentConfig tiny_experiment() {
    ExperimentConfig c;
    c.model.d_model = 8;
    c.model.n_heads = 2;
    c.model.n_layers = 1;
    c.model.d_ff = 16;
    c.model.max_seq_len = 8;
    c.data.train_per_class = 6;
    c.data.source_train_per_class = 8;
    c.data.dev_per_class = 3;
    c.data.eval_per_class = 5;
    c.data.seq_len = 6;
    c.pretrain.epochs = 2;
    c.adapt.epochs = 2;
    c.pretrain.batch_size = 4;
    c.adapt.batch_size = 4;
    c.master_seed = 17;
    return c;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

std::size_t line_count(const std::string& s) {
    std::size_t n = 0;
    for (char ch : s) n += ch == '\n';
    return n;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("experiment config round-trips and rejects unknown keys") {
    ExperimentConfig c = tiny_experiment();
    c.lora = LoRAConfig{.rank = 3, .alpha = 1.5, .targets = {Target::Q, Target::K}};
    c.adapter_bottleneck = 5;
    const Json j = to_json(c);
    const ExperimentConfig back = experiment_config_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(back.lora == c.lora);
    CHECK(back.data.source_train_per_class == 8);

    CHECK_THROWS_AS(experiment_config_from_json(Json{{"epochs", 3}}), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json(Json{{"data", {{"trials", 3}}}}), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json(Json{{"lora", {{"kind", "adapter"}, {"bottleneck", 4}}}}),
                    ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json(Json{{"master_seed", -1}}), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json(Json{{"data", {{"seq_len", 1}}}}), ConfigError);
}

TEST_CASE("defaults describe the desk-scale setting") {
    const ExperimentConfig c;
    CHECK(c.pretrain.learning_rate == TrainConfig::kDeskScaleLearningRate);
    CHECK(c.adapt.epochs == 20);
    CHECK(c.adapter().bottleneck == c.model.d_ff / 8);
    CHECK(c.data.train_per_class == 500);
    CHECK(c.data.eval_per_class == 500);
}

TEST_CASE("shipped default config spells out the built-in defaults") {
    std::ifstream f(std::string(LORA_LAB_SOURCE_DIR) + "/configs/default.json");
    REQUIRE(f.good());
    std::stringstream text;
    text << f.rdbuf();
    const ExperimentConfig parsed = experiment_config_from_json(parse_json_text(text.str()));
    CHECK(to_json(parsed) == to_json(ExperimentConfig{}));
}

TEST_CASE("point seeds are splitmix64 of master xor index") {
    CHECK(point_seed(0, 0) == 0xE220A8397B1DCDAFULL);
    CHECK(point_seed(5, 3) == point_seed(6, 0));
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 64; ++i) seen.insert(point_seed(2023, i));
    CHECK(seen.size() == 64);
}

TEST_CASE("task data uses distinct seeds per task and split") {
    const ExperimentConfig c = tiny_experiment();
    const auto s = task_spec(c, Task::Source, Split::Train, 6, 2);
    const auto t = task_spec(c, Task::Target, Split::Train, 6, 2);
    const auto sd = task_spec(c, Task::Source, Split::Dev, 6, 2);
    CHECK(s.seed != t.seed);
    CHECK(s.seed != sd.seed);
    CHECK(s.artifact_freq == DatasetSpec::kSourceArtifactFreq);
    CHECK(t.artifact_freq == DatasetSpec::kTargetArtifactFreq);

    const TaskData src = make_task_data(c, Task::Source, 6);
    const TaskData tgt = make_task_data(c, Task::Target, 6);
    CHECK(src.train.trials.size() == 16);
    CHECK(tgt.train.trials.size() == 12);
    CHECK(tgt.dev.trials.size() == 6);
    CHECK(tgt.eval.trials.size() == 10);

    ExperimentConfig no_dev = c;
    no_dev.data.dev_per_class = 0;
    CHECK(make_task_data(no_dev, Task::Target, 6).dev.trials.empty());

    const TaskData cropped = crop_task(tgt, 4);
    CHECK(cropped.train.seq_len() == 4);
    CHECK(cropped.eval.seq_len() == 4);
}

TEST_CASE("median") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}

TEST_CASE("float footprint: LoRA below finetune and linear in batch") {
    const ExperimentConfig c = tiny_experiment();
    for (std::size_t len : {4, 8}) {
        ModelConfig m = c.model;
        m.max_seq_len = len;
        RngStream rng(1);
        const ModelParams base = ModelParams::initialize(m, rng);
        ModelParams ft = base;
        ModelParams lo = base;
        AdaptationState ft_state = instrument(ft, m, FullFinetuneMethod{}, rng);
        AdaptationState lo_state = instrument(lo, m, LoRAConfig{.rank = 2}, rng);
        for (std::size_t b : {1, 2, 8}) {
            CHECK(float_footprint(m, lo, lo_state, b) < float_footprint(m, ft, ft_state, b));
        }
        const std::size_t f1 = float_footprint(m, ft, ft_state, 1);
        const std::size_t f2 = float_footprint(m, ft, ft_state, 2);
        CHECK(float_footprint(m, ft, ft_state, 5) == f1 + 4 * (f2 - f1));
        CHECK(f2 - f1 == activation_floats_per_example(m, ft_state));
        CHECK(f1 - (f2 - f1) == ft.scalar_count() + 3 * ft.trainable_scalar_count());
    }
}

TEST_CASE("method names and sweep axes") {
    const ExperimentConfig c = tiny_experiment();
    CHECK(method_kind(method_by_name(c, "lora")) == "lora");
    CHECK(std::get<AdapterConfig>(method_by_name(c, "adapter")).bottleneck == 2);
    CHECK_THROWS_AS(method_by_name(c, "prompt"), ConfigError);
    for (auto axis : {SweepAxis::Rank, SweepAxis::Targets, SweepAxis::Length, SweepAxis::Method})
        CHECK(parse_sweep_axis(axis_name(axis)) == axis);
    CHECK_THROWS_AS(parse_sweep_axis("depth"), ConfigError);
}

TEST_CASE("adaptation run reports counts and is reproducible") {
    const ExperimentConfig c = tiny_experiment();
    const TaskData src = make_task_data(c, Task::Source, 6);
    const TaskData tgt = make_task_data(c, Task::Target, 6);
    FitResult fit;
    const ModelParams base = pretrain_base(c, src, &fit);
    CHECK(fit.epochs.size() == 2);
    ModelConfig m = c.model;
    m.max_seq_len = 6;
    const LoRAConfig lora{.rank = 2};
    const RunReport a = run_adaptation(c, m, base, lora, tgt, 99);
    const RunReport b = run_adaptation(c, m, base, lora, tgt, 99);
    CHECK(a.eer == b.eer);
    CHECK(a.trainable_params == 18 + lora_param_formula(m, lora));
    CHECK(a.total_params == base.scalar_count() + lora_param_formula(m, lora));
    CHECK(a.descriptor == "lora(r=2,alpha=2,targets=q,v)");
    CHECK(a.eer >= 0.0);
    CHECK(a.eer <= 1.0);

    const RunReport back = run_report_from_json(to_json(a));
    CHECK(to_json(back) == to_json(a));
    CHECK_THROWS_AS(run_report_from_json(Json{{"method", 3}}), ParseError);
}

TEST_CASE("sweeps produce one ordered point per value and table-shaped CSV") {
    const ExperimentConfig c = tiny_experiment();

    SweepOptions opt;
    opt.ranks = {4, 1, 2};
    const SweepResult rank = run_sweep(SweepAxis::Rank, c, opt);
    REQUIRE(rank.points.size() == 3);
    CHECK(rank.points[0].value == "1");
    CHECK(rank.points[2].value == "4");
    for (std::size_t i = 1; i < rank.points.size(); ++i) {
        CHECK(rank.points[i].order > rank.points[i - 1].order);
        // Counts grow by n_layers * |targets| * 2 * d_model per unit of rank.
        const double dr = rank.points[i].order - rank.points[i - 1].order;
        CHECK(rank.points[i].report.trainable_params - rank.points[i - 1].report.trainable_params ==
              static_cast<std::size_t>(dr) * 1 * 2 * 2 * 8);
    }
    const std::string rank_csv = sweep_csv(rank);
    CHECK(first_line(rank_csv) == "r,#Parameters,EER%");
    CHECK(line_count(rank_csv) == 4);
    CHECK(to_json(sweep_result_from_json(to_json(rank))) == to_json(rank));

    opt.ranks = {2, 2};
    CHECK_THROWS_AS(run_sweep(SweepAxis::Rank, c, opt), ConfigError);

    opt.lengths = {4, 8};
    const SweepResult len = run_sweep(SweepAxis::Length, c, opt);
    REQUIRE(len.points.size() == 2);
    CHECK(first_line(sweep_csv(len)) == "Length,Train Time(s),EER%");

    opt.targets = {TargetSet{Target::Q}, TargetSet{Target::Q, Target::V}};
    const SweepResult tg = run_sweep(SweepAxis::Targets, c, opt);
    REQUIRE(tg.points.size() == 2);
    const std::string tg_csv = sweep_csv(tg);
    CHECK(first_line(tg_csv) == "Weight Type,r=2,#Parameters");
    CHECK(tg_csv.find("\"W_q W_v\"") != std::string::npos);

    opt.methods = {"lora", "fixed"};
    const SweepResult me = run_sweep(SweepAxis::Method, c, opt);
    REQUIRE(me.points.size() == 2);
    CHECK(me.points[0].value == "fixed");
    CHECK(first_line(sweep_csv(me)) == "Methods,Train Time(s),#Parameters,EER%");
}

TEST_CASE("bench grid covers every cell") {
    const ExperimentConfig c = tiny_experiment();
    BenchOptions opt;
    opt.lengths = {4, 6};
    opt.batches = {2, 4};
    opt.n_trials = 8;
    opt.timed_epochs = 1;
    std::size_t seen = 0;
    const BenchResult r = run_bench(c, opt, [&](const BenchCell&) { ++seen; });
    CHECK(seen == 4);
    REQUIRE(r.cells.size() == 4);
    for (const auto& cell : r.cells) {
        CHECK(cell.lora_footprint < cell.finetune_footprint);
        CHECK(cell.finetune_ms > 0.0);
        CHECK(cell.lora_ms > 0.0);
    }
    const std::string csv = bench_csv(r);
    CHECK(first_line(csv) == "Length,Batch=2 finetune,Batch=2 LoRA,Batch=4 finetune,Batch=4 LoRA");
    CHECK(line_count(csv) == 3);
}

}  // TEST_SUITE
