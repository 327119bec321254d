// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "lora_lab/errors.hpp"
#include "lora_lab/evaluation.hpp"
#include "lora_lab/synthdata.hpp"
#include "lora_lab/training.hpp"

using namespace lora_lab;

namespace {

DatasetSpec small_spec() {
    DatasetSpec s;
    s.n_per_class = 6;
    s.seq_len = 10;
    s.feat_dim = 8;
    s.seed = 99;
    return s;
}

void expect_parse_error(const std::vector<std::uint8_t>& bytes) {
    CHECK_THROWS_AS(decode_dataset(bytes), ParseError);
}

double mean_score_eer(const Dataset& d, std::size_t dims) {
    std::vector<TrialScore> scores;
    for (const auto& t : d.trials) {
        double s = 0.0;
        for (std::size_t f = 0; f < t.features.rows(); ++f)
            for (std::size_t j = 0; j < dims; ++j) s += t.features(f, j) * t.features(f, j);
        scores.push_back({t.id, t.label, -s});
    }
    return compute_eer(scores).eer;
}

}  // namespace

TEST_SUITE("synthdata") {

TEST_CASE("noise-free trials follow the closed form") {
    DatasetSpec s = small_spec();
    s.noise_sigma = 0.0;
    s.artifact_amp = 0.5;
    s.artifact_freq = 3.0;
    s.base_freq = 2.0;
    const Dataset d = generate_dataset(s);
    const double two_pi = 2.0 * std::numbers::pi;
    for (const auto& t : d.trials) {
        for (std::size_t f = 0; f < s.seq_len; ++f) {
            for (std::size_t j = 0; j < s.feat_dim; ++j) {
                double x = std::sin(two_pi * 2.0 * f / 10.0 + two_pi * j / 8.0);
                if (t.label == Label::Spoof && j < 2) x += 0.5 * std::sin(two_pi * 3.0 * f / 10.0);
                CHECK(t.features(f, j) == static_cast<double>(static_cast<float>(x)));
            }
        }
    }
}

TEST_CASE("trials interleave genuine and spoof with split-prefixed ids") {
    DatasetSpec s = small_spec();
    s.split = Split::Dev;
    const Dataset d = generate_dataset(s);
    REQUIRE(d.trials.size() == 12);
    for (std::size_t i = 0; i < d.trials.size(); ++i) {
        CHECK(d.trials[i].label == (i % 2 == 0 ? Label::Genuine : Label::Spoof));
    }
    CHECK(d.trials[0].id == "dev_00000");
    CHECK(d.trials[11].id == "dev_00011");
    CHECK(d.count(Label::Spoof) == 6);
    CHECK(d.seq_len() == 10);
    CHECK(d.feat_dim() == 8);
}

TEST_CASE("generation is a pure function of the spec") {
    const Dataset a = generate_dataset(small_spec());
    const Dataset b = generate_dataset(small_spec());
    CHECK(encode_dataset(a) == encode_dataset(b));
    DatasetSpec other = small_spec();
    other.seed = 100;
    CHECK(encode_dataset(generate_dataset(other)) != encode_dataset(a));
}

TEST_CASE("spec validation") {
    DatasetSpec s = small_spec();
    s.seq_len = 1;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = small_spec();
    s.noise_sigma = -1;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = small_spec();
    s.artifact_dims = 9;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = small_spec();
    s.n_per_class = 0;
    CHECK_THROWS_AS(generate_dataset(s), ConfigError);
    CHECK(parse_split("eval") == Split::Eval);
    CHECK(split_name(Split::Train) == "train");
    CHECK_THROWS_AS(parse_split("test"), ConfigError);
}

TEST_CASE("crop keeps the last frames and pad appends zero frames") {
    const Matrix seq{{1, 1}, {2, 2}, {3, 3}};
    CHECK(crop_or_pad(seq, 2) == Matrix{{2, 2}, {3, 3}});
    CHECK(crop_or_pad(seq, 3) == seq);
    CHECK(crop_or_pad(seq, 5) == Matrix{{1, 1}, {2, 2}, {3, 3}, {0, 0}, {0, 0}});
    CHECK_THROWS_AS(crop_or_pad(seq, 0), ConfigError);
    const Dataset d = crop_or_pad(generate_dataset(small_spec()), 4);
    CHECK(d.seq_len() == 4);
    CHECK(d.trials.size() == 12);
}

TEST_CASE("dataset files round-trip byte-identically") {
    const Dataset d = generate_dataset(small_spec());
    const auto bytes = encode_dataset(d);
    CHECK(bytes.size() == 4 + 4 * 4 + 12 * (2 + 11 + 1 + 10 * 8 * 4));
    const Dataset back = decode_dataset(bytes);
    CHECK(encode_dataset(back) == bytes);
    for (std::size_t i = 0; i < d.trials.size(); ++i) {
        CHECK(back.trials[i].id == d.trials[i].id);
        CHECK(back.trials[i].label == d.trials[i].label);
        CHECK(back.trials[i].features == d.trials[i].features);
    }
    const auto path = std::filesystem::temp_directory_path() / "lora_lab_dataset_test.lads";
    write_dataset(path, d);
    CHECK(encode_dataset(read_dataset(path)) == bytes);
    std::filesystem::remove(path);
}

TEST_CASE("malformed dataset bytes are parse errors") {
    const auto good = encode_dataset(generate_dataset(small_spec()));
    auto bad_magic = good;
    bad_magic[0] = 'X';
    expect_parse_error(bad_magic);
    auto bad_version = good;
    bad_version[4] = 2;
    expect_parse_error(bad_version);
    expect_parse_error(std::vector<std::uint8_t>(good.begin(), good.end() - 3));
    expect_parse_error(std::vector<std::uint8_t>(good.begin(), good.begin() + 10));
    auto trailing = good;
    trailing.push_back(0);
    expect_parse_error(trailing);
    auto bad_label = good;
    bad_label[4 + 16 + 2 + 11] = 7;  // label byte of the first trial
    expect_parse_error(bad_label);
    CHECK_THROWS_AS(read_dataset("/nonexistent/x.lads"), ConfigError);
}

TEST_CASE("zero artifact amplitude makes the classes indistinguishable") {
    DatasetSpec s;
    s.n_per_class = 500;
    s.seq_len = 16;
    s.feat_dim = 16;
    s.artifact_amp = 0.0;
    s.seed = 4;
    CHECK(std::abs(mean_score_eer(generate_dataset(s), 4) - 0.5) <= 0.1);
    s.artifact_amp = 1.0;
    CHECK(mean_score_eer(generate_dataset(s), 4) < 0.2);
}

TEST_CASE("larger artifacts give a trained model lower eval EER") {
    ModelConfig cfg;
    cfg.d_model = 16;
    cfg.n_heads = 2;
    cfg.n_layers = 1;
    cfg.d_ff = 32;
    cfg.max_seq_len = 16;
    TrainConfig tc;
    tc.learning_rate = 3e-3;
    tc.epochs = 6;
    double prev = 1.0;
    for (double amp : {0.2, 0.6, 1.0}) {
        DatasetSpec s;
        s.n_per_class = 150;
        s.seq_len = 16;
        s.feat_dim = 16;
        s.artifact_amp = amp;
        s.seed = 21;
        const Dataset train = generate_dataset(s);
        s.seed = 22;
        s.split = Split::Eval;
        const Dataset eval = generate_dataset(s);
        RngStream rng(5);
        ModelParams p = ModelParams::initialize(cfg, rng);
        AdaptationState st = instrument(p, cfg, FullFinetuneMethod{}, rng);
        fit(cfg, p, st, train, nullptr, tc);
        const double eer = compute_eer(score_dataset(cfg, p, st, eval)).eer;
        INFO("amp=" << amp << " eer=" << eer);
        CHECK(eer <= prev + 0.02);
        prev = eer;
    }
}

}  // TEST_SUITE
