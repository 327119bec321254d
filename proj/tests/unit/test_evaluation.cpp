// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>

#include "lora_lab/errors.hpp"
#include "lora_lab/evaluation.hpp"
#include "lora_lab/numerics.hpp"
#include "oracles.hpp"

using namespace lora_lab;

namespace {

std::vector<TrialScore> make(const std::vector<double>& genuine, const std::vector<double>& spoof) {
    std::vector<TrialScore> s;
    for (std::size_t i = 0; i < genuine.size(); ++i) s.push_back({"g" + std::to_string(i), Label::Genuine, genuine[i]});
    for (std::size_t i = 0; i < spoof.size(); ++i) s.push_back({"s" + std::to_string(i), Label::Spoof, spoof[i]});
    return s;
}

std::vector<TrialScore> random_scores(RngStream& rng, bool coarse) {
    const std::size_t ng = 1 + rng.below(30);
    const std::size_t ns = 1 + rng.below(30);
    const double shift = rng.gaussian();
    std::vector<double> g(ng), s(ns);
    // Coarse scores are rounded to a small grid, so ties within and across
    // classes are common.
    auto draw = [&](double mu) {
        const double x = mu + rng.gaussian();
        return coarse ? std::round(4.0 * x) / 4.0 : x;
    };
    for (double& v : g) v = draw(shift);
    for (double& v : s) v = draw(0.0);
    return make(g, s);
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("hand cases") {
    const auto six = make({0.9, 0.6, 0.4}, {0.1, 0.5, 0.7});
    const EERResult r = compute_eer(six);
    CHECK(r.eer == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(r.threshold > 0.5);
    CHECK(r.threshold < 0.6);
    CHECK(r.n_genuine == 3);
    CHECK(r.n_spoof == 3);

    CHECK(compute_eer(make({2, 3}, {0, 1})).eer == 0.0);
    CHECK(compute_eer(make({0, 1}, {2, 3})).eer == 1.0);
    CHECK(compute_eer(make({1, 2, 3}, {1, 2, 3})).eer == 0.5);
    CHECK(compute_eer(make({5}, {5})).eer == 0.5);
}

TEST_CASE("rates at a threshold use strict comparisons") {
    const auto s = make({1, 2}, {1, 3});
    const ErrorRates at1 = far_frr_at(s, 1.0);
    CHECK(at1.p_fa == 0.5);
    CHECK(at1.p_miss == 0.0);
    const ErrorRates at2 = far_frr_at(s, 2.5);
    CHECK(at2.p_fa == 0.5);
    CHECK(at2.p_miss == 1.0);
}

TEST_CASE("one-class score sets are domain errors") {
    CHECK_THROWS_AS(compute_eer(make({1, 2}, {})), DomainError);
    CHECK_THROWS_AS(compute_eer(make({}, {1})), DomainError);
    CHECK_THROWS_AS(far_frr_at(make({1}, {}), 0.0), DomainError);
}

TEST_CASE("candidate thresholds are midpoints plus both ends") {
    const auto c = eer_candidate_thresholds(make({1, 3}, {3, 2}));
    CHECK(c == std::vector<double>{0.0, 1.5, 2.5, 4.0});
}

TEST_CASE("compute_eer matches brute force on random score sets") {
    RngStream rng(123);
    for (int i = 0; i < 400; ++i) {
        const auto s = random_scores(rng, i % 2 == 0);
        CHECK(std::abs(compute_eer(s).eer - oracle::brute_force_eer(s)) <= 1e-12);
    }
}

TEST_CASE("EER is invariant under strictly increasing score maps") {
    RngStream rng(77);
    for (int i = 0; i < 100; ++i) {
        auto s = random_scores(rng, i % 3 == 0);
        const double before = compute_eer(s).eer;
        for (auto& t : s) t.score = std::exp(0.5 * t.score) + 3.0;
        CHECK(compute_eer(s).eer == doctest::Approx(before).epsilon(1e-12));
    }
}

TEST_CASE("negating scores and swapping labels preserves EER") {
    RngStream rng(8);
    for (int i = 0; i < 100; ++i) {
        auto s = random_scores(rng, i % 2 == 1);
        const double before = compute_eer(s).eer;
        for (auto& t : s) {
            t.score = -t.score;
            t.label = t.label == Label::Genuine ? Label::Spoof : Label::Genuine;
        }
        CHECK(compute_eer(s).eer == doctest::Approx(before).epsilon(1e-12));
    }
}

TEST_CASE("EER lies in [0, 1] and equals the rates at the reported threshold when they cross exactly") {
    RngStream rng(5);
    for (int i = 0; i < 200; ++i) {
        const auto s = random_scores(rng, true);
        const EERResult r = compute_eer(s);
        CHECK(r.eer >= 0.0);
        CHECK(r.eer <= 1.0);
        const ErrorRates e = far_frr_at(s, r.threshold);
        if (e.p_fa == e.p_miss) CHECK(r.eer == e.p_fa);
    }
}

TEST_CASE("labels parse and print") {
    CHECK(parse_label("genuine") == Label::Genuine);
    CHECK(parse_label("spoof") == Label::Spoof);
    CHECK(label_name(Label::Spoof) == "spoof");
    CHECK_THROWS_AS(parse_label("maybe"), ParseError);
}

TEST_CASE("score files round-trip exactly") {
    RngStream rng(4);
    auto s = random_scores(rng, false);
    s.push_back({"tiny", Label::Spoof, 1e-300});
    s.push_back({"third", Label::Genuine, 1.0 / 3.0});
    const std::string text = format_scores(s);
    CHECK(parse_scores(text) == s);
    CHECK(format_scores(parse_scores(text)) == text);

    const auto path = std::filesystem::temp_directory_path() / "lora_lab_scores_test.csv";
    write_scores(path, s);
    CHECK(read_scores(path) == s);
    std::filesystem::remove(path);
}

TEST_CASE("malformed score files report the line") {
    const auto expect_line = [](std::string_view text, std::size_t line) {
        try {
            parse_scores(text);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line() == line);
        }
    };
    expect_line("a,genuine,1\nb,spoof\n", 2);
    expect_line("a,genuine,1\n\nb,other,2\n", 3);
    expect_line("a,genuine,nan\n", 1);
    expect_line("a,genuine,1x\n", 1);
    expect_line(",spoof,1\n", 1);
    expect_line("a,spoof,1,2\n", 1);
    CHECK_THROWS_AS(read_scores("/nonexistent/scores.csv"), ConfigError);
}

TEST_CASE("report JSON carries the EER fields") {
    const std::string j = eer_report_json(compute_eer(make({0.9, 0.6, 0.4}, {0.1, 0.5, 0.7})));
    CHECK(j.find("\"eer\": 0.333333333333333") != std::string::npos);
    CHECK(j.find("\"n_genuine\": 3") != std::string::npos);
}

}  // TEST_SUITE
