// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "alignrank/metrics.hpp"

using namespace alignrank;
using namespace alignrank::metrics;

namespace {

RankedList list_of(const std::string& pattern) {
    RankedList l{"t", "ref", rank::RankingSource::embedding_model, "m", {}};
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        l.entries.push_back({std::string(1, pattern[i]) + std::to_string(i),
                             static_cast<double>(pattern.size() - i)});
    }
    return l;
}

LabelMap labels_for(const std::string& pattern) {
    LabelMap m;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        m[std::string(1, pattern[i]) + std::to_string(i)] =
            pattern[i] == 'A' ? Label::accepted : Label::rejected;
    }
    return m;
}

double brute_force(const std::string& pattern) {
    std::size_t good = 0, total = 0;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        for (std::size_t j = 0; j < pattern.size(); ++j) {
            if (pattern[i] == 'A' && pattern[j] == 'R') {
                ++total;
                if (i < j) ++good;
            }
        }
    }
    return static_cast<double>(good) / static_cast<double>(total);
}

MetricRow row(std::string model, std::string topic, double acc, double p3 = 0.5, double p5 = 0.4) {
    MetricRow r;
    r.model_id = std::move(model);
    r.topic_id = std::move(topic);
    r.domain = "d";
    r.accuracy = acc;
    r.precision_at = {{3, p3}, {5, p5}};
    r.pair_count = 4;
    r.reference_count = 1;
    return r;
}

}  // namespace

TEST_CASE("pairwise accuracy on hand examples") {
    auto check = [](const std::string& p, double expected, std::size_t pairs) {
        auto acc = pairwise_accuracy(list_of(p), labels_for(p));
        CHECK(acc.accuracy == expected);
        CHECK(acc.pair_count == pairs);
    };
    check("AARR", 1.0, 4);
    check("RRAA", 0.0, 4);
    check("ARAR", 0.75, 4);
    check("RA", 0.0, 1);
    check("ARRR", 1.0, 3);
    CHECK(pairwise_accuracy(list_of("ARAR"), labels_for("ARAR")).correct_pairs == 3);
}

TEST_CASE("pairwise accuracy requires a pair and known labels") {
    CHECK_THROWS_AS(pairwise_accuracy(list_of("AAA"), labels_for("AAA")), MetricError);
    CHECK_THROWS_AS(pairwise_accuracy(list_of(""), {}), MetricError);
    CHECK_THROWS_AS(pairwise_accuracy(list_of("AR"), {}), MetricError);
    CHECK_FALSE(has_pairs(list_of("RRR"), labels_for("RRR")));
    CHECK(has_pairs(list_of("RA"), labels_for("RA")));
}

TEST_CASE("pairwise accuracy matches the double loop and complements under reversal",
          "[property]") {
    std::mt19937_64 rng(17);
    for (int iter = 0; iter < 500; ++iter) {
        const auto n = std::uniform_int_distribution<std::size_t>(2, 40)(rng);
        std::string p(n, 'R');
        for (auto& c : p) c = (rng() & 1) ? 'A' : 'R';
        p[0] = 'A';
        p[1] = 'R';
        std::shuffle(p.begin(), p.end(), rng);
        auto labels = labels_for(p);
        auto l = list_of(p);
        const auto fwd = pairwise_accuracy(l, labels);
        CHECK(std::abs(fwd.accuracy - brute_force(p)) < 1e-12);
        std::reverse(l.entries.begin(), l.entries.end());
        const auto rev = pairwise_accuracy(l, labels);
        // exact as a rational; the doubles may differ in the last bit
        CHECK(rev.correct_pairs == fwd.pair_count - fwd.correct_pairs);
        CHECK(std::abs(rev.accuracy - (1.0 - fwd.accuracy)) < 1e-15);
    }
}

TEST_CASE("moving an accepted entry up never lowers accuracy", "[property]") {
    std::mt19937_64 rng(5);
    for (int iter = 0; iter < 200; ++iter) {
        std::string p = "AR";
        for (int i = 0; i < 10; ++i) p += (rng() & 1) ? 'A' : 'R';
        std::shuffle(p.begin(), p.end(), rng);
        for (std::size_t i = 1; i < p.size(); ++i) {
            if (p[i] == 'A' && p[i - 1] == 'R') {
                auto labels = labels_for(p);
                auto l = list_of(p);
                const double before = pairwise_accuracy(l, labels).accuracy;
                std::swap(l.entries[i], l.entries[i - 1]);
                CHECK(pairwise_accuracy(l, labels).accuracy > before);
                break;
            }
        }
    }
}

TEST_CASE("precision at k") {
    auto p = std::string("ARAAR");
    CHECK(precision_at_k(list_of(p), labels_for(p), 3) == Catch::Approx(2.0 / 3.0));
    CHECK(precision_at_k(list_of(p), labels_for(p), 1) == 1.0);
    CHECK(precision_at_k(list_of(p), labels_for(p), 5) == Catch::Approx(0.6));
    // short list keeps k as the denominator
    CHECK(precision_at_k(list_of("AA"), labels_for("AA"), 5) == Catch::Approx(0.4));
    CHECK_THROWS_AS(precision_at_k(list_of(p), labels_for(p), 0), MetricError);
}

TEST_CASE("precision at k stays in range", "[property]") {
    std::mt19937_64 rng(23);
    for (int iter = 0; iter < 200; ++iter) {
        std::string p;
        for (int i = 0, n = 1 + static_cast<int>(rng() % 12); i < n; ++i) p += (rng() & 1) ? 'A' : 'R';
        for (std::size_t k = 1; k <= 8; ++k) {
            const double v = precision_at_k(list_of(p), labels_for(p), k);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            CHECK(v * static_cast<double>(k) <= static_cast<double>(std::min(k, p.size())) + 1e-12);
        }
    }
}

TEST_CASE("topic metrics average over references") {
    auto labels = labels_for("AARR");
    auto reversed = list_of("AARR");
    std::reverse(reversed.entries.begin(), reversed.entries.end());
    std::vector<RankedList> lists = {list_of("AARR"), reversed};
    auto r = topic_metrics(lists, labels);
    CHECK(r.accuracy == 0.5);
    CHECK(r.reference_count == 2);
    CHECK(r.pair_count == 4);
    CHECK(r.precision_at.at(3) == Catch::Approx(0.5));
    CHECK(r.precision_at.at(5) == Catch::Approx(0.4));
    CHECK_THROWS(topic_metrics(std::span<const RankedList>{}, labels));
}

TEST_CASE("summaries use the sample standard deviation") {
    std::vector<double> xs = {1, 2, 3, 4};
    CHECK(mean(xs) == 2.5);
    CHECK(sample_sd(xs) == Catch::Approx(1.2909944487358056));
    std::vector<double> one = {7};
    CHECK(sample_sd(one) == 0.0);

    std::vector<MetricRow> rows = {row("a", "t1", 0.5), row("a", "t2", 0.7), row("b", "t1", 0.9),
                                   row("b", "t2", 0.9), row("c", "t1", 0.6), row("c", "t2", 0.6)};
    auto s = summarize_models(rows);
    REQUIRE(s.size() == 3);
    CHECK(s[0].model_id == "b");
    CHECK(s[1].model_id == "a");  // 0.6 ties with c, broken by id
    CHECK(s[2].model_id == "c");
    CHECK(s[1].sd_accuracy == Catch::Approx(0.1414213562).epsilon(1e-9));
    CHECK(s[0].topic_count == 2);
    CHECK(s[0].mean_precision_at.at(3) == Catch::Approx(0.5));
}

TEST_CASE("domain aggregation") {
    corpus::Corpus c;
    c.topics = {{"t1", "", "bio", {}}, {"t2", "", "math", {}}, {"t3", "", "bio", {}}};
    std::vector<MetricRow> rows = {row("m", "t1", 0.2), row("m", "t2", 0.4), row("m", "t3", 0.6)};
    auto agg = aggregate_by_domain(rows, c);
    REQUIRE(agg.size() == 2);
    CHECK(agg[0].domain == "bio");
    CHECK(agg[0].mean_accuracy == Catch::Approx(0.4));
    CHECK(agg[0].topic_count == 2);
    CHECK(agg[1].domain == "math");
}

TEST_CASE("generated tabulation") {
    std::vector<GeneratedEvaluation> evs = {
        {"m", "t1", "bio", "lecture", 2, 1, 1.0},
        {"m", "t2", "bio", "lecture", 3, 2, 0.5},
        {"m", "t3", "bio", "lecture", 1, 1, std::nullopt},
        {"m", "t1", "bio", "exercise", 2, 0, std::nullopt},
    };
    auto cells = tabulate_generated(evs);
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].generation_tag == "lecture");
    CHECK(cells[0].generated_count == 6);
    CHECK(cells[0].accepted_count == 4);
    CHECK(cells[0].scored_topics == 2);
    CHECK(*cells[0].ranking_accuracy == Catch::Approx(0.75));
    CHECK_FALSE(cells[1].ranking_accuracy);
}

TEST_CASE("metric CSV round trip and header checks") {
    std::vector<MetricRow> rows = {row("m,1", "t1", 1.0 / 3.0), row("base", "t\"2", 0.25)};
    std::stringstream io;
    write_metric_rows(io, rows);
    auto back = read_metric_rows(io);
    REQUIRE(back.size() == 2);
    CHECK(back[0].model_id == "m,1");
    CHECK(back[0].accuracy == 1.0 / 3.0);
    CHECK(back[1].topic_id == "t\"2");
    CHECK(back[1].precision_at.at(5) == 0.4);

    std::istringstream wrong("a,b\n1,2\n");
    CHECK_THROWS(read_metric_rows(wrong));
    std::istringstream short_row(std::string(kMetricHeader) + "\nm,t,d,0.5\n");
    CHECK_THROWS(read_metric_rows(short_row));

    std::ostringstream s;
    std::vector<ModelSummary> sums = summarize_models(rows);
    write_summaries(s, sums);
    CHECK(s.str().rfind(std::string(kSummaryHeader), 0) == 0);
}
