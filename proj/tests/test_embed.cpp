// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "alignrank/csv.hpp"
#include "alignrank/digest.hpp"
#include "alignrank/embed.hpp"

using namespace alignrank;
using namespace alignrank::embed;

namespace {

std::vector<std::string> texts(const std::vector<Segment>& segs) {
    std::vector<std::string> out;
    for (const auto& s : segs) out.push_back(s.text);
    return out;
}

std::string join(const std::vector<Segment>& segs) {
    std::string out;
    for (const auto& s : segs) out += s.text;
    return out;
}

EmbeddingVector vec(std::vector<double> v) { return {std::move(v), "p", "m"}; }

}  // namespace

TEST_CASE("sha256 known answers") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    Sha256 h;
    h.update("a").update("bc");
    CHECK(to_hex(h.finish()) == sha256_hex("abc"));

    Sha256 f1, f2;
    f1.update_field("ab").update_field("c");
    f2.update_field("a").update_field("bc");
    CHECK(f1.finish() != f2.finish());
}

TEST_CASE("csv formatting round-trips doubles and quotes fields") {
    for (double d : {0.0, 1.0, 0.1, 1.0 / 3.0, -2.5e-300, 123456789.125}) {
        CHECK(csv::parse_double(csv::format_double(d)) == d);
    }
    CHECK(csv::format_double(0.5) == "0.5");
    CHECK_THROWS(csv::parse_double("1.5x"));
    CHECK_THROWS(csv::parse_double(""));

    std::ostringstream out;
    csv::write_row(out, {"plain", "with,comma", "say \"hi\"", "two\nlines"});
    std::istringstream in(out.str());
    auto rows = csv::read_all(in);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0] == csv::Row{"plain", "with,comma", "say \"hi\"", "two\nlines"});
}

TEST_CASE("count_units counts code points and tokens") {
    CHECK(count_units("héllo", BudgetUnit::characters) == 5);
    CHECK(count_units("日本語", BudgetUnit::characters) == 3);
    CHECK(count_units("  two  words ", BudgetUnit::whitespace_tokens) == 2);
    CHECK(count_units("", BudgetUnit::whitespace_tokens) == 0);
}

TEST_CASE("character segmentation prefers whitespace boundaries") {
    auto segs = segment_text("hello world foo", 8, BudgetUnit::characters);
    CHECK(texts(segs) == std::vector<std::string>{"hello ", "world ", "foo"});
    CHECK(segs[1].index == 1);
    CHECK(segs[0].unit_count == 6);

    // no whitespace inside the window forces a hard cut
    CHECK(texts(segment_text("abcdefghij", 4, BudgetUnit::characters)) ==
          std::vector<std::string>{"abcd", "efgh", "ij"});

    // multibyte characters are never split
    auto jp = segment_text("日本語テキスト", 3, BudgetUnit::characters);
    CHECK(texts(jp) == std::vector<std::string>{"日本語", "テキス", "ト"});

    CHECK(segment_text("short", 100, BudgetUnit::characters).size() == 1);
}

TEST_CASE("token segmentation keeps whitespace with the preceding token") {
    auto segs = segment_text("  one two three four five", 2, BudgetUnit::whitespace_tokens);
    CHECK(texts(segs) == std::vector<std::string>{"  one two ", "three four ", "five"});
    CHECK(segs[0].unit_count == 2);
    CHECK(segs[2].unit_count == 1);

    auto blank = segment_text("   ", 3, BudgetUnit::whitespace_tokens);
    REQUIRE(blank.size() == 1);
    CHECK(blank[0].unit_count == 1);
}

TEST_CASE("segmentation rejects empty input and zero budget") {
    CHECK_THROWS_AS(segment_text("", 5, BudgetUnit::characters), EmbedError);
    CHECK_THROWS_AS(segment_text("x", 0, BudgetUnit::whitespace_tokens), EmbedError);
    CHECK_THROWS_AS(parse_budget_unit("bytes"), std::invalid_argument);
    CHECK(parse_budget_unit("whitespace_tokens") == BudgetUnit::whitespace_tokens);
}

TEST_CASE("segmentation partition property", "[property]") {
    std::mt19937_64 rng(42);
    const std::vector<std::string> alphabet = {"a", "b", "Z", " ", " ", "\n", "\t", "é", "日", "🙂"};
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    for (int iter = 0; iter < 500; ++iter) {
        std::string s;
        const auto len = std::uniform_int_distribution<int>(1, 120)(rng);
        for (int i = 0; i < len; ++i) s += alphabet[pick(rng)];
        const auto budget = std::uniform_int_distribution<std::size_t>(1, 20)(rng);
        for (auto unit : {BudgetUnit::characters, BudgetUnit::whitespace_tokens}) {
            auto segs = segment_text(s, budget, unit);
            REQUIRE(join(segs) == s);
            for (std::size_t i = 0; i < segs.size(); ++i) {
                CHECK(segs[i].index == i);
                CHECK(!segs[i].text.empty());
                CHECK(count_units(segs[i].text, unit) <= budget);
            }
        }
    }
}

TEST_CASE("mean pooling") {
    std::vector<EmbeddingVector> vs = {vec({1, 0, 2}), vec({3, 4, 0})};
    auto m = mean_pool(vs);
    CHECK(m.values == std::vector<double>{2, 2, 1});
    CHECK(m.provider_id == "p");

    std::vector<double> w = {3, 1};
    auto wm = weighted_pool(vs, w);
    CHECK(wm.values[0] == Catch::Approx(1.5));
    CHECK(wm.values[1] == Catch::Approx(1.0));

    std::vector<EmbeddingVector> one = {vec({5, 6})};
    CHECK(mean_pool(one).values == std::vector<double>{5, 6});
}

TEST_CASE("pooling errors") {
    std::vector<EmbeddingVector> none;
    CHECK_THROWS_AS(mean_pool(none), EmbedError);
    std::vector<EmbeddingVector> mixed = {vec({1, 2}), vec({1, 2, 3})};
    CHECK_THROWS_AS(mean_pool(mixed), EmbedError);
    std::vector<EmbeddingVector> prov = {vec({1, 2}), {{1, 2}, "other", "m"}};
    CHECK_THROWS_AS(mean_pool(prov), EmbedError);
    std::vector<EmbeddingVector> two = {vec({1, 2}), vec({3, 4})};
    std::vector<double> short_w = {1};
    std::vector<double> neg_w = {1, -1};
    CHECK_THROWS_AS(weighted_pool(two, short_w), EmbedError);
    CHECK_THROWS_AS(weighted_pool(two, neg_w), EmbedError);
    CHECK_THROWS_AS(parse_pooling("max"), std::invalid_argument);
}

TEST_CASE("pooling is permutation invariant and stays in the convex hull", "[property]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int iter = 0; iter < 200; ++iter) {
        const std::size_t n = 1 + rng() % 6, d = 1 + rng() % 5;
        std::vector<EmbeddingVector> vs;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> v(d);
            for (auto& x : v) x = u(rng);
            vs.push_back(vec(v));
        }
        auto m = mean_pool(vs);
        auto shuffled = vs;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        auto ms = mean_pool(shuffled);
        for (std::size_t j = 0; j < d; ++j) {
            CHECK(ms.values[j] == Catch::Approx(m.values[j]).margin(1e-12));
            double lo = vs[0].values[j], hi = lo;
            for (const auto& v : vs) {
                lo = std::min(lo, v.values[j]);
                hi = std::max(hi, v.values[j]);
            }
            CHECK(m.values[j] >= lo - 1e-12);
            CHECK(m.values[j] <= hi + 1e-12);
        }
    }
}

TEST_CASE("deterministic embedding is stable, unit norm and text sensitive") {
    auto a = deterministic_embed("hello", 64, 1);
    CHECK(a.dim() == 64);
    CHECK(norm(a) == Catch::Approx(1.0).margin(1e-12));
    CHECK(a == deterministic_embed("hello", 64, 1));
    CHECK(a != deterministic_embed("hello", 64, 2));
    CHECK(a != deterministic_embed("hello!", 64, 1));
    CHECK(a.provider_id == kDeterministicProviderId);
    CHECK(a.model_id == "sha256-d64");
    auto b = deterministic_embed("hello", 65, 1);
    CHECK(b.dim() == 65);
    CHECK_THROWS_AS(deterministic_embed("x", 1, 0), EmbedError);
    for (double x : a.values) {
        CHECK(std::abs(x) <= 1.0);
    }
}
