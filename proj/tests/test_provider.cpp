// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <mutex>
#include <thread>

#include "alignrank/cache.hpp"
#include "alignrank/provider.hpp"
#include "support/synthetic.hpp"

using namespace alignrank;
using namespace alignrank::embed;
using nlohmann::json;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("alignrank-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Scripted embeddings endpoint. Each request pops the next response code;
// once the script is exhausted every request succeeds.
class FakeEndpoint {
public:
    struct Reply {
        int status = 200;
        std::string retry_after;
    };

    explicit FakeEndpoint(std::size_t dim = 4) : dim_(dim) {
        server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mutex_);
            ++hits_;
            auth_.push_back(req.get_header_value("Authorization"));
            Reply reply;
            if (!script_.empty()) {
                reply = script_.front();
                script_.pop_front();
            }
            if (reply.status != 200) {
                res.status = reply.status;
                if (!reply.retry_after.empty()) res.set_header("Retry-After", reply.retry_after);
                res.set_content("{\"error\":\"scripted\"}", "application/json");
                return;
            }
            auto body = json::parse(req.body);
            models_.push_back(body.at("model").get<std::string>());
            const auto& input = body.at("input");
            batch_sizes_.push_back(input.size());
            json data = json::array();
            // reversed order with explicit indices
            for (std::size_t i = input.size(); i-- > 0;) {
                std::vector<double> v(dim_, 0.0);
                v[i % dim_] = 1.0 + static_cast<double>(input[i].get<std::string>().size());
                data.push_back({{"index", i}, {"embedding", v}});
            }
            res.set_content(json{{"data", data}}.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeEndpoint() {
        server_.stop();
        thread_.join();
    }

    void script(std::vector<Reply> replies) {
        std::lock_guard lock(mutex_);
        script_.assign(replies.begin(), replies.end());
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/embeddings"; }
    std::size_t hits() {
        std::lock_guard lock(mutex_);
        return hits_;
    }
    std::vector<std::string> auth() {
        std::lock_guard lock(mutex_);
        return auth_;
    }
    std::vector<std::size_t> batch_sizes() {
        std::lock_guard lock(mutex_);
        return batch_sizes_;
    }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::size_t dim_;
    std::mutex mutex_;
    std::deque<Reply> script_;
    std::size_t hits_ = 0;
    std::vector<std::string> auth_;
    std::vector<std::string> models_;
    std::vector<std::size_t> batch_sizes_;
};

ProviderConfig http_config(const FakeEndpoint& fake) {
    ProviderConfig cfg;
    cfg.provider_id = "fake";
    cfg.model_id = "fake-embed";
    cfg.endpoint = fake.url();
    cfg.max_units = 5;
    cfg.max_retries = 2;
    cfg.credential_env_var = "ALIGNRANK_TEST_KEY";
    cfg.retry_base_delay = std::chrono::milliseconds(1);
    cfg.timeout = std::chrono::seconds(5);
    return cfg;
}

struct EnvKey {
    EnvKey() { ::setenv("ALIGNRANK_TEST_KEY", "test-secret", 1); }
    ~EnvKey() { ::unsetenv("ALIGNRANK_TEST_KEY"); }
};

}  // namespace

TEST_CASE("provider config parsing") {
    auto cfg = provider_config_from_json(json::parse(
        R"({"provider_id":"p","model_id":"m","endpoint":"https://x/v1","max_units":100,
            "unit":"whitespace_tokens","max_parallel_requests":3,"pooling":"length_weighted"})"));
    CHECK(cfg.max_units == 100);
    CHECK(cfg.unit == BudgetUnit::whitespace_tokens);
    CHECK(cfg.max_parallel_requests == 3);
    CHECK(cfg.pooling == Pooling::length_weighted);
    CHECK(provider_config_from_json(to_json(cfg)).model_id == "m");

    CHECK_THROWS_AS(provider_config_from_json(json::parse(
                        R"({"provider_id":"p","model_id":"m","endpoint":"deterministic",
                            "max_units":5,"unit":"characters","colour":1})")),
                    ConfigError);
    CHECK_THROWS_AS(provider_config_from_json(json::parse(
                        R"({"provider_id":"p","model_id":"m","endpoint":"deterministic",
                            "max_units":0,"unit":"characters"})")),
                    ConfigError);
    CHECK_THROWS_AS(provider_config_from_json(json::parse(R"({"provider_id":"p"})")), ConfigError);
    CHECK_THROWS_AS(provider_config_from_json(json::parse("[1]")), ConfigError);
}

TEST_CASE("provider config files") {
    auto dir = fresh_dir("configs");
    auto write = [&](const std::string& name, const std::string& body) {
        std::ofstream(dir / name) << body;
        return dir / name;
    };
    const std::string one =
        R"({"provider_id":"deterministic","model_id":"a","endpoint":"deterministic","max_units":5,"unit":"characters"})";
    CHECK(load_provider_configs(write("ok.json", "[" + one + "]")).size() == 1);
    CHECK_THROWS_AS(load_provider_configs(write("dup.json", "[" + one + "," + one + "]")),
                    ConfigError);
    CHECK_THROWS_AS(load_provider_configs(write("empty.json", "[]")), ConfigError);
    CHECK_THROWS_AS(load_provider_configs(dir / "missing.json"), ConfigError);
}

TEST_CASE("missing credential is a configuration error naming the variable") {
    ::unsetenv("ALIGNRANK_MISSING_KEY");
    ProviderConfig cfg;
    cfg.provider_id = "remote";
    cfg.model_id = "m";
    cfg.endpoint = "https://example.invalid/v1/embeddings";
    cfg.credential_env_var = "ALIGNRANK_MISSING_KEY";
    try {
        make_provider(cfg);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("ALIGNRANK_MISSING_KEY"));
    }
}

TEST_CASE("embeddings response parsing") {
    auto v = parse_embeddings_response(
        R"({"data":[{"index":1,"embedding":[3,4]},{"index":0,"embedding":[1,2]}]})", 2);
    CHECK(v[0] == std::vector<double>{1, 2});
    CHECK(v[1] == std::vector<double>{3, 4});
    auto plain = parse_embeddings_response(R"({"data":[{"embedding":[9]}]})", 1);
    CHECK(plain[0] == std::vector<double>{9});
    CHECK_THROWS(parse_embeddings_response(R"({"data":[]})", 1));
    CHECK_THROWS(parse_embeddings_response(
        R"({"data":[{"index":0,"embedding":[1]},{"index":0,"embedding":[2]}]})", 2));
    CHECK_THROWS(parse_embeddings_response(R"({"nodata":1})", 1));
}

TEST_CASE("http provider sends the bearer token and honours batch size") {
    EnvKey key;
    FakeEndpoint fake;
    auto cfg = http_config(fake);
    cfg.max_inputs_per_request = 2;
    auto p = make_provider(cfg);
    std::vector<std::string> segs = {"a", "bb", "ccc", "dddd", "e"};
    auto out = p.backend->embed(segs);
    REQUIRE(out.size() == 5);
    CHECK(out[1][1] == 3.0);  // index order restored within a batch
    CHECK(out[2][0] == 4.0);
    CHECK(fake.batch_sizes() == std::vector<std::size_t>{2, 2, 1});
    CHECK(p.backend->request_count() == 3);
    for (const auto& a : fake.auth()) CHECK(a == "Bearer test-secret");
}

TEST_CASE("http provider retries 429 and 5xx then succeeds") {
    EnvKey key;
    FakeEndpoint fake;
    fake.script({{429, "0"}, {503, ""}});
    auto p = make_provider(http_config(fake));
    std::vector<std::string> segs = {"x"};
    auto out = p.backend->embed(segs);
    CHECK(out.size() == 1);
    CHECK(fake.hits() == 3);
}

TEST_CASE("http provider waits for Retry-After") {
    EnvKey key;
    FakeEndpoint fake;
    fake.script({{429, "1"}});
    auto p = make_provider(http_config(fake));
    std::vector<std::string> segs = {"x"};
    const auto start = std::chrono::steady_clock::now();
    p.backend->embed(segs);
    CHECK(std::chrono::steady_clock::now() - start >= std::chrono::milliseconds(950));
}

TEST_CASE("http provider gives up after max_retries") {
    EnvKey key;
    FakeEndpoint fake;
    fake.script({{500, ""}, {500, ""}, {500, ""}, {500, ""}});
    auto p = make_provider(http_config(fake));
    std::vector<std::string> segs = {"x"};
    try {
        p.backend->embed(segs);
        FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
        CHECK(e.status() == 500);
        CHECK(e.provider_id() == "fake");
    }
    CHECK(fake.hits() == 3);
}

TEST_CASE("http provider does not retry client errors") {
    EnvKey key;
    FakeEndpoint fake;
    fake.script({{401, ""}});
    auto p = make_provider(http_config(fake));
    std::vector<std::string> segs = {"x"};
    CHECK_THROWS_AS(p.backend->embed(segs), ProviderError);
    CHECK(fake.hits() == 1);
}

TEST_CASE("transport failure reports status 0") {
    EnvKey key;
    ProviderConfig cfg;
    {
        FakeEndpoint fake;
        cfg = http_config(fake);
    }
    cfg.max_retries = 1;
    auto p = make_provider(cfg);
    std::vector<std::string> segs = {"x"};
    try {
        p.backend->embed(segs);
        FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
        CHECK(e.status() == 0);
    }
    CHECK(p.backend->request_count() == 2);
}

TEST_CASE("cache stores, hits and recovers from corruption") {
    auto dir = fresh_dir("cache");
    std::vector<std::string> warnings;
    EmbeddingCache cache(dir, [&](const std::string& m) { warnings.push_back(m); });
    auto cfg = alignrank::testing::bag_of_words_config();
    auto p = make_provider(cfg);

    auto first = embed_document(p, "alpha beta gamma", cache);
    CHECK_FALSE(first.cache_hit);
    CHECK(p.backend->request_count() == 1);
    const auto key = cache_key(cfg, "alpha beta gamma");
    CHECK(std::filesystem::exists(cache.file_for(key)));

    auto second = embed_document(p, "alpha beta gamma", cache);
    CHECK(second.cache_hit);
    CHECK(second.vector == first.vector);
    CHECK(p.backend->request_count() == 1);
    CHECK(cached_embedding(cfg, "alpha beta gamma", cache) == first.vector);
    CHECK_FALSE(cached_embedding(cfg, "other", cache));

    std::ofstream(cache.file_for(key), std::ios::trunc) << "{truncated";
    auto third = embed_document(p, "alpha beta gamma", cache);
    CHECK_FALSE(third.cache_hit);
    CHECK(third.vector == first.vector);
    REQUIRE(warnings.size() == 1);
    CHECK_THAT(warnings[0], Catch::Matchers::ContainsSubstring("corrupt"));

    CHECK_THROWS_AS(cache.lookup("../etc"), EmbedError);
    CHECK_THROWS_AS(embed_document(p, "", cache), EmbedError);
}

TEST_CASE("cache key depends on text, model and segmentation") {
    auto cfg = alignrank::testing::bag_of_words_config();
    const auto base = cache_key(cfg, "text");
    CHECK(base.size() == 64);
    CHECK(cache_key(cfg, "text") == base);
    CHECK(cache_key(cfg, "text2") != base);
    auto other = cfg;
    other.model_id = "x";
    CHECK(cache_key(other, "text") != base);
    other = cfg;
    other.max_units = 2;
    CHECK(cache_key(other, "text") != base);
    other = cfg;
    other.pooling = Pooling::length_weighted;
    CHECK(cache_key(other, "text") != base);
    other = cfg;
    other.seed = 99;
    CHECK(cache_key(other, "text") != base);
}

TEST_CASE("embed_document pools per-segment vectors from the provider") {
    EnvKey key;
    FakeEndpoint fake(4);
    auto cfg = http_config(fake);
    cfg.unit = BudgetUnit::whitespace_tokens;
    cfg.max_units = 1;  // "aa bb" -> "aa ", "bb"
    auto p = make_provider(cfg);
    EmbeddingCache cache(fresh_dir("pool"));
    auto out = embed_document(p, "aa bb", cache);
    // segment 0 -> [4,0,0,0], segment 1 -> [0,3,0,0]
    CHECK(out.vector.values == std::vector<double>{2.0, 1.5, 0.0, 0.0});
    CHECK(out.vector.model_id == "fake-embed");
}

TEST_CASE("embed_document rejects a wrong dimension") {
    EnvKey key;
    FakeEndpoint fake(4);
    auto cfg = http_config(fake);
    cfg.dim = 8;
    auto p = make_provider(cfg);
    EmbeddingCache cache(fresh_dir("dim"));
    CHECK_THROWS_AS(embed_document(p, "abc", cache), ProviderError);
}

namespace {

// Fails every request whose batch contains the marker text.
class FlakyEmbedder final : public SegmentEmbedder {
public:
    std::vector<std::vector<double>> embed(std::span<const std::string> segments) override {
        ++requests_;
        std::vector<std::vector<double>> out;
        for (const auto& s : segments) {
            if (s.find("FAIL") != std::string::npos) throw ProviderError("flaky", 503, "injected");
            out.push_back(deterministic_embed(s, 8, 1).values);
        }
        return out;
    }
};

}  // namespace

TEST_CASE("embed_corpus aggregates failures and keeps successes") {
    auto c = alignrank::testing::synthetic_corpus({.topics = 3});
    c.topics[1].resources[2].transcript = "FAIL here";
    c.topics[2].resources[0].transcript = "and FAIL";
    Provider p;
    p.config = alignrank::testing::bag_of_words_config();
    p.config.provider_id = "flaky";
    p.config.endpoint = "http://unused";
    p.config.dim = 8;
    p.config.max_units = 1000;
    p.config.max_parallel_requests = 4;
    p.backend = std::make_shared<FlakyEmbedder>();
    EmbeddingCache cache(fresh_dir("aggregate"));
    std::size_t last_done = 0;
    try {
        embed_corpus(p, c, cache, [&](const Progress& pr) { last_done = pr.done; });
        FAIL("expected AggregateEmbedError");
    } catch (const AggregateEmbedError& e) {
        const auto& partial = e.partial();
        REQUIRE(partial.failures.size() == 2);
        CHECK(partial.failures[0].topic_id == "topic-1");
        CHECK(partial.failures[0].resource_id == "r2");
        CHECK(partial.computed == c.resource_count() - 2);
        CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("topic-2/r0"));
    }
    CHECK(last_done == c.resource_count());

    // successes were cached, so a rerun only retries the failures
    c.topics[1].resources[2].transcript = "fixed";
    c.topics[2].resources[0].transcript = "fixed too";
    auto rerun = embed_corpus(p, c, cache);
    CHECK(rerun.cache_hits == c.resource_count() - 2);
    CHECK(rerun.computed == 2);
    CHECK(rerun.failures.empty());
}

TEST_CASE("embed_corpus runs in parallel with the deterministic provider") {
    auto c = alignrank::testing::synthetic_corpus({.topics = 6});
    auto cfg = alignrank::testing::bag_of_words_config();
    cfg.max_parallel_requests = 4;
    auto p = make_provider(cfg);
    EmbeddingCache cache(fresh_dir("parallel"));
    auto result = embed_corpus(p, c, cache);
    CHECK(result.computed == c.resource_count());
    CHECK(result.vectors.size() == 6);
    CHECK(result.vectors.at("topic-0").at("r0").dim() == 128);
    // same vectors as one worker
    cfg.max_parallel_requests = 1;
    auto serial = embed_corpus(make_provider(cfg), c, EmbeddingCache(fresh_dir("serial")));
    CHECK(serial.vectors == result.vectors);
}
