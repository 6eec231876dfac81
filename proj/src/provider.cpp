// SPDX-License-Identifier: Apache-2.0
#include "alignrank/provider.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <set>
#include <thread>

namespace alignrank::embed {

using nlohmann::json;

ProviderError::ProviderError(std::string provider_id, int status, const std::string& message)
    : std::runtime_error("provider " + provider_id +
                         (status > 0 ? " (HTTP " + std::to_string(status) + ")" : "") + ": " +
                         message),
      provider_id_(std::move(provider_id)),
      status_(status) {}

void validate_config(const ProviderConfig& c) {
    auto fail = [&](const std::string& msg) {
        throw ConfigError("provider \"" + c.provider_id + "\": " + msg);
    };
    if (c.provider_id.empty()) fail("provider_id is empty");
    if (c.model_id.empty()) fail("model_id is empty");
    if (c.max_units < 1) fail("max_units must be >= 1");
    if (c.max_parallel_requests < 1) fail("max_parallel_requests must be >= 1");
    if (c.max_inputs_per_request < 1) fail("max_inputs_per_request must be >= 1");
    if (c.is_deterministic()) {
        if (c.deterministic_dim() < 2) fail("dim must be >= 2");
    } else {
        if (!c.endpoint.starts_with("http://") && !c.endpoint.starts_with("https://")) {
            fail("endpoint must be an http(s) URL or \"deterministic\"");
        }
        if (c.dim && *c.dim < 1) fail("dim must be >= 1");
    }
}

ProviderConfig provider_config_from_json(const json& j) {
    if (!j.is_object()) {
        throw ConfigError("provider entry must be a JSON object");
    }
    static const std::set<std::string> known = {
        "provider_id", "model_id", "endpoint", "max_units", "unit", "max_parallel_requests",
        "max_retries", "credential_env_var", "dim", "seed", "pooling", "max_inputs_per_request",
        "retry_base_delay_ms", "timeout_seconds"};
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) throw ConfigError("unknown provider field \"" + key + "\"");
    }
    ProviderConfig c;
    try {
        c.provider_id = j.at("provider_id").get<std::string>();
        c.model_id = j.at("model_id").get<std::string>();
        c.endpoint = j.at("endpoint").get<std::string>();
        c.max_units = j.at("max_units").get<std::size_t>();
        c.unit = parse_budget_unit(j.at("unit").get<std::string>());
        c.max_parallel_requests = j.value("max_parallel_requests", std::size_t{1});
        c.max_retries = j.value("max_retries", std::size_t{3});
        c.credential_env_var = j.value("credential_env_var", std::string{});
        if (j.contains("dim")) c.dim = j.at("dim").get<std::size_t>();
        c.seed = j.value("seed", std::uint64_t{0});
        c.pooling = parse_pooling(j.value("pooling", std::string{"mean"}));
        c.max_inputs_per_request = j.value("max_inputs_per_request", std::size_t{64});
        c.retry_base_delay = std::chrono::milliseconds(j.value("retry_base_delay_ms", 250));
        c.timeout = std::chrono::seconds(j.value("timeout_seconds", 60));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("provider config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("provider config: ") + e.what());
    }
    validate_config(c);
    return c;
}

json to_json(const ProviderConfig& c) {
    json j = {{"provider_id", c.provider_id},
              {"model_id", c.model_id},
              {"endpoint", c.endpoint},
              {"max_units", c.max_units},
              {"unit", to_string(c.unit)},
              {"max_parallel_requests", c.max_parallel_requests},
              {"max_retries", c.max_retries},
              {"credential_env_var", c.credential_env_var},
              {"pooling", to_string(c.pooling)},
              {"max_inputs_per_request", c.max_inputs_per_request},
              {"retry_base_delay_ms", c.retry_base_delay.count()},
              {"timeout_seconds", c.timeout.count()}};
    if (c.dim) j["dim"] = *c.dim;
    if (c.is_deterministic()) j["seed"] = c.seed;
    return j;
}

std::vector<ProviderConfig> load_provider_configs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open provider config " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("provider config " + path.string() + ": " + e.what());
    }
    if (!doc.is_array() || doc.empty()) {
        throw ConfigError("provider config must be a nonempty JSON array");
    }
    std::vector<ProviderConfig> out;
    std::set<std::string> models;
    for (const auto& entry : doc) {
        out.push_back(provider_config_from_json(entry));
        if (!models.insert(out.back().model_id).second) {
            throw ConfigError("duplicate model_id \"" + out.back().model_id + "\"");
        }
    }
    return out;
}

std::vector<std::vector<double>> DeterministicEmbedder::embed(
    std::span<const std::string> segments) {
    ++requests_;
    std::vector<std::vector<double>> out;
    out.reserve(segments.size());
    for (const auto& s : segments) out.push_back(deterministic_embed(s, dim_, seed_).values);
    return out;
}

namespace {

std::pair<std::string, std::string> split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable(int status) { return status == 429 || status >= 500; }

std::chrono::milliseconds backoff(std::chrono::milliseconds base, std::size_t attempt) {
    thread_local std::mt19937_64 rng{std::random_device{}()};
    const auto scaled = base.count() * (std::int64_t{1} << std::min<std::size_t>(attempt, 16));
    std::uniform_int_distribution<std::int64_t> jitter(0, std::max<std::int64_t>(scaled, 0));
    return std::chrono::milliseconds(scaled + jitter(rng));
}

}  // namespace

HttpEmbedder::HttpEmbedder(ProviderConfig config) : config_(std::move(config)) {
    validate_config(config_);
    if (config_.is_deterministic()) {
        throw ConfigError("HttpEmbedder needs an http(s) endpoint");
    }
    std::tie(origin_, path_) = split_url(config_.endpoint);
    if (!config_.credential_env_var.empty()) {
        const char* key = std::getenv(config_.credential_env_var.c_str());
        if (key == nullptr || *key == '\0') {
            throw ConfigError("provider \"" + config_.provider_id +
                              "\": environment variable " + config_.credential_env_var +
                              " is not set");
        }
        api_key_ = key;
    }
}

std::vector<std::vector<double>> HttpEmbedder::embed(std::span<const std::string> segments) {
    std::vector<std::vector<double>> out;
    out.reserve(segments.size());
    for (std::size_t i = 0; i < segments.size(); i += config_.max_inputs_per_request) {
        auto n = std::min(config_.max_inputs_per_request, segments.size() - i);
        auto batch = request_batch(segments.subspan(i, n));
        std::move(batch.begin(), batch.end(), std::back_inserter(out));
    }
    return out;
}

std::vector<std::vector<double>> HttpEmbedder::request_batch(
    std::span<const std::string> segments) {
    const std::string body =
        json{{"model", config_.model_id},
             {"input", std::vector<std::string>(segments.begin(), segments.end())}}
            .dump();
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    int last_status = 0;
    std::string last_message;
    for (std::size_t attempt = 0;; ++attempt) {
        httplib::Client client(origin_);
        client.set_connection_timeout(config_.timeout);
        client.set_read_timeout(config_.timeout);
        client.set_write_timeout(config_.timeout);
        ++requests_;
        auto res = client.Post(path_, headers, body, "application/json");

        std::chrono::milliseconds wait = backoff(config_.retry_base_delay, attempt);
        if (!res) {
            last_status = 0;
            last_message = "transport error: " + httplib::to_string(res.error());
        } else if (res->status == 200) {
            try {
                return parse_embeddings_response(res->body, segments.size());
            } catch (const std::exception& e) {
                throw ProviderError(config_.provider_id, res->status, e.what());
            }
        } else {
            last_status = res->status;
            last_message = "request rejected";
            if (!retryable(res->status)) {
                throw ProviderError(config_.provider_id, last_status, last_message);
            }
            if (auto ra = res->get_header_value("Retry-After"); !ra.empty()) {
                char* end = nullptr;
                long secs = std::strtol(ra.c_str(), &end, 10);
                if (end != ra.c_str() && secs >= 0) {
                    wait = std::max(wait, std::chrono::milliseconds(std::min(secs, 30L) * 1000));
                }
            }
        }
        if (attempt >= config_.max_retries) {
            throw ProviderError(config_.provider_id, last_status,
                                last_message + " after " + std::to_string(attempt + 1) +
                                    " attempt(s)");
        }
        std::this_thread::sleep_for(wait);
    }
}

std::vector<std::vector<double>> parse_embeddings_response(const std::string& body,
                                                           std::size_t expected_count) {
    json doc = json::parse(body);
    const auto& data = doc.at("data");
    if (!data.is_array() || data.size() != expected_count) {
        throw std::runtime_error("response carries " +
                                 std::to_string(data.is_array() ? data.size() : 0) +
                                 " embeddings, expected " + std::to_string(expected_count));
    }
    std::vector<std::vector<double>> out(expected_count);
    std::vector<bool> filled(expected_count, false);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& item = data[i];
        std::size_t slot = item.contains("index") ? item.at("index").get<std::size_t>() : i;
        if (slot >= expected_count || filled[slot]) {
            throw std::runtime_error("response has invalid or repeated index " +
                                     std::to_string(slot));
        }
        out[slot] = item.at("embedding").get<std::vector<double>>();
        for (double x : out[slot]) {
            if (!std::isfinite(x)) throw std::runtime_error("response contains non-finite value");
        }
        filled[slot] = true;
    }
    return out;
}

Provider make_provider(const ProviderConfig& config) {
    validate_config(config);
    if (config.is_deterministic()) {
        return {config,
                std::make_shared<DeterministicEmbedder>(config.deterministic_dim(), config.seed)};
    }
    return {config, std::make_shared<HttpEmbedder>(config)};
}

}  // namespace alignrank::embed
