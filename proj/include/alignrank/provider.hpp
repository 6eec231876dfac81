// SPDX-License-Identifier: Apache-2.0
#pragma once

// Embedding providers: configuration, the offline deterministic backend and a
// generic HTTP backend speaking {"model", "input": [...]} -> data[i].embedding.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "alignrank/embed.hpp"

namespace alignrank::embed {

inline constexpr std::string_view kDeterministicEndpoint = "deterministic";

struct ProviderConfig {
    std::string provider_id;
    std::string model_id;
    std::string endpoint;  // URL, or "deterministic"
    std::size_t max_units = 512;
    BudgetUnit unit = BudgetUnit::characters;
    std::size_t max_parallel_requests = 1;
    std::size_t max_retries = 3;
    std::string credential_env_var;

    // Optional knobs beyond the core contract.
    std::optional<std::size_t> dim;  // required output dimension; deterministic default 256
    std::uint64_t seed = 0;          // deterministic backend only
    Pooling pooling = Pooling::mean;
    std::size_t max_inputs_per_request = 64;
    std::chrono::milliseconds retry_base_delay{250};
    std::chrono::seconds timeout{60};

    bool is_deterministic() const noexcept { return endpoint == kDeterministicEndpoint; }
    std::size_t deterministic_dim() const noexcept { return dim.value_or(256); }
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Transport or protocol failure. status is the last HTTP status seen, 0 when
/// no response arrived at all.
class ProviderError : public std::runtime_error {
public:
    ProviderError(std::string provider_id, int status, const std::string& message);

    const std::string& provider_id() const noexcept { return provider_id_; }
    int status() const noexcept { return status_; }

private:
    std::string provider_id_;
    int status_;
};

void validate_config(const ProviderConfig& config);
ProviderConfig provider_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ProviderConfig& config);
/// File holds a JSON array of provider objects. model_ids must be unique.
std::vector<ProviderConfig> load_provider_configs(const std::filesystem::path& path);

/// Embeds a batch of segment strings, returning one vector per input in order.
class SegmentEmbedder {
public:
    virtual ~SegmentEmbedder() = default;
    virtual std::vector<std::vector<double>> embed(std::span<const std::string> segments) = 0;

    std::size_t request_count() const noexcept { return requests_.load(); }

protected:
    std::atomic<std::size_t> requests_{0};
};

class DeterministicEmbedder final : public SegmentEmbedder {
public:
    DeterministicEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}
    std::vector<std::vector<double>> embed(std::span<const std::string> segments) override;

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

class HttpEmbedder final : public SegmentEmbedder {
public:
    /// Reads the credential from the environment immediately; a missing
    /// variable is a ConfigError naming it.
    explicit HttpEmbedder(ProviderConfig config);
    std::vector<std::vector<double>> embed(std::span<const std::string> segments) override;

private:
    std::vector<std::vector<double>> request_batch(std::span<const std::string> segments);

    ProviderConfig config_;
    std::string origin_;  // scheme://host[:port]
    std::string path_;
    std::string api_key_;
};

/// Parses an embeddings response body, honouring data[i].index when present.
std::vector<std::vector<double>> parse_embeddings_response(const std::string& body,
                                                           std::size_t expected_count);

/// A configured provider: its settings and the backend that serves it.
struct Provider {
    ProviderConfig config;
    std::shared_ptr<SegmentEmbedder> backend;
};

Provider make_provider(const ProviderConfig& config);

}  // namespace alignrank::embed
