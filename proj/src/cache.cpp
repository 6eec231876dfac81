// SPDX-License-Identifier: Apache-2.0
#include "alignrank/cache.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "alignrank/digest.hpp"

namespace alignrank::embed {

using nlohmann::json;

namespace {

std::string utc_now_iso8601() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

bool is_hex_key(const std::string& key) {
    return key.size() == 64 && key.find_first_not_of("0123456789abcdef") == std::string::npos;
}

}  // namespace

EmbeddingCache::EmbeddingCache(std::filesystem::path directory, WarningSink warn)
    : dir_(std::move(directory)), warn_(std::move(warn)) {
    std::filesystem::create_directories(dir_);
}

void EmbeddingCache::warn(const std::string& message) const {
    if (warn_) {
        warn_(message);
    } else {
        std::cerr << "warning: " << message << '\n';
    }
}

std::filesystem::path EmbeddingCache::file_for(const std::string& key) const {
    return dir_ / (key + ".json");
}

EmbeddingCache::Lookup EmbeddingCache::lookup(const std::string& key) const {
    if (!is_hex_key(key)) {
        throw EmbedError("cache: malformed key \"" + key + "\"");
    }
    const auto path = file_for(key);
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};

    try {
        json doc = json::parse(in);
        if (doc.at("key").get<std::string>() != key) {
            return {std::nullopt, "stored key does not match file name"};
        }
        EmbeddingVector v;
        v.provider_id = doc.at("provider_id").get<std::string>();
        v.model_id = doc.at("model_id").get<std::string>();
        v.values = doc.at("values").get<std::vector<double>>();
        if (doc.at("dim").get<std::size_t>() != v.values.size() || v.values.empty()) {
            return {std::nullopt, "dim does not match stored values"};
        }
        for (double x : v.values) {
            if (!std::isfinite(x)) return {std::nullopt, "non-finite value"};
        }
        return {std::move(v), std::nullopt};
    } catch (const json::exception& e) {
        return {std::nullopt, std::string("unreadable entry: ") + e.what()};
    }
}

void EmbeddingCache::store(const std::string& key, const EmbeddingVector& vector) const {
    static std::atomic<std::uint64_t> counter{0};
    json doc = {{"key", key},
                {"provider_id", vector.provider_id},
                {"model_id", vector.model_id},
                {"dim", vector.dim()},
                {"values", vector.values},
                {"created_at", utc_now_iso8601()}};
    std::ostringstream suffix;
    suffix << ".tmp." << std::this_thread::get_id() << '.' << counter++;
    const auto final_path = file_for(key);
    auto tmp = final_path;
    tmp += suffix.str();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw EmbedError("cache: cannot write " + tmp.string());
        out << doc.dump() << '\n';
        if (!out.flush()) throw EmbedError("cache: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, final_path);
}

std::string cache_key(const ProviderConfig& config, std::string_view text) {
    Sha256 h;
    h.update_field("alignrank-cache-v1");
    h.update_field(config.provider_id).update_field(config.model_id);
    h.update_field(to_string(config.unit)).update_field(std::to_string(config.max_units));
    h.update_field(to_string(config.pooling));
    if (config.is_deterministic()) {
        h.update_field(std::to_string(config.deterministic_dim()))
            .update_field(std::to_string(config.seed));
    }
    h.update_field(text);
    return to_hex(h.finish());
}

std::optional<EmbeddingVector> cached_embedding(const ProviderConfig& config,
                                                std::string_view text,
                                                const EmbeddingCache& cache) {
    auto hit = cache.lookup(cache_key(config, text));
    return hit.vector;
}

DocumentOutcome embed_document(const Provider& provider, std::string_view text,
                               const EmbeddingCache& cache) {
    const auto& cfg = provider.config;
    if (text.empty()) {
        throw EmbedError("embed_document: empty text");
    }
    const std::string key = cache_key(cfg, text);
    auto hit = cache.lookup(key);
    if (hit.vector) {
        return {std::move(*hit.vector), true};
    }
    if (hit.corruption) {
        cache.warn("cache entry " + key + " is corrupt (" + *hit.corruption +
                   "); recomputing");
    }

    const auto segments = segment_text(text, cfg.max_units, cfg.unit);
    std::vector<std::string> texts;
    texts.reserve(segments.size());
    for (const auto& s : segments) texts.push_back(s.text);

    auto raw = provider.backend->embed(texts);
    if (raw.size() != segments.size()) {
        throw ProviderError(cfg.provider_id, 0,
                            "returned " + std::to_string(raw.size()) + " vectors for " +
                                std::to_string(segments.size()) + " segments");
    }
    const std::size_t dim = cfg.is_deterministic() ? cfg.deterministic_dim()
                                                   : cfg.dim.value_or(raw.front().size());
    std::vector<EmbeddingVector> parts;
    std::vector<double> weights;
    parts.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i].size() != dim || dim == 0) {
            throw ProviderError(cfg.provider_id, 0,
                                "wrong dimension " + std::to_string(raw[i].size()) +
                                    " (expected " + std::to_string(dim) + ")");
        }
        parts.push_back(EmbeddingVector{std::move(raw[i]), cfg.provider_id, cfg.model_id});
        weights.push_back(static_cast<double>(segments[i].unit_count));
    }
    EmbeddingVector pooled =
        cfg.pooling == Pooling::mean ? mean_pool(parts) : weighted_pool(parts, weights);
    cache.store(key, pooled);
    return {std::move(pooled), false};
}

AggregateEmbedError::AggregateEmbedError(EmbedCorpusResult partial)
    : EmbedError([&] {
          std::string msg = std::to_string(partial.failures.size()) +
                            " resource(s) failed to embed:";
          for (const auto& f : partial.failures) {
              msg += "\n  " + f.topic_id + "/" + f.resource_id + ": " + f.cause;
          }
          return msg;
      }()),
      partial_(std::move(partial)) {}

EmbedCorpusResult embed_corpus(const Provider& provider, const corpus::Corpus& corpus,
                               const EmbeddingCache& cache, const ProgressFn& progress) {
    struct Job {
        const corpus::ResourceRecord* record;
        std::optional<DocumentOutcome> outcome;
        std::string error;
    };
    std::vector<Job> jobs;
    for (const auto& topic : corpus.topics) {
        for (const auto& r : topic.resources) jobs.push_back({&r, std::nullopt, {}});
    }

    std::atomic<std::size_t> next{0};
    std::size_t done = 0;
    std::mutex progress_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            auto& job = jobs[i];
            try {
                job.outcome = embed_document(provider, job.record->transcript, cache);
            } catch (const std::exception& e) {
                job.error = e.what();
            }
            std::lock_guard lock(progress_mutex);
            ++done;
            if (progress) progress({done, jobs.size()});
        }
    };
    {
        const std::size_t n_workers =
            std::min(provider.config.max_parallel_requests, std::max<std::size_t>(jobs.size(), 1));
        std::vector<std::jthread> pool;
        pool.reserve(n_workers);
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }

    EmbedCorpusResult result;
    std::optional<std::size_t> dim = provider.config.dim;
    for (auto& job : jobs) {
        const auto& r = *job.record;
        if (!job.outcome) {
            result.failures.push_back({r.topic_id, r.resource_id, job.error});
            continue;
        }
        if (!dim) dim = job.outcome->vector.dim();
        if (job.outcome->vector.dim() != *dim) {
            result.failures.push_back(
                {r.topic_id, r.resource_id,
                 "wrong dimension " + std::to_string(job.outcome->vector.dim()) +
                     " (expected " + std::to_string(*dim) + ")"});
            continue;
        }
        (job.outcome->cache_hit ? result.cache_hits : result.computed)++;
        result.vectors[r.topic_id][r.resource_id] = std::move(job.outcome->vector);
    }
    if (!result.failures.empty()) {
        throw AggregateEmbedError(std::move(result));
    }
    return result;
}

}  // namespace alignrank::embed
