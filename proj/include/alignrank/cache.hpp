// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "alignrank/corpus.hpp"
#include "alignrank/embed.hpp"
#include "alignrank/provider.hpp"

namespace alignrank::embed {

/// Content-addressed store of document embeddings: one JSON file per key in a
/// flat directory. Readers may run concurrently; writes go through a temporary
/// file and an atomic rename, so concurrent writers of one key are harmless.
class EmbeddingCache {
public:
    using WarningSink = std::function<void(const std::string&)>;

    explicit EmbeddingCache(std::filesystem::path directory, WarningSink warn = {});

    struct Lookup {
        std::optional<EmbeddingVector> vector;
        std::optional<std::string> corruption;  // set when a file exists but is unusable
    };

    Lookup lookup(const std::string& key) const;
    void store(const std::string& key, const EmbeddingVector& vector) const;
    std::filesystem::path file_for(const std::string& key) const;
    const std::filesystem::path& directory() const noexcept { return dir_; }
    void warn(const std::string& message) const;

private:
    std::filesystem::path dir_;
    WarningSink warn_;
};

/// Hex SHA-256 over provider, model, everything that changes how a document
/// is segmented and pooled, and the full document text.
std::string cache_key(const ProviderConfig& config, std::string_view text);

/// Cache-only read used by evaluation; never calls a provider.
std::optional<EmbeddingVector> cached_embedding(const ProviderConfig& config,
                                                std::string_view text,
                                                const EmbeddingCache& cache);

struct DocumentOutcome {
    EmbeddingVector vector;
    bool cache_hit = false;
};

/// Cache hit, or segment -> embed each segment -> pool -> store.
DocumentOutcome embed_document(const Provider& provider, std::string_view text,
                               const EmbeddingCache& cache);

/// topic_id -> resource_id -> vector. Resource ids are only unique within a
/// topic, so the map is nested.
using CorpusEmbeddings = std::map<std::string, std::map<std::string, EmbeddingVector>>;

struct ResourceFailure {
    std::string topic_id;
    std::string resource_id;
    std::string cause;
};

struct EmbedCorpusResult {
    CorpusEmbeddings vectors;
    std::size_t cache_hits = 0;
    std::size_t computed = 0;
    std::vector<ResourceFailure> failures;
};

class AggregateEmbedError : public EmbedError {
public:
    explicit AggregateEmbedError(EmbedCorpusResult partial);
    const EmbedCorpusResult& partial() const noexcept { return partial_; }

private:
    EmbedCorpusResult partial_;
};

struct Progress {
    std::size_t done = 0;
    std::size_t total = 0;
};
using ProgressFn = std::function<void(const Progress&)>;

/// Embeds every resource with at most config.max_parallel_requests documents
/// in flight. Failures are collected; if any occurred, AggregateEmbedError is
/// thrown after all work finished (successes are already cached). All vectors
/// of one provider must share a dimension.
EmbedCorpusResult embed_corpus(const Provider& provider, const corpus::Corpus& corpus,
                               const EmbeddingCache& cache, const ProgressFn& progress = {});

}  // namespace alignrank::embed
