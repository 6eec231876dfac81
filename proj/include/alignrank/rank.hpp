// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "alignrank/corpus.hpp"
#include "alignrank/embed.hpp"

namespace alignrank::rank {

using embed::EmbeddingVector;
using EmbeddingsById = std::map<std::string, EmbeddingVector>;

class RankError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class RankingSource { embedding_model, baseline };

std::string_view to_string(RankingSource source);
RankingSource parse_ranking_source(std::string_view text);

struct RankedEntry {
    std::string resource_id;
    double score = 0.0;

    bool operator==(const RankedEntry&) const = default;
};

/// Total order over a topic's resources for one reference: descending score,
/// ties broken by ascending resource_id. The reference never appears.
struct RankedList {
    std::string topic_id;
    std::string reference_id;
    RankingSource ranking_source = RankingSource::embedding_model;
    std::string model_id;
    std::vector<RankedEntry> entries;

    bool operator==(const RankedList&) const = default;
};

// Placeholder reference of baseline rankings, which exclude nothing.
inline constexpr std::string_view kBaselineReference = "<baseline>";
inline constexpr std::string_view kBaselineModelId = "baseline";

/// dot(a, b) / (|a| |b|), clamped to [-1, 1].
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

RankedList rank_by_reference(std::string_view topic_id, std::string_view reference_id,
                             const EmbeddingVector& reference,
                             const EmbeddingsById& candidates);

enum class ReferenceMode { all_accepted, single_random };

struct ReferencePolicy {
    ReferenceMode mode = ReferenceMode::all_accepted;
    std::uint64_t seed = 0;
};

std::string_view to_string(ReferenceMode mode);

/// Index in [0, n) drawn uniformly from a generator seeded by (seed, stream).
/// Portable: the draw does not depend on the standard library in use.
std::size_t seeded_choice(std::uint64_t seed, std::string_view stream, std::size_t n);

/// all_accepted: one list per accepted resource, each ranking every other
/// resource of the topic. single_random: one list, reference drawn uniformly
/// from the accepted resources with a generator seeded by (seed, topic_id).
std::vector<RankedList> rank_topic(const corpus::Topic& topic, const EmbeddingsById& embeddings,
                                   const ReferencePolicy& policy);

/// Ranks `candidates` (typically generated resources) against a reference
/// drawn from `reference_pool`'s accepted resources with seeded_choice.
RankedList rank_against_random_reference(const corpus::Topic& reference_pool,
                                         const corpus::Topic& candidates,
                                         const EmbeddingsById& embeddings, std::uint64_t seed,
                                         std::string_view stream);

/// Source-platform order: ascending baseline_rank, score = -rank.
RankedList baseline_ranking(const corpus::Topic& topic);

// One JSON object per line:
// {"topic_id","reference_id","ranking_source","model_id","entries":[{"resource_id","score"}]}
void write_rankings(std::ostream& out, const std::vector<RankedList>& lists);
std::vector<RankedList> read_rankings(std::istream& in);

}  // namespace alignrank::rank
