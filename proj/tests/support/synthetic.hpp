// SPDX-License-Identifier: Apache-2.0
#pragma once

// Planted-signal corpus: accepted transcripts of a topic draw their words from
// one vocabulary, rejected transcripts from a disjoint one.

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "alignrank/corpus.hpp"
#include "alignrank/provider.hpp"

namespace alignrank::testing {

struct SyntheticShape {
    std::size_t topics = 20;
    std::size_t accepted = 4;
    std::size_t rejected = 4;
    std::size_t generated_per_label = 1;
    std::size_t words_per_transcript = 24;
    std::size_t vocabulary = 30;
    std::uint64_t seed = 11;
};

inline std::string draw_transcript(std::mt19937_64& rng, const std::string& prefix,
                                   std::size_t vocabulary, std::size_t words) {
    std::uniform_int_distribution<std::size_t> pick(0, vocabulary - 1);
    std::string out;
    for (std::size_t w = 0; w < words; ++w) {
        if (w) out += ' ';
        out += prefix + std::to_string(pick(rng));
    }
    return out;
}

inline corpus::Corpus synthetic_corpus(const SyntheticShape& shape = {}) {
    static const char* kDomains[] = {"biology", "history", "mathematics", "languages"};
    std::mt19937_64 rng(shape.seed);
    corpus::Corpus c;
    for (std::size_t t = 0; t < shape.topics; ++t) {
        corpus::Topic topic;
        topic.topic_id = "topic-" + std::to_string(t);
        topic.title = "Topic " + std::to_string(t);
        topic.domain = kDomains[t % 4];
        const std::string on = "t" + std::to_string(t) + "on";
        const std::string off = "t" + std::to_string(t) + "off";
        const std::size_t collected = shape.accepted + shape.rejected;
        std::vector<int> ranks(collected);
        std::iota(ranks.begin(), ranks.end(), 1);
        std::shuffle(ranks.begin(), ranks.end(), rng);
        for (std::size_t r = 0; r < collected; ++r) {
            corpus::ResourceRecord rec;
            rec.topic_id = topic.topic_id;
            rec.resource_id = "r" + std::to_string(r);
            const bool accepted = r < shape.accepted;
            rec.label = accepted ? corpus::Label::accepted : corpus::Label::rejected;
            rec.transcript =
                draw_transcript(rng, accepted ? on : off, shape.vocabulary, shape.words_per_transcript);
            rec.baseline_rank = ranks[r];
            topic.resources.push_back(rec);
        }
        for (std::size_t g = 0; g < 2 * shape.generated_per_label; ++g) {
            corpus::ResourceRecord rec;
            rec.topic_id = topic.topic_id;
            rec.resource_id = "g" + std::to_string(g);
            const bool accepted = g % 2 == 0;
            rec.label = accepted ? corpus::Label::accepted : corpus::Label::rejected;
            rec.transcript =
                draw_transcript(rng, accepted ? on : off, shape.vocabulary, shape.words_per_transcript);
            rec.baseline_rank = static_cast<int>(collected + g + 1);
            rec.origin = corpus::Origin::generated;
            rec.generation_tag = "lecture";
            topic.resources.push_back(rec);
        }
        c.topics.push_back(std::move(topic));
    }
    return c;
}

// Word-level deterministic embeddings; mean pooling then gives a bag of words.
inline embed::ProviderConfig bag_of_words_config(std::string model_id = "det-bow",
                                                  std::uint64_t seed = 5) {
    embed::ProviderConfig cfg;
    cfg.provider_id = std::string(embed::kDeterministicProviderId);
    cfg.model_id = std::move(model_id);
    cfg.endpoint = std::string(embed::kDeterministicEndpoint);
    cfg.unit = embed::BudgetUnit::whitespace_tokens;
    cfg.max_units = 1;
    cfg.dim = 128;
    cfg.seed = seed;
    return cfg;
}

}  // namespace alignrank::testing
