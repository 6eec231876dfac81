// SPDX-License-Identifier: Apache-2.0
#include "alignrank/rank.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "alignrank/digest.hpp"

namespace alignrank::rank {

using corpus::Label;
using nlohmann::json;

std::string_view to_string(RankingSource source) {
    return source == RankingSource::baseline ? "baseline" : "embedding_model";
}

RankingSource parse_ranking_source(std::string_view text) {
    if (text == "baseline") return RankingSource::baseline;
    if (text == "embedding_model") return RankingSource::embedding_model;
    throw RankError("unknown ranking_source \"" + std::string(text) + "\"");
}

std::string_view to_string(ReferenceMode mode) {
    return mode == ReferenceMode::all_accepted ? "all_accepted" : "single_random";
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw RankError("cosine_similarity: dimension mismatch (" + std::to_string(a.dim()) +
                        " vs " + std::to_string(b.dim()) + ")");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw RankError("cosine_similarity: zero-norm vector");
    }
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

namespace {

void sort_entries(std::vector<RankedEntry>& entries) {
    std::sort(entries.begin(), entries.end(), [](const RankedEntry& x, const RankedEntry& y) {
        if (x.score != y.score) return x.score > y.score;
        return x.resource_id < y.resource_id;
    });
}

const EmbeddingVector& embedding_for(const EmbeddingsById& embeddings, const std::string& topic_id,
                                     const std::string& resource_id) {
    auto it = embeddings.find(resource_id);
    if (it == embeddings.end()) {
        throw RankError("missing embedding for " + topic_id + "/" + resource_id);
    }
    return it->second;
}

RankedList rank_reference_within(const corpus::Topic& pool_topic, const std::string& reference_id,
                                 const corpus::Topic& candidates,
                                 const EmbeddingsById& embeddings) {
    const auto& ref = embedding_for(embeddings, pool_topic.topic_id, reference_id);
    EmbeddingsById subset;
    for (const auto& r : candidates.resources) {
        if (r.resource_id == reference_id) continue;
        subset.emplace(r.resource_id, embedding_for(embeddings, candidates.topic_id, r.resource_id));
    }
    return rank_by_reference(candidates.topic_id, reference_id, ref, subset);
}

}  // namespace

RankedList rank_by_reference(std::string_view topic_id, std::string_view reference_id,
                             const EmbeddingVector& reference,
                             const EmbeddingsById& candidates) {
    if (candidates.empty()) {
        throw RankError("rank_by_reference: no candidates for topic " + std::string(topic_id));
    }
    if (candidates.contains(std::string(reference_id))) {
        throw RankError("rank_by_reference: reference " + std::string(reference_id) +
                        " is among the candidates");
    }
    RankedList list{std::string(topic_id), std::string(reference_id),
                    RankingSource::embedding_model, reference.model_id, {}};
    list.entries.reserve(candidates.size());
    for (const auto& [id, vec] : candidates) {
        list.entries.push_back({id, cosine_similarity(reference, vec)});
    }
    sort_entries(list.entries);
    return list;
}

std::size_t seeded_choice(std::uint64_t seed, std::string_view stream, std::size_t n) {
    if (n == 0) throw RankError("seeded_choice: empty range");
    std::string seed_bytes(8, '\0');
    for (int i = 0; i < 8; ++i) {
        seed_bytes[static_cast<std::size_t>(i)] = static_cast<char>(seed >> (8 * i));
    }
    const auto digest = Sha256().update_field(seed_bytes).update_field(stream).finish();
    std::uint64_t state = 0;
    for (std::size_t b = 0; b < 8; ++b) state |= std::uint64_t{digest[b]} << (8 * b);
    std::mt19937_64 gen(state);
    const std::uint64_t range = n;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t draw = gen();
    while (draw >= limit) draw = gen();
    return static_cast<std::size_t>(draw % range);
}

std::vector<RankedList> rank_topic(const corpus::Topic& topic, const EmbeddingsById& embeddings,
                                   const ReferencePolicy& policy) {
    std::vector<std::string> accepted;
    for (const auto& r : topic.resources) {
        if (r.label == Label::accepted) accepted.push_back(r.resource_id);
    }
    if (accepted.empty()) {
        throw RankError("rank_topic: topic " + topic.topic_id + " has no accepted resource");
    }
    for (const auto& r : topic.resources) embedding_for(embeddings, topic.topic_id, r.resource_id);

    std::vector<RankedList> out;
    if (policy.mode == ReferenceMode::all_accepted) {
        for (const auto& id : accepted) {
            out.push_back(rank_reference_within(topic, id, topic, embeddings));
        }
    } else {
        const auto pick = seeded_choice(policy.seed, topic.topic_id, accepted.size());
        out.push_back(rank_reference_within(topic, accepted[pick], topic, embeddings));
    }
    return out;
}

RankedList rank_against_random_reference(const corpus::Topic& reference_pool,
                                         const corpus::Topic& candidates,
                                         const EmbeddingsById& embeddings, std::uint64_t seed,
                                         std::string_view stream) {
    std::vector<std::string> accepted;
    for (const auto& r : reference_pool.resources) {
        if (r.label == Label::accepted) accepted.push_back(r.resource_id);
    }
    if (accepted.empty()) {
        throw RankError("topic " + reference_pool.topic_id +
                        " has no accepted resource to serve as reference");
    }
    const auto pick = seeded_choice(seed, stream, accepted.size());
    return rank_reference_within(reference_pool, accepted[pick], candidates, embeddings);
}

RankedList baseline_ranking(const corpus::Topic& topic) {
    RankedList list{topic.topic_id, std::string(kBaselineReference), RankingSource::baseline,
                    std::string(kBaselineModelId), {}};
    std::set<int> seen;
    for (const auto& r : topic.resources) {
        if (!r.baseline_rank) {
            throw RankError("baseline_ranking: " + topic.topic_id + "/" + r.resource_id +
                            " has no baseline_rank");
        }
        if (!seen.insert(*r.baseline_rank).second) {
            throw RankError("baseline_ranking: duplicate baseline_rank " +
                            std::to_string(*r.baseline_rank) + " in topic " + topic.topic_id);
        }
        list.entries.push_back({r.resource_id, -static_cast<double>(*r.baseline_rank)});
    }
    sort_entries(list.entries);
    return list;
}

void write_rankings(std::ostream& out, const std::vector<RankedList>& lists) {
    for (const auto& l : lists) {
        json entries = json::array();
        for (const auto& e : l.entries) {
            entries.push_back({{"resource_id", e.resource_id}, {"score", e.score}});
        }
        out << json{{"topic_id", l.topic_id},
                    {"reference_id", l.reference_id},
                    {"ranking_source", to_string(l.ranking_source)},
                    {"model_id", l.model_id},
                    {"entries", entries}}
                   .dump()
            << '\n';
    }
}

std::vector<RankedList> read_rankings(std::istream& in) {
    std::vector<RankedList> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            json j = json::parse(line);
            RankedList l;
            l.topic_id = j.at("topic_id").get<std::string>();
            l.reference_id = j.at("reference_id").get<std::string>();
            l.ranking_source = parse_ranking_source(j.at("ranking_source").get<std::string>());
            l.model_id = j.at("model_id").get<std::string>();
            for (const auto& e : j.at("entries")) {
                l.entries.push_back(
                    {e.at("resource_id").get<std::string>(), e.at("score").get<double>()});
            }
            out.push_back(std::move(l));
        } catch (const json::exception& e) {
            throw RankError("rankings line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace alignrank::rank
