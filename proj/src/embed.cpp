// SPDX-License-Identifier: Apache-2.0
#include "alignrank/embed.hpp"

#include <cmath>

#include "alignrank/digest.hpp"

namespace alignrank::embed {

double norm(const EmbeddingVector& v) {
    double sum = 0.0;
    for (double x : v.values) sum += x * x;
    return std::sqrt(sum);
}

std::string_view to_string(Pooling pooling) {
    return pooling == Pooling::mean ? "mean" : "length_weighted";
}

Pooling parse_pooling(std::string_view text) {
    if (text == "mean") return Pooling::mean;
    if (text == "length_weighted") return Pooling::length_weighted;
    throw std::invalid_argument("unknown pooling \"" + std::string(text) + "\"");
}

namespace {

void check_poolable(std::span<const EmbeddingVector> vectors) {
    if (vectors.empty()) {
        throw EmbedError("pooling: empty vector list");
    }
    const auto& first = vectors.front();
    for (const auto& v : vectors) {
        if (v.dim() != first.dim()) {
            throw EmbedError("pooling: dimension mismatch (" + std::to_string(first.dim()) +
                             " vs " + std::to_string(v.dim()) + ")");
        }
        if (v.provider_id != first.provider_id || v.model_id != first.model_id) {
            throw EmbedError("pooling: vectors come from different providers or models");
        }
    }
}

}  // namespace

EmbeddingVector mean_pool(std::span<const EmbeddingVector> vectors) {
    check_poolable(vectors);
    EmbeddingVector out{std::vector<double>(vectors.front().dim(), 0.0),
                        vectors.front().provider_id, vectors.front().model_id};
    for (const auto& v : vectors) {
        for (std::size_t i = 0; i < v.dim(); ++i) out.values[i] += v.values[i];
    }
    const auto n = static_cast<double>(vectors.size());
    for (auto& x : out.values) x /= n;
    return out;
}

EmbeddingVector weighted_pool(std::span<const EmbeddingVector> vectors,
                              std::span<const double> weights) {
    check_poolable(vectors);
    if (weights.size() != vectors.size()) {
        throw EmbedError("pooling: weight count does not match vector count");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw EmbedError("pooling: weights must be positive and finite");
        }
        total += w;
    }
    EmbeddingVector out{std::vector<double>(vectors.front().dim(), 0.0),
                        vectors.front().provider_id, vectors.front().model_id};
    for (std::size_t k = 0; k < vectors.size(); ++k) {
        for (std::size_t i = 0; i < out.dim(); ++i) {
            out.values[i] += weights[k] * vectors[k].values[i];
        }
    }
    for (auto& x : out.values) x /= total;
    return out;
}

EmbeddingVector deterministic_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
    if (dim < 2) {
        throw EmbedError("deterministic_embed: dim must be >= 2");
    }
    EmbeddingVector out;
    out.provider_id = std::string(kDeterministicProviderId);
    out.model_id = "sha256-d" + std::to_string(dim);
    out.values.reserve(dim);

    auto le64 = [](std::uint64_t v) {
        std::string s(8, '\0');
        for (int i = 0; i < 8; ++i) s[static_cast<std::size_t>(i)] = static_cast<char>(v >> (8 * i));
        return s;
    };
    const std::string seed_bytes = le64(seed);
    for (std::uint64_t block = 0; out.values.size() < dim; ++block) {
        Sha256 h;
        h.update_field("alignrank-deterministic-v1").update_field(seed_bytes);
        h.update_field(le64(block)).update_field(text);
        const auto digest = h.finish();
        for (std::size_t w = 0; w < 4 && out.values.size() < dim; ++w) {
            std::uint64_t word = 0;
            for (std::size_t b = 0; b < 8; ++b) {
                word |= static_cast<std::uint64_t>(digest[w * 8 + b]) << (8 * b);
            }
            // 53 random bits -> uniform in [-1, 1)
            out.values.push_back(std::ldexp(static_cast<double>(word >> 11), -52) - 1.0);
        }
    }
    const double n = norm(out);
    if (n == 0.0) {  // all-zero digest stream
        out.values.assign(dim, 0.0);
        out.values[0] = 1.0;
        return out;
    }
    for (auto& x : out.values) x /= n;
    return out;
}

}  // namespace alignrank::embed
