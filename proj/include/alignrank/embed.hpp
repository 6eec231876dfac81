// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace alignrank::embed {

struct EmbeddingVector {
    std::vector<double> values;
    std::string provider_id;
    std::string model_id;

    std::size_t dim() const noexcept { return values.size(); }
    bool operator==(const EmbeddingVector&) const = default;
};

double norm(const EmbeddingVector& v);

class EmbedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Segmentation

enum class BudgetUnit { characters, whitespace_tokens };

std::string_view to_string(BudgetUnit unit);
BudgetUnit parse_budget_unit(std::string_view text);

struct Segment {
    std::string text;
    std::size_t index = 0;
    std::size_t unit_count = 0;
};

// Characters are UTF-8 code points (a stray byte counts as one); tokens are
// maximal runs of non-whitespace.
std::size_t count_units(std::string_view text, BudgetUnit unit);

/// Splits `text` into consecutive pieces of at most `max_units` units whose
/// concatenation is exactly `text`. Each piece is filled greedily and ends
/// just after the last whitespace that fits; a run with no whitespace inside
/// the budget is cut hard at `max_units`. Whitespace-only input yields one
/// segment with unit_count 1.
std::vector<Segment> segment_text(std::string_view text, std::size_t max_units, BudgetUnit unit);

// ---------------------------------------------------------------------------
// Pooling

enum class Pooling { mean, length_weighted };

std::string_view to_string(Pooling pooling);
Pooling parse_pooling(std::string_view text);

/// Component-wise unweighted mean. All inputs must agree on dim and provenance.
EmbeddingVector mean_pool(std::span<const EmbeddingVector> vectors);

/// Mean weighted by `weights` (e.g. segment unit counts); weights must be
/// positive and match `vectors` in length.
EmbeddingVector weighted_pool(std::span<const EmbeddingVector> vectors,
                              std::span<const double> weights);

// ---------------------------------------------------------------------------
// Offline provider

inline constexpr std::string_view kDeterministicProviderId = "deterministic";

/// Unit-norm vector expanded from SHA-256 of (seed, block counter, text).
/// Stable across runs, compilers and platforms.
EmbeddingVector deterministic_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

}  // namespace alignrank::embed
