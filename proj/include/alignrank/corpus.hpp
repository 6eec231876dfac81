// SPDX-License-Identifier: Apache-2.0
#pragma once

// Labeled ground truth: topics, their resources with transcripts and expert
// labels, and learner score tables. Both file formats are one JSON object per
// line.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace alignrank::corpus {

enum class Label { accepted, rejected };
enum class Origin { collected, generated };

std::string_view to_string(Label label);
std::string_view to_string(Origin origin);
// Both throw std::invalid_argument on anything but the exact lowercase names.
Label parse_label(std::string_view text);
Origin parse_origin(std::string_view text);

struct ResourceRecord {
    std::string resource_id;
    std::string topic_id;
    std::string transcript;
    Label label = Label::rejected;
    // 1 = top of the source platform's ranking. Always present in files;
    // optional only so hand-built corpora can be validated.
    std::optional<int> baseline_rank;
    Origin origin = Origin::collected;
    std::optional<std::string> generation_tag;

    bool operator==(const ResourceRecord&) const = default;
};

struct Topic {
    std::string topic_id;
    std::string title;
    std::string domain;
    std::vector<ResourceRecord> resources;

    std::size_t count(Label label) const;
    std::size_t count(Label label, Origin origin) const;
    const ResourceRecord* find(std::string_view resource_id) const;

    bool operator==(const Topic&) const = default;
};

struct Corpus {
    std::vector<Topic> topics;
    std::map<std::string, std::string> metadata;

    const Topic* find(std::string_view topic_id) const;
    std::size_t resource_count() const;

    bool operator==(const Corpus&) const = default;
};

/// Raised by the loaders. `line` is 1-based, 0 when the problem is not tied
/// to one line (e.g. an empty file).
class FormatError : public std::runtime_error {
public:
    FormatError(std::size_t line, std::string field, const std::string& message);

    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

// Optional first line of a corpus file carrying Corpus::metadata:
//   {"corpus_metadata": {"source": "...", "version": "..."}}
inline constexpr std::string_view kMetadataKey = "corpus_metadata";

Corpus load_corpus(const std::filesystem::path& path);
Corpus parse_corpus(std::istream& in);
void write_corpus(std::ostream& out, const Corpus& corpus);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

struct Issue {
    std::string location;
    std::string message;
};

struct ValidationReport {
    std::vector<Issue> errors;
    std::vector<Issue> warnings;
    std::size_t evaluable_topic_count = 0;

    bool ok() const noexcept { return errors.empty(); }
};

/// Never throws; every broken invariant becomes an error entry, topics that
/// cannot be scored (no accepted or no rejected resource) become warnings.
ValidationReport validate_corpus(const Corpus& corpus);

bool is_evaluable(const Topic& topic);

/// Keeps topics with at least one accepted and one rejected resource.
Corpus filter_evaluable(const Corpus& corpus);

// The two studies look at disjoint slices of a topic: collected resources
// (ranked against each other and the baseline) and generated resources,
// grouped by their use-case tag.
Topic collected_view(const Topic& topic);
Topic generated_view(const Topic& topic, std::string_view generation_tag);
std::vector<std::string> generation_tags(const Topic& topic);

struct LearnerScore {
    std::string participant_id;
    std::string topic_id;
    int group = 1;  // rank of the resource the participant studied: 1, 2 or 3
    double score = 0.0;

    bool operator==(const LearnerScore&) const = default;
};

struct LearnerScoreTable {
    std::vector<LearnerScore> rows;

    // Index 0..2 hold the sizes of groups 1..3.
    std::array<std::size_t, 3> group_sizes() const;
    std::vector<std::vector<double>> scores_by_group() const;
};

LearnerScoreTable load_learner_scores(const std::filesystem::path& path);
LearnerScoreTable parse_learner_scores(std::istream& in);
void write_learner_scores(std::ostream& out, const LearnerScoreTable& table);

}  // namespace alignrank::corpus
