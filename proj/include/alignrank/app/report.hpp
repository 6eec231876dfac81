// SPDX-License-Identifier: Apache-2.0
#pragma once

// Evaluation pipeline and report emission shared by the CLI and the tests.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "alignrank/cache.hpp"
#include "alignrank/corpus.hpp"
#include "alignrank/metrics.hpp"
#include "alignrank/provider.hpp"
#include "alignrank/rank.hpp"
#include "alignrank/stats.hpp"

namespace alignrank::app {

struct ModelEmbeddings {
    embed::ProviderConfig config;
    embed::CorpusEmbeddings vectors;
};

struct EvaluationOptions {
    rank::ReferencePolicy policy;
    bool include_baseline = true;
};

struct Evaluation {
    std::vector<metrics::MetricRow> rows;  // every model, then baseline; corpus topic order
    std::vector<metrics::ModelSummary> summaries;
    std::vector<metrics::DomainAggregate> domains;
    std::vector<metrics::GeneratedEvaluation> generated;
    std::vector<metrics::GeneratedCell> generated_cells;
    std::vector<rank::RankedList> rankings;
    std::vector<std::string> notices;
    std::vector<std::string> scored_topics;
};

/// Topics whose collected resources allow every reference ranking to contain
/// an accepted-rejected pair: at least 2 accepted and 1 rejected.
bool scorable_with_reference(const corpus::Topic& collected);

/// Scores collected resources per topic for every model and the baseline,
/// and generated resources per (topic, generation_tag) for every model.
Evaluation evaluate(const corpus::Corpus& corpus, const std::vector<ModelEmbeddings>& models,
                    const EvaluationOptions& options);

/// Loads cached vectors for every resource; names each missing one in `gaps`.
ModelEmbeddings load_cached_embeddings(const embed::ProviderConfig& config,
                                       const corpus::Corpus& corpus,
                                       const embed::EmbeddingCache& cache,
                                       std::vector<std::string>& gaps);

struct RunManifest {
    std::string tool_version;
    std::string input_sha256;  // corpus, per-topic CSV or learner file
    std::vector<embed::ProviderConfig> providers;
    std::optional<rank::ReferencePolicy> policy;
    std::optional<bool> tie_correction;
    std::optional<double> alpha;
    std::optional<std::uint64_t> seed;
    std::string generated_at;  // caller-supplied; empty keeps reports reproducible

    nlohmann::json to_json() const;
};

std::string tool_version();

// Markdown tables: accuracy, Precision@k, per-domain accuracy, generated resources.
void write_markdown_tables(std::ostream& out, const Evaluation& eval, const RunManifest& manifest);

/// Writes per_topic.csv, summary.csv, per_domain.csv, generated.csv,
/// rankings.jsonl, tables.md and manifest.json into `dir`.
void write_evaluation(const std::filesystem::path& dir, const Evaluation& eval,
                      const RunManifest& manifest);

struct PivotedAccuracy {
    stats::Matrix matrix;  // topics x models
    std::vector<std::string> topics;
    std::vector<std::string> models;
};

/// Builds the topic x model accuracy matrix; throws listing missing or
/// duplicate cells.
PivotedAccuracy pivot_accuracy(const std::vector<metrics::MetricRow>& rows);

struct FriedmanReport {
    stats::FriedmanResult friedman;
    std::optional<stats::NemenyiResult> nemenyi;
    std::string nemenyi_notice;
    std::vector<std::string> models;
    double alpha = 0.05;
};

FriedmanReport friedman_report(const PivotedAccuracy& pivot, double alpha, bool tie_correction);
nlohmann::json to_json(const FriedmanReport& report, const RunManifest& manifest);
void write_friedman_summary(std::ostream& out, const FriedmanReport& report);

struct LearnerReport {
    std::vector<int> groups;  // group labels present, ascending
    stats::KruskalWallisResult kruskal_wallis;
    stats::DunnResult dunn;             // with the selected tie setting
    stats::DunnResult dunn_corrected;   // always tie corrected
    stats::DunnResult dunn_uncorrected; // never tie corrected
    double alpha = 0.05;
};

LearnerReport learner_report(const corpus::LearnerScoreTable& table, double alpha,
                             bool tie_correction);
nlohmann::json to_json(const LearnerReport& report, const RunManifest& manifest);
void write_learner_table(std::ostream& out, const LearnerReport& report);

}  // namespace alignrank::app
