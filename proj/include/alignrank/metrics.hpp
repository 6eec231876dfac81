// SPDX-License-Identifier: Apache-2.0
#pragma once

// Ranking quality: the accepted-over-rejected pair accuracy and Precision@k,
// aggregated per topic, per model and per educational domain.

#include <array>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "alignrank/corpus.hpp"
#include "alignrank/rank.hpp"

namespace alignrank::metrics {

using corpus::Label;
using rank::RankedList;
using LabelMap = std::map<std::string, Label>;

class MetricError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

LabelMap labels_of(const corpus::Topic& topic);

struct PairAccuracy {
    double accuracy = 0.0;
    std::size_t correct_pairs = 0;
    std::size_t pair_count = 0;
};

/// Fraction of (accepted, rejected) entry pairs in which the accepted entry
/// sits strictly higher. Throws MetricError when there is no such pair.
PairAccuracy pairwise_accuracy(const RankedList& ranked, const LabelMap& labels);

/// True when the list holds at least one accepted and one rejected entry.
bool has_pairs(const RankedList& ranked, const LabelMap& labels);

/// Accepted entries among the first min(k, size) positions, divided by k.
double precision_at_k(const RankedList& ranked, const LabelMap& labels, std::size_t k);

inline constexpr std::array<std::size_t, 2> kDefaultCutoffs = {3, 5};

struct MetricRow {
    std::string topic_id;
    std::string model_id;
    std::string domain;
    double accuracy = 0.0;
    std::map<std::size_t, double> precision_at;
    std::size_t pair_count = 0;       // pairs in each reference's ranking
    std::size_t reference_count = 0;  // rankings averaged into this row
};

/// Unweighted mean over the topic's per-reference rankings.
MetricRow topic_metrics(std::span<const RankedList> rankings, const LabelMap& labels,
                        std::span<const std::size_t> cutoffs = kDefaultCutoffs);

struct ModelSummary {
    std::string model_id;
    double mean_accuracy = 0.0;
    double sd_accuracy = 0.0;
    std::map<std::size_t, double> mean_precision_at;
    std::map<std::size_t, double> sd_precision_at;
    std::size_t topic_count = 0;
};

double mean(std::span<const double> xs);
/// Sample (n - 1) standard deviation; 0 for a single value.
double sample_sd(std::span<const double> xs);

ModelSummary summarize_model(std::span<const MetricRow> rows);

/// One summary per model, sorted by mean accuracy descending (ties by model_id).
std::vector<ModelSummary> summarize_models(std::span<const MetricRow> rows);

struct DomainAggregate {
    std::string domain;
    std::string model_id;
    double mean_accuracy = 0.0;
    std::size_t topic_count = 0;
};

/// Sorted by (domain, model_id).
std::vector<DomainAggregate> aggregate_by_domain(std::span<const MetricRow> rows,
                                                 const corpus::Corpus& corpus);

/// Same contract as pairwise_accuracy, applied to rankings of generated
/// resources against a collected reference.
PairAccuracy generated_resource_accuracy(const RankedList& ranked, const LabelMap& labels);

/// Evaluation of one (topic, generation_tag) slice.
struct GeneratedEvaluation {
    std::string model_id;
    std::string topic_id;
    std::string domain;
    std::string generation_tag;
    std::size_t generated_count = 0;
    std::size_t accepted_count = 0;
    std::optional<double> accuracy;  // empty when the slice has no accepted-rejected pair
};

/// One row of the generated-resource table, keyed by (model_id, generation_tag, domain).
struct GeneratedCell {
    std::string model_id;
    std::string generation_tag;
    std::string domain;
    std::size_t generated_count = 0;
    std::size_t accepted_count = 0;
    std::optional<double> ranking_accuracy;  // mean over scored topics
    std::size_t scored_topics = 0;
};

/// Rows ordered by first appearance of (model_id, generation_tag, domain).
std::vector<GeneratedCell> tabulate_generated(std::span<const GeneratedEvaluation> evaluations);

// CSV files.
inline constexpr std::string_view kMetricHeader =
    "model_id,topic_id,domain,accuracy,precision_at_3,precision_at_5,pair_count,reference_count";
inline constexpr std::string_view kSummaryHeader =
    "model_id,mean_accuracy,sd_accuracy,mean_p3,sd_p3,mean_p5,sd_p5,topic_count";
inline constexpr std::string_view kDomainHeader = "domain,model_id,mean_accuracy,topic_count";
inline constexpr std::string_view kGeneratedHeader =
    "model_id,generation_tag,domain,generated_resources,accepted_resources,ranking_accuracy,scored_topics";

void write_metric_rows(std::ostream& out, std::span<const MetricRow> rows);
std::vector<MetricRow> read_metric_rows(std::istream& in);
void write_summaries(std::ostream& out, std::span<const ModelSummary> summaries);
void write_domain_aggregates(std::ostream& out, std::span<const DomainAggregate> aggregates);
void write_generated_cells(std::ostream& out, std::span<const GeneratedCell> cells);

}  // namespace alignrank::metrics
