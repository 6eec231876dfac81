// SPDX-License-Identifier: Apache-2.0
#include "alignrank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <tuple>

#include "alignrank/csv.hpp"

namespace alignrank::metrics {

LabelMap labels_of(const corpus::Topic& topic) {
    LabelMap labels;
    for (const auto& r : topic.resources) labels.emplace(r.resource_id, r.label);
    return labels;
}

namespace {

Label label_for(const LabelMap& labels, const std::string& id) {
    auto it = labels.find(id);
    if (it == labels.end()) {
        throw MetricError("no label for ranked resource " + id);
    }
    return it->second;
}

}  // namespace

bool has_pairs(const RankedList& ranked, const LabelMap& labels) {
    bool acc = false, rej = false;
    for (const auto& e : ranked.entries) {
        (label_for(labels, e.resource_id) == Label::accepted ? acc : rej) = true;
    }
    return acc && rej;
}

PairAccuracy pairwise_accuracy(const RankedList& ranked, const LabelMap& labels) {
    // Walking top to bottom, each rejected entry is correctly resolved against
    // every accepted entry already passed.
    std::size_t accepted_above = 0, accepted = 0, rejected = 0, correct = 0;
    for (const auto& e : ranked.entries) {
        if (label_for(labels, e.resource_id) == Label::accepted) {
            ++accepted_above;
            ++accepted;
        } else {
            correct += accepted_above;
            ++rejected;
        }
    }
    const std::size_t pairs = accepted * rejected;
    if (pairs == 0) {
        throw MetricError("ranking for topic " + ranked.topic_id + " (reference " +
                          ranked.reference_id + ") has no accepted-rejected pair");
    }
    return {static_cast<double>(correct) / static_cast<double>(pairs), correct, pairs};
}

double precision_at_k(const RankedList& ranked, const LabelMap& labels, std::size_t k) {
    if (k == 0) throw MetricError("precision_at_k: k must be >= 1");
    const std::size_t top = std::min(k, ranked.entries.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < top; ++i) {
        if (label_for(labels, ranked.entries[i].resource_id) == Label::accepted) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

MetricRow topic_metrics(std::span<const RankedList> rankings, const LabelMap& labels,
                        std::span<const std::size_t> cutoffs) {
    if (rankings.empty()) throw MetricError("topic_metrics: no rankings");
    MetricRow row;
    row.topic_id = rankings.front().topic_id;
    row.model_id = rankings.front().model_id;
    row.reference_count = rankings.size();

    std::vector<double> acc;
    std::map<std::size_t, std::vector<double>> prec;
    for (const auto& r : rankings) {
        if (r.topic_id != row.topic_id || r.model_id != row.model_id) {
            throw MetricError("topic_metrics: rankings mix topics or models");
        }
        auto pa = pairwise_accuracy(r, labels);
        if (acc.empty()) {
            row.pair_count = pa.pair_count;
        } else if (pa.pair_count != row.pair_count) {
            throw MetricError("topic_metrics: rankings of topic " + row.topic_id +
                              " disagree on pair count");
        }
        acc.push_back(pa.accuracy);
        for (auto k : cutoffs) prec[k].push_back(precision_at_k(r, labels, k));
    }
    row.accuracy = mean(acc);
    for (const auto& [k, values] : prec) row.precision_at[k] = mean(values);
    return row;
}

double mean(std::span<const double> xs) {
    if (xs.empty()) throw MetricError("mean of empty sequence");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_sd(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

ModelSummary summarize_model(std::span<const MetricRow> rows) {
    if (rows.empty()) throw MetricError("summarize_model: no rows");
    ModelSummary s;
    s.model_id = rows.front().model_id;
    s.topic_count = rows.size();
    std::vector<double> acc;
    std::map<std::size_t, std::vector<double>> prec;
    for (const auto& r : rows) {
        if (r.model_id != s.model_id) {
            throw MetricError("summarize_model: rows from several models");
        }
        acc.push_back(r.accuracy);
        for (const auto& [k, v] : r.precision_at) prec[k].push_back(v);
    }
    s.mean_accuracy = mean(acc);
    s.sd_accuracy = sample_sd(acc);
    for (const auto& [k, values] : prec) {
        if (values.size() != rows.size()) {
            throw MetricError("summarize_model: P@" + std::to_string(k) +
                              " missing on some rows");
        }
        s.mean_precision_at[k] = mean(values);
        s.sd_precision_at[k] = sample_sd(values);
    }
    return s;
}

std::vector<ModelSummary> summarize_models(std::span<const MetricRow> rows) {
    std::map<std::string, std::vector<MetricRow>> by_model;
    for (const auto& r : rows) by_model[r.model_id].push_back(r);
    std::vector<ModelSummary> out;
    for (const auto& [_, model_rows] : by_model) out.push_back(summarize_model(model_rows));
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.mean_accuracy != b.mean_accuracy) return a.mean_accuracy > b.mean_accuracy;
        return a.model_id < b.model_id;
    });
    return out;
}

std::vector<DomainAggregate> aggregate_by_domain(std::span<const MetricRow> rows,
                                                 const corpus::Corpus& corpus) {
    std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
    for (const auto& r : rows) {
        const auto* topic = corpus.find(r.topic_id);
        if (topic == nullptr) {
            throw MetricError("aggregate_by_domain: unknown topic " + r.topic_id);
        }
        groups[{topic->domain, r.model_id}].push_back(r.accuracy);
    }
    std::vector<DomainAggregate> out;
    for (const auto& [key, values] : groups) {
        out.push_back({key.first, key.second, mean(values), values.size()});
    }
    return out;
}

PairAccuracy generated_resource_accuracy(const RankedList& ranked, const LabelMap& labels) {
    return pairwise_accuracy(ranked, labels);
}

std::vector<GeneratedCell> tabulate_generated(std::span<const GeneratedEvaluation> evaluations) {
    std::vector<GeneratedCell> cells;
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> scores;
    for (const auto& e : evaluations) {
        auto it = std::find_if(cells.begin(), cells.end(), [&](const auto& c) {
            return c.model_id == e.model_id && c.generation_tag == e.generation_tag &&
                   c.domain == e.domain;
        });
        if (it == cells.end()) {
            cells.push_back({e.model_id, e.generation_tag, e.domain, 0, 0, std::nullopt, 0});
            it = std::prev(cells.end());
        }
        it->generated_count += e.generated_count;
        it->accepted_count += e.accepted_count;
        if (e.accuracy) scores[{e.model_id, e.generation_tag, e.domain}].push_back(*e.accuracy);
    }
    for (auto& c : cells) {
        auto s = scores.find({c.model_id, c.generation_tag, c.domain});
        if (s != scores.end()) {
            c.ranking_accuracy = mean(s->second);
            c.scored_topics = s->second.size();
        }
    }
    return cells;
}

namespace {

using csv::format_double;

std::string precision_field(const std::map<std::size_t, double>& p, std::size_t k) {
    auto it = p.find(k);
    if (it == p.end()) throw MetricError("missing precision_at_" + std::to_string(k));
    return format_double(it->second);
}

void header(std::ostream& out, std::string_view h) { out << h << '\n'; }

}  // namespace

void write_metric_rows(std::ostream& out, std::span<const MetricRow> rows) {
    header(out, kMetricHeader);
    for (const auto& r : rows) {
        csv::write_row(out, {r.model_id, r.topic_id, r.domain, format_double(r.accuracy),
                             precision_field(r.precision_at, 3), precision_field(r.precision_at, 5),
                             std::to_string(r.pair_count), std::to_string(r.reference_count)});
    }
}

std::vector<MetricRow> read_metric_rows(std::istream& in) {
    auto rows = csv::read_all(in);
    if (rows.empty()) throw MetricError("metric CSV is empty");
    {
        std::ostringstream h;
        csv::write_row(h, rows.front());
        auto got = h.str();
        got.pop_back();
        if (got != kMetricHeader) {
            throw MetricError("metric CSV header mismatch: got \"" + got + "\"");
        }
    }
    std::vector<MetricRow> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i];
        if (f.size() == 1 && f[0].empty()) continue;
        if (f.size() != 8) {
            throw MetricError("metric CSV line " + std::to_string(i + 1) + ": expected 8 fields");
        }
        try {
            MetricRow r;
            r.model_id = f[0];
            r.topic_id = f[1];
            r.domain = f[2];
            r.accuracy = csv::parse_double(f[3]);
            r.precision_at[3] = csv::parse_double(f[4]);
            r.precision_at[5] = csv::parse_double(f[5]);
            r.pair_count = std::stoul(f[6]);
            r.reference_count = std::stoul(f[7]);
            out.push_back(std::move(r));
        } catch (const std::invalid_argument& e) {
            throw MetricError("metric CSV line " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

void write_summaries(std::ostream& out, std::span<const ModelSummary> summaries) {
    header(out, kSummaryHeader);
    for (const auto& s : summaries) {
        csv::write_row(out, {s.model_id, format_double(s.mean_accuracy),
                             format_double(s.sd_accuracy), precision_field(s.mean_precision_at, 3),
                             precision_field(s.sd_precision_at, 3),
                             precision_field(s.mean_precision_at, 5),
                             precision_field(s.sd_precision_at, 5), std::to_string(s.topic_count)});
    }
}

void write_domain_aggregates(std::ostream& out, std::span<const DomainAggregate> aggregates) {
    header(out, kDomainHeader);
    for (const auto& a : aggregates) {
        csv::write_row(out, {a.domain, a.model_id, format_double(a.mean_accuracy),
                             std::to_string(a.topic_count)});
    }
}

void write_generated_cells(std::ostream& out, std::span<const GeneratedCell> cells) {
    header(out, kGeneratedHeader);
    for (const auto& c : cells) {
        csv::write_row(out, {c.model_id, c.generation_tag, c.domain, std::to_string(c.generated_count),
                             std::to_string(c.accepted_count),
                             c.ranking_accuracy ? format_double(*c.ranking_accuracy) : "",
                             std::to_string(c.scored_topics)});
    }
}

}  // namespace alignrank::metrics
