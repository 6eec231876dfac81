// SPDX-License-Identifier: Apache-2.0
#include "alignrank/app/report.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "alignrank/csv.hpp"

namespace alignrank::app {

using nlohmann::json;
using corpus::Label;

std::string tool_version() {
#ifdef ALIGNRANK_VERSION
    return ALIGNRANK_VERSION;
#else
    return "dev";
#endif
}

bool scorable_with_reference(const corpus::Topic& collected) {
    return collected.count(Label::accepted) >= 2 && collected.count(Label::rejected) >= 1;
}

namespace {

const rank::EmbeddingsById& topic_vectors(const ModelEmbeddings& model,
                                          const std::string& topic_id) {
    static const rank::EmbeddingsById empty;
    auto it = model.vectors.find(topic_id);
    return it == model.vectors.end() ? empty : it->second;
}

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

}  // namespace

Evaluation evaluate(const corpus::Corpus& corpus, const std::vector<ModelEmbeddings>& models,
                    const EvaluationOptions& options) {
    Evaluation eval;
    std::vector<corpus::Topic> collected;
    for (const auto& topic : corpus.topics) {
        auto view = corpus::collected_view(topic);
        if (scorable_with_reference(view)) {
            eval.scored_topics.push_back(topic.topic_id);
            collected.push_back(std::move(view));
        } else if (!view.resources.empty()) {
            eval.notices.push_back("topic " + topic.topic_id +
                                   " excluded: needs at least 2 accepted and 1 rejected "
                                   "collected resources (the reference is left out of its "
                                   "own ranking)");
        }
    }

    for (const auto& model : models) {
        for (const auto& topic : collected) {
            const auto& vecs = topic_vectors(model, topic.topic_id);
            auto lists = rank::rank_topic(topic, vecs, options.policy);
            for (auto& l : lists) l.model_id = model.config.model_id;
            auto row = metrics::topic_metrics(lists, metrics::labels_of(topic));
            row.domain = topic.domain;
            eval.rows.push_back(std::move(row));
            std::move(lists.begin(), lists.end(), std::back_inserter(eval.rankings));
        }

        for (const auto& topic : corpus.topics) {
            const auto tags = corpus::generation_tags(topic);
            if (tags.empty()) continue;
            const auto pool = corpus::collected_view(topic);
            if (pool.count(Label::accepted) == 0) {
                eval.notices.push_back("topic " + topic.topic_id +
                                       ": generated resources skipped, no accepted collected "
                                       "resource to serve as reference");
                continue;
            }
            for (const auto& tag : tags) {
                const auto gen = corpus::generated_view(topic, tag);
                auto ranking = rank::rank_against_random_reference(
                    pool, gen, topic_vectors(model, topic.topic_id), options.policy.seed,
                    topic.topic_id + '\x1f' + tag);
                ranking.model_id = model.config.model_id;
                metrics::GeneratedEvaluation ge{model.config.model_id, topic.topic_id,
                                                topic.domain,          tag,
                                                gen.resources.size(), gen.count(Label::accepted),
                                                std::nullopt};
                const auto labels = metrics::labels_of(gen);
                if (metrics::has_pairs(ranking, labels)) {
                    ge.accuracy = metrics::generated_resource_accuracy(ranking, labels).accuracy;
                }
                eval.generated.push_back(std::move(ge));
                eval.rankings.push_back(std::move(ranking));
            }
        }
    }

    if (options.include_baseline) {
        for (const auto& topic : collected) {
            const auto list = rank::baseline_ranking(topic);
            auto row = metrics::topic_metrics(std::span(&list, 1), metrics::labels_of(topic));
            row.domain = topic.domain;
            eval.rows.push_back(std::move(row));
            eval.rankings.push_back(list);
        }
    }

    if (!eval.rows.empty()) {
        eval.summaries = metrics::summarize_models(eval.rows);
        eval.domains = metrics::aggregate_by_domain(eval.rows, corpus);
    }
    eval.generated_cells = metrics::tabulate_generated(eval.generated);
    return eval;
}

ModelEmbeddings load_cached_embeddings(const embed::ProviderConfig& config,
                                       const corpus::Corpus& corpus,
                                       const embed::EmbeddingCache& cache,
                                       std::vector<std::string>& gaps) {
    ModelEmbeddings out{config, {}};
    for (const auto& topic : corpus.topics) {
        for (const auto& r : topic.resources) {
            auto v = embed::cached_embedding(config, r.transcript, cache);
            if (!v) {
                gaps.push_back(config.model_id + ": " + topic.topic_id + "/" + r.resource_id);
                continue;
            }
            out.vectors[topic.topic_id][r.resource_id] = std::move(*v);
        }
    }
    return out;
}

json RunManifest::to_json() const {
    json j = {{"tool_version", tool_version}, {"input_sha256", input_sha256}};
    if (!providers.empty()) {
        json ps = json::array();
        for (const auto& p : providers) ps.push_back(embed::to_json(p));
        j["providers"] = ps;
    }
    if (policy) {
        j["reference_policy"] = {{"mode", rank::to_string(policy->mode)}, {"seed", policy->seed}};
        j["notes"] = {
            {"reference_excluded_from_own_ranking", true},
            {"per_topic_aggregation", "unweighted mean over reference rankings"},
            {"precision_at_k", "averaged over reference rankings; lists shorter than k keep "
                               "denominator k"},
            {"score_ties", "broken by ascending resource_id"}};
    }
    if (tie_correction) j["tie_correction"] = *tie_correction;
    if (alpha) j["alpha"] = *alpha;
    if (seed) j["seed"] = *seed;
    if (!generated_at.empty()) j["generated_at"] = generated_at;
    return j;
}

void write_markdown_tables(std::ostream& out, const Evaluation& eval,
                           const RunManifest& manifest) {
    out << "<!-- " << manifest.to_json().dump() << " -->\n\n";
    out << "## Average ranking accuracy\n\n| Model | Accuracy ± SD | Topics |\n|---|---|---|\n";
    for (const auto& s : eval.summaries) {
        out << "| " << s.model_id << " | " << fixed(s.mean_accuracy, 2) << " ± "
            << fixed(s.sd_accuracy, 2) << " | " << s.topic_count << " |\n";
    }

    auto by_p3 = eval.summaries;
    std::stable_sort(by_p3.begin(), by_p3.end(), [](const auto& a, const auto& b) {
        return a.mean_precision_at.at(3) > b.mean_precision_at.at(3);
    });
    out << "\n## Precision@k\n\n| Model | Precision@3 | Precision@5 |\n|---|---|---|\n";
    for (const auto& s : by_p3) {
        out << "| " << s.model_id << " | " << fixed(s.mean_precision_at.at(3), 2) << " ± "
            << fixed(s.sd_precision_at.at(3), 2) << " | " << fixed(s.mean_precision_at.at(5), 2)
            << " ± " << fixed(s.sd_precision_at.at(5), 2) << " |\n";
    }

    out << "\n## Average ranking accuracy per domain\n\n| Domain | Model | Accuracy | Topics "
           "|\n|---|---|---|---|\n";
    for (const auto& d : eval.domains) {
        out << "| " << d.domain << " | " << d.model_id << " | " << fixed(d.mean_accuracy, 2)
            << " | " << d.topic_count << " |\n";
    }

    if (!eval.generated_cells.empty()) {
        out << "\n## Generated resources\n\n| Model | Individualization aspect | Domain | "
               "Generated | Accepted | Ranking accuracy |\n|---|---|---|---|---|---|\n";
        for (const auto& c : eval.generated_cells) {
            out << "| " << c.model_id << " | " << c.generation_tag << " | " << c.domain << " | "
                << c.generated_count << " | " << c.accepted_count << " | "
                << (c.ranking_accuracy ? fixed(*c.ranking_accuracy, 2) : "n/a") << " |\n";
        }
    }
    if (!eval.notices.empty()) {
        out << "\n## Notices\n\n";
        for (const auto& n : eval.notices) out << "- " << n << '\n';
    }
}

void write_evaluation(const std::filesystem::path& dir, const Evaluation& eval,
                      const RunManifest& manifest) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
        return f;
    };
    {
        auto f = open("per_topic.csv");
        metrics::write_metric_rows(f, eval.rows);
    }
    {
        auto f = open("summary.csv");
        metrics::write_summaries(f, eval.summaries);
    }
    {
        auto f = open("per_domain.csv");
        metrics::write_domain_aggregates(f, eval.domains);
    }
    {
        auto f = open("generated.csv");
        metrics::write_generated_cells(f, eval.generated_cells);
    }
    {
        auto f = open("rankings.jsonl");
        rank::write_rankings(f, eval.rankings);
    }
    {
        auto f = open("tables.md");
        write_markdown_tables(f, eval, manifest);
    }
    {
        auto f = open("manifest.json");
        json m = manifest.to_json();
        m["scored_topics"] = eval.scored_topics;
        m["notices"] = eval.notices;
        f << m.dump(2) << '\n';
    }
}

PivotedAccuracy pivot_accuracy(const std::vector<metrics::MetricRow>& rows) {
    PivotedAccuracy p;
    std::map<std::string, std::size_t> topic_idx, model_idx;
    for (const auto& r : rows) {
        if (topic_idx.try_emplace(r.topic_id, p.topics.size()).second) p.topics.push_back(r.topic_id);
        if (model_idx.try_emplace(r.model_id, p.models.size()).second) p.models.push_back(r.model_id);
    }
    std::vector<std::vector<std::optional<double>>> cells(
        p.topics.size(), std::vector<std::optional<double>>(p.models.size()));
    std::vector<std::string> problems;
    for (const auto& r : rows) {
        auto& cell = cells[topic_idx[r.topic_id]][model_idx[r.model_id]];
        if (cell) problems.push_back("duplicate cell " + r.model_id + " x " + r.topic_id);
        cell = r.accuracy;
    }
    p.matrix = stats::Matrix(p.topics.size(), p.models.size());
    for (std::size_t t = 0; t < p.topics.size(); ++t) {
        for (std::size_t m = 0; m < p.models.size(); ++m) {
            if (!cells[t][m]) {
                problems.push_back("missing cell " + p.models[m] + " x " + p.topics[t]);
            } else {
                p.matrix(t, m) = *cells[t][m];
            }
        }
    }
    if (!problems.empty()) {
        std::string msg = "incomplete model x topic matrix:";
        for (const auto& s : problems) msg += "\n  " + s;
        throw stats::StatsError(msg);
    }
    return p;
}

FriedmanReport friedman_report(const PivotedAccuracy& pivot, double alpha, bool tie_correction) {
    if (pivot.models.size() < 2 || pivot.topics.size() < 2) {
        throw stats::StatsError("need at least 2 models and 2 topics, got " +
                                std::to_string(pivot.models.size()) + " model(s) and " +
                                std::to_string(pivot.topics.size()) + " topic(s)");
    }
    FriedmanReport rep;
    rep.alpha = alpha;
    rep.models = pivot.models;
    rep.friedman = stats::friedman_test(pivot.matrix, tie_correction);
    if (stats::nemenyi_q(pivot.models.size(), alpha)) {
        rep.nemenyi = stats::nemenyi(pivot.matrix, alpha, pivot.models);
    } else {
        rep.nemenyi_notice = "Nemenyi skipped: critical-value table covers 2 <= k <= 20 and "
                             "alpha in {0.05, 0.10} (k = " +
                             std::to_string(pivot.models.size()) + ", alpha = " + sci(alpha) + ")";
    }
    return rep;
}

json to_json(const FriedmanReport& rep, const RunManifest& manifest) {
    const auto& f = rep.friedman;
    json mean_ranks = json::object();
    for (std::size_t i = 0; i < rep.models.size(); ++i) mean_ranks[rep.models[i]] = f.mean_ranks[i];
    json j = {{"manifest", manifest.to_json()},
              {"friedman",
               {{"chi_square", f.chi_square},
                {"df", f.df},
                {"p_value", f.p_value},
                {"kendalls_w", f.kendalls_w},
                {"n", f.n},
                {"k", f.k},
                {"tie_corrected", f.tie_corrected},
                {"degenerate", f.degenerate},
                {"rank_direction", "higher_is_better"},
                {"mean_ranks", mean_ranks},
                {"significant", !f.degenerate && f.p_value < rep.alpha}}}};
    if (rep.nemenyi) {
        const auto& n = *rep.nemenyi;
        json pairs = json::array();
        json matrix = json::object();
        for (const auto& m : rep.models) matrix[m] = json::object();
        for (const auto& p : n.pairs) {
            pairs.push_back({{"first", p.first},
                             {"second", p.second},
                             {"mean_rank_difference", p.mean_rank_difference},
                             {"significant", p.significant}});
            matrix[p.first][p.second] = p.significant;
            matrix[p.second][p.first] = p.significant;
        }
        j["nemenyi"] = {{"critical_difference", n.critical_difference},
                        {"alpha", n.alpha},
                        {"q", *stats::nemenyi_q(rep.models.size(), n.alpha)},
                        {"mean_ranks", n.mean_ranks},
                        {"pairs", pairs},
                        {"significance_matrix", matrix}};
    } else {
        j["nemenyi"] = nullptr;
        j["nemenyi_notice"] = rep.nemenyi_notice;
    }
    return j;
}

void write_friedman_summary(std::ostream& out, const FriedmanReport& rep) {
    const auto& f = rep.friedman;
    out << "Friedman test: chi2(" << f.df << ") = " << fixed(f.chi_square, 2)
        << ", p = " << sci(f.p_value) << ", Kendall's W = " << fixed(f.kendalls_w, 3)
        << " (n = " << f.n << " topics, k = " << f.k << " models"
        << (f.tie_corrected ? ", tie corrected" : "") << ")\n";
    if (f.degenerate) {
        out << "Every topic ties all models: no difference.\n";
    } else if (f.p_value < rep.alpha) {
        out << "Models differ significantly at alpha = " << sci(rep.alpha) << ".\n";
    } else {
        out << "No difference between models at alpha = " << sci(rep.alpha) << ".\n";
    }
    if (!rep.nemenyi) {
        out << rep.nemenyi_notice << '\n';
        return;
    }
    const auto& n = *rep.nemenyi;
    out << "Nemenyi critical difference = " << fixed(n.critical_difference, 3)
        << " (alpha = " << sci(n.alpha) << ")\n";
    for (const auto& p : n.pairs) {
        out << "  " << p.first << " vs " << p.second << ": mean rank difference "
            << fixed(p.mean_rank_difference, 3) << ", "
            << (p.significant ? "significant" : "not significant") << '\n';
    }
}

LearnerReport learner_report(const corpus::LearnerScoreTable& table, double alpha,
                             bool tie_correction) {
    const auto by_group = table.scores_by_group();
    LearnerReport rep;
    rep.alpha = alpha;
    std::vector<std::vector<double>> groups;
    for (std::size_t g = 0; g < by_group.size(); ++g) {
        if (by_group[g].empty()) continue;
        rep.groups.push_back(static_cast<int>(g + 1));
        groups.push_back(by_group[g]);
    }
    if (groups.size() < 2) {
        throw stats::StatsError("learner scores need at least 2 non-empty groups, got " +
                                std::to_string(groups.size()));
    }
    rep.kruskal_wallis = stats::kruskal_wallis(groups, tie_correction);
    rep.dunn_corrected = stats::dunn_test(groups, alpha, true);
    rep.dunn_uncorrected = stats::dunn_test(groups, alpha, false);
    rep.dunn = tie_correction ? rep.dunn_corrected : rep.dunn_uncorrected;
    return rep;
}

namespace {

json dunn_json(const stats::DunnResult& d, const std::vector<int>& groups) {
    json cmp = json::array();
    for (const auto& c : d.comparisons) {
        cmp.push_back({{"groups", {groups[c.first], groups[c.second]}},
                       {"z", c.z},
                       {"p_unadjusted", c.p_unadjusted},
                       {"p_bonferroni", c.p_bonferroni},
                       {"significant", c.significant_at_adjusted_alpha}});
    }
    return {{"alpha", d.alpha},
            {"adjusted_alpha", d.adjusted_alpha},
            {"tie_corrected", d.tie_corrected},
            {"comparisons", cmp}};
}

}  // namespace

json to_json(const LearnerReport& rep, const RunManifest& manifest) {
    const auto& kw = rep.kruskal_wallis;
    json groups = json::array();
    for (std::size_t i = 0; i < rep.groups.size(); ++i) {
        groups.push_back({{"group", rep.groups[i]},
                          {"n", kw.group_sizes[i]},
                          {"mean_rank", kw.group_mean_ranks[i]}});
    }
    return {{"manifest", manifest.to_json()},
            {"kruskal_wallis",
             {{"h_statistic", kw.h_statistic},
              {"df", kw.df},
              {"p_value", kw.p_value},
              {"total", kw.total},
              {"tie_corrected", kw.tie_corrected},
              {"degenerate", kw.degenerate},
              {"groups", groups}}},
            {"dunn", dunn_json(rep.dunn, rep.groups)},
            {"dunn_tie_corrected", dunn_json(rep.dunn_corrected, rep.groups)},
            {"dunn_uncorrected", dunn_json(rep.dunn_uncorrected, rep.groups)}};
}

void write_learner_table(std::ostream& out, const LearnerReport& rep) {
    const auto& kw = rep.kruskal_wallis;
    out << "| Rank | Group | N | Mean Rank |\n|---|---|---|---|\n";
    for (std::size_t i = 0; i < rep.groups.size(); ++i) {
        out << "| " << rep.groups[i] << " | Group " << rep.groups[i] << " | "
            << kw.group_sizes[i] << " | " << fixed(kw.group_mean_ranks[i], 1) << " |\n";
    }
    out << "\nPairwise comparisons (Dunn's test, alpha = " << fixed(rep.dunn.adjusted_alpha, 3)
        << (rep.dunn.tie_corrected ? ", tie corrected" : "") << ")\n\n"
        << "| Comparison | z | p | p (Bonferroni) | Verdict |\n|---|---|---|---|---|\n";
    for (const auto& c : rep.dunn.comparisons) {
        out << "| Group " << rep.groups[c.first] << " vs. Group " << rep.groups[c.second] << " | "
            << fixed(c.z, 4) << " | " << sci(c.p_unadjusted) << " | " << sci(c.p_bonferroni)
            << " | " << (c.significant_at_adjusted_alpha ? "Significant" : "Not Significant")
            << " |\n";
    }
    out << "\nKruskal-Wallis: chi2(" << kw.df << ", N = " << kw.total
        << ") = " << fixed(kw.h_statistic, 2) << ", p = " << sci(kw.p_value)
        << (kw.degenerate ? " (all observations tied)" : "") << '\n';
}

}  // namespace alignrank::app
