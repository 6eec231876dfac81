// SPDX-License-Identifier: Apache-2.0
#include "alignrank/app/commands.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "alignrank/app/report.hpp"
#include "alignrank/digest.hpp"

namespace alignrank::app {

using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kReported = 1;
constexpr int kUsage = 2;

struct Loaded {
    corpus::Corpus corpus;
    std::string digest;
};

// Loads and validates a corpus, printing problems to `err`. nullopt means the
// command should stop with kReported.
std::optional<Loaded> load_valid_corpus(const std::filesystem::path& path, std::ostream& err) {
    Loaded l;
    try {
        l.corpus = corpus::load_corpus(path);
    } catch (const std::exception& e) {
        err << "error: " << path.string() << ": " << e.what() << '\n';
        return std::nullopt;
    }
    l.digest = sha256_file_hex(path);
    const auto report = corpus::validate_corpus(l.corpus);
    for (const auto& e : report.errors) err << "error: " << e.location << ": " << e.message << '\n';
    if (!report.ok()) return std::nullopt;
    return l;
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << doc.dump(2) << '\n';
}

}  // namespace

int cmd_validate(const std::filesystem::path& corpus_path, bool as_json, std::ostream& out,
                 std::ostream& err) {
    if (!std::filesystem::is_regular_file(corpus_path)) {
        err << "error: cannot read corpus file " << corpus_path.string() << '\n';
        return kUsage;
    }
    auto issues = [](const std::vector<corpus::Issue>& list) {
        json a = json::array();
        for (const auto& i : list) a.push_back({{"location", i.location}, {"message", i.message}});
        return a;
    };
    corpus::Corpus c;
    try {
        c = corpus::load_corpus(corpus_path);
    } catch (const corpus::FormatError& e) {
        if (as_json) {
            json loc = json{{"location", "line " + std::to_string(e.line())},
                            {"field", e.field()},
                            {"message", e.what()}};
            out << json{{"ok", false}, {"errors", json::array({loc})}, {"warnings", json::array()}}
                       .dump(2)
                << '\n';
        } else {
            out << "error: " << e.what() << '\n';
        }
        return kReported;
    }
    const auto report = corpus::validate_corpus(c);
    if (as_json) {
        out << json{{"ok", report.ok()},
                    {"topic_count", c.topics.size()},
                    {"resource_count", c.resource_count()},
                    {"evaluable_topic_count", report.evaluable_topic_count},
                    {"errors", issues(report.errors)},
                    {"warnings", issues(report.warnings)}}
                   .dump(2)
            << '\n';
    } else {
        out << corpus_path.string() << ": " << c.topics.size() << " topic(s), "
            << c.resource_count() << " resource(s), " << report.evaluable_topic_count
            << " evaluable\n";
        for (const auto& e : report.errors) out << "error: " << e.location << ": " << e.message << '\n';
        for (const auto& w : report.warnings) {
            out << "warning: " << w.location << ": " << w.message << '\n';
        }
        out << (report.ok() ? "ok" : "invalid") << '\n';
    }
    return report.ok() ? kOk : kReported;
}

int cmd_embed(const std::filesystem::path& corpus_path,
              const std::filesystem::path& providers_path,
              const std::filesystem::path& cache_dir, std::ostream& out, std::ostream& err) {
    std::vector<embed::Provider> providers;
    try {
        for (const auto& cfg : embed::load_provider_configs(providers_path)) {
            providers.push_back(embed::make_provider(cfg));
        }
    } catch (const embed::ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kUsage;
    }
    auto loaded = load_valid_corpus(corpus_path, err);
    if (!loaded) return kReported;

    const embed::EmbeddingCache cache(cache_dir, [&](const std::string& m) {
        err << "warning: " << m << '\n';
    });
    int status = kOk;
    for (const auto& p : providers) {
        const auto before = p.backend->request_count();
        auto progress = [&](const embed::Progress& pr) {
            if (pr.done == pr.total || pr.done % 50 == 0) {
                err << p.config.model_id << ": " << pr.done << "/" << pr.total << '\n';
            }
        };
        embed::EmbedCorpusResult result;
        try {
            result = embed::embed_corpus(p, loaded->corpus, cache, progress);
        } catch (const embed::AggregateEmbedError& e) {
            result = e.partial();
            err << "error: " << e.what() << '\n';
            status = kReported;
        }
        out << p.config.model_id << ": " << result.computed << " resources embedded, "
            << result.cache_hits << " cache hits, " << (p.backend->request_count() - before)
            << " requests, " << result.failures.size() << " failures\n";
    }
    return status;
}

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err) {
    std::vector<embed::ProviderConfig> configs;
    try {
        configs = embed::load_provider_configs(args.providers_path);
    } catch (const embed::ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kUsage;
    }
    auto loaded = load_valid_corpus(args.corpus_path, err);
    if (!loaded) return kReported;
    const embed::EmbeddingCache cache(args.cache_dir, [&](const std::string& m) {
        err << "warning: " << m << '\n';
    });

    std::vector<ModelEmbeddings> models;
    std::vector<std::string> gaps;
    for (const auto& cfg : configs) {
        models.push_back(load_cached_embeddings(cfg, loaded->corpus, cache, gaps));
    }
    if (!gaps.empty()) {
        err << "error: " << gaps.size() << " embedding(s) missing from cache "
            << args.cache_dir.string() << " (run `embed` first):\n";
        for (const auto& g : gaps) err << "  " << g << '\n';
        return kReported;
    }

    RunManifest manifest;
    manifest.tool_version = tool_version();
    manifest.input_sha256 = loaded->digest;
    manifest.providers = configs;
    manifest.policy = args.policy;
    manifest.generated_at = args.timestamp;

    Evaluation eval;
    try {
        eval = evaluate(loaded->corpus, models, {args.policy, args.include_baseline});
        write_evaluation(args.out_dir, eval, manifest);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kReported;
    }
    for (const auto& n : eval.notices) err << "notice: " << n << '\n';
    out << "model_id,mean_accuracy,sd_accuracy,mean_p3,mean_p5,topics\n";
    for (const auto& s : eval.summaries) {
        out << s.model_id << ',' << s.mean_accuracy << ',' << s.sd_accuracy << ','
            << s.mean_precision_at.at(3) << ',' << s.mean_precision_at.at(5) << ','
            << s.topic_count << '\n';
    }
    out << "reports written to " << args.out_dir.string() << '\n';
    return kOk;
}

int cmd_stats(const StatsArgs& args, std::ostream& out, std::ostream& err) {
    std::ifstream in(args.input);
    if (!in) {
        err << "error: cannot read " << args.input.string() << '\n';
        return kUsage;
    }
    try {
        const auto rows = metrics::read_metric_rows(in);
        const auto pivot = pivot_accuracy(rows);
        const auto rep = friedman_report(pivot, args.alpha, args.tie_correction);
        RunManifest manifest;
        manifest.tool_version = tool_version();
        manifest.input_sha256 = sha256_file_hex(args.input);
        manifest.tie_correction = args.tie_correction;
        manifest.alpha = args.alpha;
        manifest.seed = args.seed;
        manifest.generated_at = args.timestamp;
        const json doc = to_json(rep, manifest);
        if (args.out_path) write_json_file(*args.out_path, doc);
        if (args.as_json) {
            out << doc.dump(2) << '\n';
        } else {
            write_friedman_summary(out, rep);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kReported;
    }
    return kOk;
}

int cmd_learner(const StatsArgs& args, std::ostream& out, std::ostream& err) {
    if (!std::filesystem::is_regular_file(args.input)) {
        err << "error: cannot read " << args.input.string() << '\n';
        return kUsage;
    }
    try {
        const auto table = corpus::load_learner_scores(args.input);
        const auto rep = learner_report(table, args.alpha, args.tie_correction);
        RunManifest manifest;
        manifest.tool_version = tool_version();
        manifest.input_sha256 = sha256_file_hex(args.input);
        manifest.tie_correction = args.tie_correction;
        manifest.alpha = args.alpha;
        manifest.seed = args.seed;
        manifest.generated_at = args.timestamp;
        const json doc = to_json(rep, manifest);
        if (args.out_path) write_json_file(*args.out_path, doc);
        if (args.as_json) {
            out << doc.dump(2) << '\n';
        } else {
            write_learner_table(out, rep);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kReported;
    }
    return kOk;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Rank educational resources by embedding alignment and evaluate the rankings"};
    app.set_version_flag("--version", tool_version());
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    bool as_json = false;
    std::filesystem::path cache_dir = ".alignrank-cache";
    std::filesystem::path providers;
    std::string policy = "all";
    std::string timestamp;
    app.add_option("--seed", seed, "Seed for random reference selection");
    app.add_flag("--json", as_json, "Machine-readable output");
    app.add_option("--cache-dir", cache_dir, "Embedding cache directory");
    app.add_option("--providers", providers, "Provider configuration file (JSON array)");
    app.add_option("--policy", policy, "Reference policy")->check(CLI::IsMember({"all", "random"}));
    app.add_option("--timestamp", timestamp, "Timestamp recorded in report manifests");
    app.fallthrough();

    std::filesystem::path input;
    std::filesystem::path out_dir = "reports";
    std::optional<std::filesystem::path> report_path;
    double alpha = 0.05;
    bool no_ties = false;
    bool no_baseline = false;

    auto* validate = app.add_subcommand("validate", "Check a corpus file");
    validate->add_option("corpus", input, "Corpus file (JSON lines)")->required();

    auto* embed_cmd = app.add_subcommand("embed", "Embed every resource into the cache");
    embed_cmd->add_option("corpus", input, "Corpus file (JSON lines)")->required();

    auto* evaluate_cmd = app.add_subcommand("evaluate", "Rank and score resources from the cache");
    evaluate_cmd->add_option("corpus", input, "Corpus file (JSON lines)")->required();
    evaluate_cmd->add_option("--out", out_dir, "Output directory for reports");
    evaluate_cmd->add_flag("--no-baseline", no_baseline, "Skip the source-platform baseline");

    auto* stats_cmd = app.add_subcommand("stats", "Friedman, Kendall's W and Nemenyi over models");
    stats_cmd->add_option("per_topic_csv", input, "per_topic.csv from evaluate")->required();

    auto* learner_cmd = app.add_subcommand("learner", "Kruskal-Wallis and Dunn over learner groups");
    learner_cmd->add_option("scores", input, "Learner score file (JSON lines)")->required();

    for (auto* sub : {stats_cmd, learner_cmd}) {
        sub->add_option("--alpha", alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
        sub->add_flag("--no-tie-correction", no_ties, "Disable tie correction");
        sub->add_option("--out", report_path, "Write the JSON report to this file");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kUsage;
    }

    if (validate->parsed()) return cmd_validate(input, as_json, out, err);
    if (embed_cmd->parsed() || evaluate_cmd->parsed()) {
        if (providers.empty()) {
            err << "error: --providers is required\n";
            return kUsage;
        }
    }
    if (embed_cmd->parsed()) return cmd_embed(input, providers, cache_dir, out, err);
    if (evaluate_cmd->parsed()) {
        EvaluateArgs a;
        a.corpus_path = input;
        a.providers_path = providers;
        a.cache_dir = cache_dir;
        a.out_dir = out_dir;
        a.policy = {policy == "all" ? rank::ReferenceMode::all_accepted
                                    : rank::ReferenceMode::single_random,
                    seed};
        a.timestamp = timestamp;
        a.include_baseline = !no_baseline;
        return cmd_evaluate(a, out, err);
    }
    StatsArgs s;
    s.input = input;
    s.alpha = alpha;
    s.tie_correction = !no_ties;
    s.as_json = as_json;
    s.out_path = report_path;
    s.seed = seed;
    s.timestamp = timestamp;
    return stats_cmd->parsed() ? cmd_stats(s, out, err) : cmd_learner(s, out, err);
}

}  // namespace alignrank::app
