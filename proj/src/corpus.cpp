// SPDX-License-Identifier: Apache-2.0
#include "alignrank/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace alignrank::corpus {

using nlohmann::json;

std::string_view to_string(Label label) {
    return label == Label::accepted ? "accepted" : "rejected";
}

std::string_view to_string(Origin origin) {
    return origin == Origin::collected ? "collected" : "generated";
}

Label parse_label(std::string_view text) {
    if (text == "accepted") return Label::accepted;
    if (text == "rejected") return Label::rejected;
    throw std::invalid_argument("unknown label \"" + std::string(text) +
                                "\" (expected \"accepted\" or \"rejected\")");
}

Origin parse_origin(std::string_view text) {
    if (text == "collected") return Origin::collected;
    if (text == "generated") return Origin::generated;
    throw std::invalid_argument("unknown origin \"" + std::string(text) +
                                "\" (expected \"collected\" or \"generated\")");
}

std::size_t Topic::count(Label label) const {
    return static_cast<std::size_t>(std::count_if(
        resources.begin(), resources.end(), [&](const auto& r) { return r.label == label; }));
}

std::size_t Topic::count(Label label, Origin origin) const {
    return static_cast<std::size_t>(
        std::count_if(resources.begin(), resources.end(),
                      [&](const auto& r) { return r.label == label && r.origin == origin; }));
}

const ResourceRecord* Topic::find(std::string_view resource_id) const {
    auto it = std::find_if(resources.begin(), resources.end(),
                           [&](const auto& r) { return r.resource_id == resource_id; });
    return it == resources.end() ? nullptr : &*it;
}

const Topic* Corpus::find(std::string_view topic_id) const {
    auto it = std::find_if(topics.begin(), topics.end(),
                           [&](const auto& t) { return t.topic_id == topic_id; });
    return it == topics.end() ? nullptr : &*it;
}

std::size_t Corpus::resource_count() const {
    std::size_t n = 0;
    for (const auto& t : topics) n += t.resources.size();
    return n;
}

FormatError::FormatError(std::size_t line, std::string field, const std::string& message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) +
                                        (field.empty() ? "" : ", field \"" + field + "\"") +
                                        ": " + message
                                  : message),
      line_(line),
      field_(std::move(field)) {}

namespace {

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n\f\v");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n\f\v");
    return std::string(s.substr(b, e - b + 1));
}

json parse_line(const std::string& line, std::size_t lineno) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        throw FormatError(lineno, "", std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) {
        throw FormatError(lineno, "", "expected a JSON object");
    }
    return obj;
}

const json& require(const json& obj, const char* key, std::size_t lineno) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw FormatError(lineno, key, "missing required field");
    }
    return *it;
}

std::string require_string(const json& obj, const char* key, std::size_t lineno) {
    const auto& v = require(obj, key, lineno);
    if (!v.is_string()) {
        throw FormatError(lineno, key, "expected a string");
    }
    return v.get<std::string>();
}

std::int64_t require_integer(const json& obj, const char* key, std::size_t lineno) {
    const auto& v = require(obj, key, lineno);
    if (!v.is_number_integer()) {
        throw FormatError(lineno, key, "expected an integer");
    }
    return v.get<std::int64_t>();
}

void reject_unknown_keys(const json& obj, const std::set<std::string_view>& allowed,
                         std::size_t lineno) {
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) {
            throw FormatError(lineno, key, "unknown field");
        }
    }
}

const std::set<std::string_view> kRecordKeys = {
    "topic_id",      "topic_title", "domain", "resource_id",   "transcript",
    "label",         "baseline_rank", "origin", "generation_tag"};

const std::set<std::string_view> kScoreKeys = {"participant_id", "topic_id", "group",
                                               "score"};

}  // namespace

Corpus parse_corpus(std::istream& in) {
    Corpus corpus;
    std::unordered_map<std::string, std::size_t> topic_index;
    std::unordered_map<std::string, std::unordered_set<std::string>> seen_ids;

    std::string line;
    std::size_t lineno = 0;
    bool any_record = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank(line)) continue;
        json obj = parse_line(line, lineno);

        if (auto meta = obj.find(kMetadataKey); meta != obj.end()) {
            if (any_record || !corpus.metadata.empty() || obj.size() != 1) {
                throw FormatError(lineno, std::string(kMetadataKey),
                                  "metadata must be the only key of the first record");
            }
            if (!meta->is_object()) {
                throw FormatError(lineno, std::string(kMetadataKey), "expected an object");
            }
            for (const auto& [k, v] : meta->items()) {
                if (!v.is_string()) {
                    throw FormatError(lineno, std::string(kMetadataKey) + "." + k,
                                      "metadata values must be strings");
                }
                corpus.metadata[k] = v.get<std::string>();
            }
            continue;
        }
        any_record = true;
        reject_unknown_keys(obj, kRecordKeys, lineno);

        ResourceRecord rec;
        rec.topic_id = require_string(obj, "topic_id", lineno);
        auto title = require_string(obj, "topic_title", lineno);
        auto domain = require_string(obj, "domain", lineno);
        rec.resource_id = require_string(obj, "resource_id", lineno);
        rec.transcript = require_string(obj, "transcript", lineno);
        try {
            rec.label = parse_label(require_string(obj, "label", lineno));
        } catch (const std::invalid_argument& e) {
            throw FormatError(lineno, "label", e.what());
        }
        auto rank = require_integer(obj, "baseline_rank", lineno);
        if (rank < 1 || rank > std::numeric_limits<int>::max()) {
            throw FormatError(lineno, "baseline_rank", "must be a positive integer");
        }
        rec.baseline_rank = static_cast<int>(rank);
        try {
            rec.origin = parse_origin(require_string(obj, "origin", lineno));
        } catch (const std::invalid_argument& e) {
            throw FormatError(lineno, "origin", e.what());
        }
        if (obj.contains("generation_tag")) {
            rec.generation_tag = require_string(obj, "generation_tag", lineno);
        }

        auto [it, inserted] = topic_index.try_emplace(rec.topic_id, corpus.topics.size());
        if (inserted) {
            corpus.topics.push_back(Topic{rec.topic_id, title, domain, {}});
        }
        Topic& topic = corpus.topics[it->second];
        if (topic.title != title) {
            throw FormatError(lineno, "topic_title",
                              "differs from earlier records of topic \"" + rec.topic_id + "\"");
        }
        if (topic.domain != domain) {
            throw FormatError(lineno, "domain",
                              "differs from earlier records of topic \"" + rec.topic_id + "\"");
        }
        if (!seen_ids[rec.topic_id].insert(rec.resource_id).second) {
            throw FormatError(lineno, "resource_id",
                              "duplicate resource_id \"" + rec.resource_id + "\" in topic \"" +
                                  rec.topic_id + "\"");
        }
        topic.resources.push_back(std::move(rec));
    }
    return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open corpus file " + path.string());
    }
    return parse_corpus(in);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
    if (!corpus.metadata.empty()) {
        json meta = json::object();
        for (const auto& [k, v] : corpus.metadata) meta[k] = v;
        out << json{{kMetadataKey, meta}}.dump() << '\n';
    }
    for (const auto& topic : corpus.topics) {
        for (const auto& r : topic.resources) {
            json obj = {{"topic_id", topic.topic_id},
                        {"topic_title", topic.title},
                        {"domain", topic.domain},
                        {"resource_id", r.resource_id},
                        {"transcript", r.transcript},
                        {"label", to_string(r.label)},
                        {"baseline_rank", r.baseline_rank.value_or(0)},
                        {"origin", to_string(r.origin)}};
            if (r.generation_tag) obj["generation_tag"] = *r.generation_tag;
            out << obj.dump() << '\n';
        }
    }
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write corpus file " + path.string());
    }
    write_corpus(out, corpus);
}

bool is_evaluable(const Topic& topic) {
    return topic.count(Label::accepted) > 0 && topic.count(Label::rejected) > 0;
}

ValidationReport validate_corpus(const Corpus& corpus) {
    ValidationReport report;
    auto error = [&](std::string loc, std::string msg) {
        report.errors.push_back({std::move(loc), std::move(msg)});
    };

    std::unordered_set<std::string> topic_ids;
    for (const auto& topic : corpus.topics) {
        const std::string tloc = "topic " + topic.topic_id;
        if (topic.topic_id.empty()) error(tloc, "empty topic_id");
        if (!topic_ids.insert(topic.topic_id).second) error(tloc, "duplicate topic_id");
        if (trim(topic.domain).empty()) error(tloc, "domain is empty");

        std::unordered_set<std::string> resource_ids;
        std::unordered_map<int, std::string> collected_ranks;
        for (const auto& r : topic.resources) {
            const std::string rloc = tloc + "/" + r.resource_id;
            if (r.resource_id.empty()) error(rloc, "empty resource_id");
            if (!resource_ids.insert(r.resource_id).second) error(rloc, "duplicate resource_id");
            if (r.topic_id != topic.topic_id) {
                error(rloc, "record topic_id \"" + r.topic_id + "\" does not match its topic");
            }
            if (trim(r.transcript).empty()) error(rloc, "transcript is empty");
            if (!r.baseline_rank) {
                error(rloc, "missing baseline_rank");
            } else if (*r.baseline_rank < 1) {
                error(rloc, "baseline_rank must be >= 1");
            } else if (r.origin == Origin::collected) {
                auto [it, inserted] = collected_ranks.try_emplace(*r.baseline_rank, r.resource_id);
                if (!inserted) {
                    error(rloc, "baseline_rank " + std::to_string(*r.baseline_rank) +
                                    " already used by " + it->second);
                }
            }
            if (r.origin == Origin::generated && !r.generation_tag) {
                error(rloc, "generated resource without generation_tag");
            }
            if (r.origin == Origin::collected && r.generation_tag) {
                error(rloc, "collected resource must not carry a generation_tag");
            }
        }

        if (topic.count(Label::rejected) == 0) {
            report.warnings.push_back({tloc, "no rejected resources; excluded from accuracy"});
        } else if (topic.count(Label::accepted) == 0) {
            report.warnings.push_back({tloc, "no accepted resources; excluded from accuracy"});
        } else {
            ++report.evaluable_topic_count;
        }
    }
    return report;
}

Corpus filter_evaluable(const Corpus& corpus) {
    Corpus out;
    out.metadata = corpus.metadata;
    for (const auto& topic : corpus.topics) {
        if (is_evaluable(topic)) out.topics.push_back(topic);
    }
    return out;
}

Topic collected_view(const Topic& topic) {
    Topic out{topic.topic_id, topic.title, topic.domain, {}};
    for (const auto& r : topic.resources) {
        if (r.origin == Origin::collected) out.resources.push_back(r);
    }
    return out;
}

Topic generated_view(const Topic& topic, std::string_view generation_tag) {
    Topic out{topic.topic_id, topic.title, topic.domain, {}};
    for (const auto& r : topic.resources) {
        if (r.origin == Origin::generated && r.generation_tag == generation_tag) {
            out.resources.push_back(r);
        }
    }
    return out;
}

std::vector<std::string> generation_tags(const Topic& topic) {
    std::vector<std::string> tags;
    for (const auto& r : topic.resources) {
        if (r.origin == Origin::generated && r.generation_tag &&
            std::find(tags.begin(), tags.end(), *r.generation_tag) == tags.end()) {
            tags.push_back(*r.generation_tag);
        }
    }
    return tags;
}

std::array<std::size_t, 3> LearnerScoreTable::group_sizes() const {
    std::array<std::size_t, 3> sizes{};
    for (const auto& r : rows) ++sizes.at(static_cast<std::size_t>(r.group - 1));
    return sizes;
}

std::vector<std::vector<double>> LearnerScoreTable::scores_by_group() const {
    std::vector<std::vector<double>> groups(3);
    for (const auto& r : rows) groups.at(static_cast<std::size_t>(r.group - 1)).push_back(r.score);
    return groups;
}

LearnerScoreTable parse_learner_scores(std::istream& in) {
    LearnerScoreTable table;
    std::unordered_set<std::string> participants;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank(line)) continue;
        json obj = parse_line(line, lineno);
        reject_unknown_keys(obj, kScoreKeys, lineno);

        LearnerScore row;
        row.participant_id = require_string(obj, "participant_id", lineno);
        row.topic_id = require_string(obj, "topic_id", lineno);
        auto group = require_integer(obj, "group", lineno);
        if (group < 1 || group > 3) {
            throw FormatError(lineno, "group", "must be 1, 2 or 3, got " + std::to_string(group));
        }
        row.group = static_cast<int>(group);
        const auto& score = require(obj, "score", lineno);
        if (!score.is_number()) {
            throw FormatError(lineno, "score", "expected a number");
        }
        row.score = score.get<double>();
        if (!std::isfinite(row.score)) {
            throw FormatError(lineno, "score", "must be finite");
        }
        if (!participants.insert(row.participant_id).second) {
            throw FormatError(lineno, "participant_id",
                              "duplicate participant_id \"" + row.participant_id + "\"");
        }
        table.rows.push_back(std::move(row));
    }
    if (table.rows.empty()) {
        throw FormatError(0, "", "no rows");
    }
    return table;
}

LearnerScoreTable load_learner_scores(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open learner score file " + path.string());
    }
    return parse_learner_scores(in);
}

void write_learner_scores(std::ostream& out, const LearnerScoreTable& table) {
    for (const auto& r : table.rows) {
        out << json{{"participant_id", r.participant_id},
                    {"topic_id", r.topic_id},
                    {"group", r.group},
                    {"score", r.score}}
                   .dump()
            << '\n';
    }
}

}  // namespace alignrank::corpus
