// SPDX-License-Identifier: Apache-2.0
#include "alignrank/embed.hpp"

#include <algorithm>

namespace alignrank::embed {

std::string_view to_string(BudgetUnit unit) {
    return unit == BudgetUnit::characters ? "characters" : "whitespace_tokens";
}

BudgetUnit parse_budget_unit(std::string_view text) {
    if (text == "characters") return BudgetUnit::characters;
    if (text == "whitespace_tokens") return BudgetUnit::whitespace_tokens;
    throw std::invalid_argument("unknown budget unit \"" + std::string(text) + "\"");
}

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Byte length of the UTF-8 sequence starting at `pos`; malformed input
// advances one byte.
std::size_t code_point_length(std::string_view s, std::size_t pos) {
    auto lead = static_cast<unsigned char>(s[pos]);
    std::size_t len = 1;
    if (lead >= 0xF0 && lead <= 0xF4) {
        len = 4;
    } else if (lead >= 0xE0) {
        len = lead <= 0xEF ? 3 : 1;
    } else if (lead >= 0xC2) {
        len = 2;
    }
    if (pos + len > s.size()) return 1;
    for (std::size_t i = 1; i < len; ++i) {
        if ((static_cast<unsigned char>(s[pos + i]) & 0xC0) != 0x80) return 1;
    }
    return len;
}

std::vector<std::size_t> code_point_starts(std::string_view s) {
    std::vector<std::size_t> starts;
    starts.reserve(s.size() + 1);
    for (std::size_t pos = 0; pos < s.size(); pos += code_point_length(s, pos)) {
        starts.push_back(pos);
    }
    starts.push_back(s.size());
    return starts;
}

std::vector<Segment> by_characters(std::string_view text, std::size_t max_units) {
    const auto starts = code_point_starts(text);
    const std::size_t total = starts.size() - 1;
    std::vector<Segment> out;
    std::size_t p = 0;
    while (p < total) {
        std::size_t cut = total;
        if (total - p > max_units) {
            cut = p + max_units;
            for (std::size_t j = p + max_units; j-- > p;) {
                if (is_space(text[starts[j]])) {
                    cut = j + 1;
                    break;
                }
            }
        }
        out.push_back(Segment{std::string(text.substr(starts[p], starts[cut] - starts[p])),
                              out.size(), cut - p});
        p = cut;
    }
    return out;
}

std::vector<Segment> by_tokens(std::string_view text, std::size_t max_units) {
    std::vector<Segment> out;
    std::size_t pos = 0;
    const std::size_t n = text.size();
    while (pos < n) {
        const std::size_t begin = pos;
        while (pos < n && is_space(text[pos])) ++pos;
        std::size_t tokens = 0;
        while (pos < n && tokens < max_units) {
            while (pos < n && !is_space(text[pos])) ++pos;
            ++tokens;
            while (pos < n && is_space(text[pos])) ++pos;
        }
        out.push_back(Segment{std::string(text.substr(begin, pos - begin)), out.size(),
                              std::max<std::size_t>(tokens, 1)});
    }
    return out;
}

}  // namespace

std::size_t count_units(std::string_view text, BudgetUnit unit) {
    if (unit == BudgetUnit::characters) {
        return code_point_starts(text).size() - 1;
    }
    std::size_t tokens = 0;
    bool in_token = false;
    for (char c : text) {
        if (is_space(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++tokens;
        }
    }
    return tokens;
}

std::vector<Segment> segment_text(std::string_view text, std::size_t max_units, BudgetUnit unit) {
    if (text.empty()) {
        throw EmbedError("segment_text: empty text");
    }
    if (max_units == 0) {
        throw EmbedError("segment_text: max_units must be >= 1");
    }
    return unit == BudgetUnit::characters ? by_characters(text, max_units)
                                          : by_tokens(text, max_units);
}

}  // namespace alignrank::embed
