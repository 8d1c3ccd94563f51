#pragma once

// Parsing and canonicalization of model output into structured simulation
// responses. Total over arbitrary byte strings: every failure is a status,
// never an exception.

#include "spsim/common.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace spsim {

enum class ResponseStatus { valid, invalid_format, invalid_choice, inconsistent_schema };

inline const char* to_string(ResponseStatus s) {
    switch (s) {
        case ResponseStatus::valid: return "valid";
        case ResponseStatus::invalid_format: return "invalid_format";
        case ResponseStatus::invalid_choice: return "invalid_choice";
        case ResponseStatus::inconsistent_schema: return "inconsistent_schema";
    }
    return "?";
}

inline std::optional<ResponseStatus> parse_response_status(std::string_view s) {
    if (s == "valid") return ResponseStatus::valid;
    if (s == "invalid_format") return ResponseStatus::invalid_format;
    if (s == "invalid_choice") return ResponseStatus::invalid_choice;
    if (s == "inconsistent_schema") return ResponseStatus::inconsistent_schema;
    return std::nullopt;
}

enum class FactorBucket { SPC, SD, ST, OTHER };

inline const char* to_string(FactorBucket b) {
    switch (b) {
        case FactorBucket::SPC: return "SPC";
        case FactorBucket::SD: return "SD";
        case FactorBucket::ST: return "ST";
        case FactorBucket::OTHER: return "OTHER";
    }
    return "?";
}

using FactorCounts = std::map<FactorBucket, int>;

struct SimResponse {
    ResponseStatus status = ResponseStatus::invalid_format;
    std::optional<int> choice;  // 1..3, present iff status == valid
    std::optional<std::string> explanation;
    std::vector<std::string> ignored_raw;
    FactorCounts ignored_canonical;
    std::string raw_text;

    ojson to_json() const {
        ojson j;
        j["status"] = to_string(status);
        if (choice) j["choice"] = *choice; else j["choice"] = nullptr;
        if (explanation) j["explanation"] = *explanation; else j["explanation"] = nullptr;
        j["ignored_raw"] = ignored_raw;
        ojson canon;
        for (const auto& [bucket, n] : ignored_canonical) canon[to_string(bucket)] = n;
        j["ignored_canonical"] = std::move(canon);
        j["raw_text"] = raw_text;
        return j;
    }
};

// Keyword rules mapping free-text ignored-factor labels onto the three
// prompt components. First matching rule wins, checked in SPC, SD, ST order.
struct IgnoredKeywordTable {
    std::vector<std::string> spc = {"previous choices", "previous sp", "prior choices",
                                    "choice history"};
    std::vector<std::string> sd = {"socio", "demograph", "income", "age", "education", "property"};
    std::vector<std::string> st = {"personality", "attitude", "statement", "value", "pvq",
                                   "lifestyle"};

    static IgnoredKeywordTable from_json(const ojson& j) {
        IgnoredKeywordTable t;
        auto read = [&](const char* key, std::vector<std::string>& out) {
            if (!j.contains(key)) return;
            out.clear();
            for (const auto& kw : j.at(key)) out.push_back(kw.get<std::string>());
        };
        read("SPC", t.spc);
        read("SD", t.sd);
        read("ST", t.st);
        return t;
    }
    static IgnoredKeywordTable from_file(const std::string& path) {
        return from_json(parse_json_file(path));
    }
};

inline FactorBucket canonicalize_ignored_item(const std::string& item,
                                              const IgnoredKeywordTable& table = {}) {
    for (const auto& kw : table.spc)
        if (contains_ci(item, kw)) return FactorBucket::SPC;
    for (const auto& kw : table.sd)
        if (contains_ci(item, kw)) return FactorBucket::SD;
    for (const auto& kw : table.st)
        if (contains_ci(item, kw)) return FactorBucket::ST;
    return FactorBucket::OTHER;
}

inline FactorCounts canonicalize_ignored(const std::vector<std::string>& items,
                                         const IgnoredKeywordTable& table = {}) {
    FactorCounts counts;
    for (const auto& item : items) counts[canonicalize_ignored_item(item, table)]++;
    return counts;
}

namespace detail {

// First balanced top-level JSON object in `raw`, tolerating surrounding
// prose and code fences.
inline std::optional<ojson> extract_first_json_object(std::string_view raw) {
    size_t search_from = 0;
    while (true) {
        const size_t start = raw.find('{', search_from);
        if (start == std::string_view::npos) return std::nullopt;
        int depth = 0;
        bool in_string = false, escaped = false;
        for (size_t i = start; i < raw.size(); ++i) {
            const char c = raw[i];
            if (in_string) {
                if (escaped) escaped = false;
                else if (c == '\\') escaped = true;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) {
                    ojson candidate =
                        ojson::parse(raw.substr(start, i - start + 1), nullptr, false);
                    if (!candidate.is_discarded() && candidate.is_object()) return candidate;
                    break;  // balanced but unparsable; try the next '{'
                }
            }
        }
        search_from = start + 1;
    }
}

inline std::optional<int> coerce_choice(const ojson& v) {
    if (v.is_number_integer()) return static_cast<int>(v.get<int64_t>());
    if (v.is_number_unsigned()) return static_cast<int>(v.get<uint64_t>());
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d == static_cast<double>(static_cast<int64_t>(d))) return static_cast<int>(d);
        return std::nullopt;
    }
    if (v.is_string()) {
        const std::string s = trim(v.get<std::string>());
        if (s.empty()) return std::nullopt;
        for (char c : s)
            if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
        if (s.size() > 9) return std::nullopt;
        return std::stoi(s);
    }
    return std::nullopt;
}

}  // namespace detail

// Total parser for model output. Classification:
//   - no extractable JSON object            -> invalid_format
//   - a present key with the wrong shape,
//     or a required Explanation missing     -> inconsistent_schema
//   - Choice missing, null or out of 1..3   -> invalid_choice
// String digits are coerced ("2" counts as 2). Only valid responses carry a
// choice.
inline SimResponse parse_response(const std::string& raw, bool require_explanation,
                                  const IgnoredKeywordTable& table = {}) {
    SimResponse r;
    r.raw_text = raw;

    auto obj = detail::extract_first_json_object(raw);
    if (!obj) {
        r.status = ResponseStatus::invalid_format;
        return r;
    }

    bool schema_broken = false;

    std::optional<std::string> explanation;
    if (auto it = obj->find("Explanation"); it != obj->end() && !it->is_null()) {
        if (it->is_string()) explanation = it->get<std::string>();
        else schema_broken = true;
    } else if (require_explanation) {
        schema_broken = true;
    }

    std::vector<std::string> ignored;
    if (auto it = obj->find("Ignored"); it != obj->end() && !it->is_null()) {
        if (it->is_array()) {
            for (const auto& item : *it) {
                if (item.is_string()) ignored.push_back(item.get<std::string>());
                else schema_broken = true;
            }
        } else {
            schema_broken = true;
        }
    }

    std::optional<int> choice;
    bool choice_wrong_shape = false;
    if (auto it = obj->find("Choice"); it != obj->end() && !it->is_null()) {
        choice = detail::coerce_choice(*it);
        if (!choice) choice_wrong_shape = true;
    }
    if (choice_wrong_shape) schema_broken = true;

    if (!schema_broken) {
        r.ignored_raw = std::move(ignored);
        r.ignored_canonical = canonicalize_ignored(r.ignored_raw, table);
    }

    if (schema_broken) {
        r.status = ResponseStatus::inconsistent_schema;
        return r;
    }
    if (!choice || *choice < 1 || *choice > 3) {
        r.status = ResponseStatus::invalid_choice;
        return r;
    }
    r.status = ResponseStatus::valid;
    r.choice = choice;
    r.explanation = std::move(explanation);
    return r;
}

}  // namespace spsim
