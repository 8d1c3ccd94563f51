#pragma once

// Experiment-independent sentence patterns used by the prompt renderer.
// The built-in wording is versioned here; any template can be overridden
// from a directory holding one <key>.txt file per template.

#include "spsim/common.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace spsim {

class TemplateSet {
public:
    static TemplateSet builtin() {
        TemplateSet t;
        t.texts_ = {
            {"property_phrase",
             "a {SIZE} built {BUILT} with an area of approximately {AREA} square meters"},
            {"sociodem_header", "Your socio-demographics:"},
            {"statements_header", "Your personality and attitudes:"},
            {"sd_income",
             "The overall combined annual income of all people living in your property is "
             "{INCOME_BAND}."},
            {"sd_household",
             "Your household members include {AGE_0_5} person aged 0-5 years old, {AGE_6_12} "
             "person aged 6-12 years old, {AGE_13_17} person aged 13-17 years old, {AGE_18_65} "
             "person aged 18-65 years old, and {AGE_65_PLUS} person aged more than 65 years "
             "old."},
            {"sd_employed", "{EMPLOYED_COUNT} individuals living in the property are employed."},
            {"sd_education",
             "The highest level of education among all individuals living in your property is a "
             "{EDUCATION}."},
            {"sd_property",
             "Your property is {PROPERTY_TYPE}, with {ROOMS} rooms, {FLOOR_AREA_BAND} total "
             "usable floor area, with {LIGHTING} lights, built {BUILT_ERA}, located in {REGION}, "
             "with an EPC rating of {EPC_RATING}."},
            {"sd_inspections",
             "You have spent {INSPECTION_SPEND_BAND} on inspections and services over the past "
             "two years."},
            {"sd_heating",
             "The primary source of heating in your property is a {HEATING_SOURCE}, which is "
             "installed {HEATING_INSTALL_AGE_BAND} ago."},
            {"sd_tariff", "You have an electricity tariff: {ELECTRICITY_TARIFF}."},
            {"user_question_header", "Now the options and their characteristics are provided below:"},
            {"user_factors",
             "Please select one of the options based on these provided factors: {FACTORS}?"},
            {"user_format",
             "Respond in valid JSON format only. The first JSON object, called \"Explanation\", "
             "is a short (<50 words) explanation of your reasoning of choice, based on your "
             "preference. The second JSON object, called \"Choice\", shows your choice between "
             "three options. Use response codes: {CODES}. Your decision must be consistent with "
             "your explanation. The third JSON object, called \"Ignored\", is in a list format "
             "and shows the name of which part of the system message and user message you don't "
             "consider in making the choice. Example output as follows: {\"Explanation\": "
             "\"Explanation text here\", \"Choice\": 1 or 2 or 3, \"Ignored\":[\"part1\", "
             "\"part2\"]}"},
            {"user_format_no_explanation",
             "Respond in valid JSON format only. The first JSON object, called \"Choice\", shows "
             "your choice between three options. Use response codes: {CODES}. The second JSON "
             "object, called \"Ignored\", is in a list format and shows the name of which part "
             "of the system message and user message you don't consider in making the choice. "
             "Example output as follows: {\"Choice\": 1 or 2 or 3, \"Ignored\":[\"part1\", "
             "\"part2\"]}"},
        };
        return t;
    }

    static TemplateSet from_dir(const std::string& dir) {
        TemplateSet t = builtin();
        namespace fs = std::filesystem;
        if (!fs::is_directory(dir)) fail(ErrorKind::config, "template directory not found: " + dir);
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
            std::string text = read_file(entry.path().string());
            if (!text.empty() && text.back() == '\n') text.pop_back();
            t.texts_[entry.path().stem().string()] = std::move(text);
        }
        return t;
    }

    void save_dir(const std::string& dir) const {
        std::filesystem::create_directories(dir);
        for (const auto& [key, text] : texts_)
            write_file((std::filesystem::path(dir) / (key + ".txt")).string(), text + "\n");
    }

    const std::string& get(const std::string& key) const {
        auto it = texts_.find(key);
        if (it == texts_.end()) fail(ErrorKind::render, "no template named '" + key + "'");
        return it->second;
    }

    void set(const std::string& key, std::string text) { texts_[key] = std::move(text); }

    const std::map<std::string, std::string>& all() const { return texts_; }

private:
    std::map<std::string, std::string> texts_;
};

// Replaces {NAME} placeholders (upper-case names only, so literal JSON braces
// in template text pass through untouched). Unknown placeholders raise a
// render error naming the field.
inline std::string interpolate(std::string_view tmpl,
                               const std::map<std::string, std::string>& values,
                               const std::string& context) {
    std::string out;
    out.reserve(tmpl.size());
    for (size_t i = 0; i < tmpl.size(); ++i) {
        if (tmpl[i] != '{') {
            out.push_back(tmpl[i]);
            continue;
        }
        size_t j = i + 1;
        while (j < tmpl.size() && (std::isupper(static_cast<unsigned char>(tmpl[j])) ||
                                   std::isdigit(static_cast<unsigned char>(tmpl[j])) ||
                                   tmpl[j] == '_')) {
            ++j;
        }
        if (j > i + 1 && j < tmpl.size() && tmpl[j] == '}') {
            const std::string name(tmpl.substr(i + 1, j - i - 1));
            auto it = values.find(name);
            if (it == values.end())
                fail(ErrorKind::render, "missing field '" + name + "' while rendering " + context);
            out += it->second;
            i = j;
        } else {
            out.push_back(tmpl[i]);
        }
    }
    return out;
}

}  // namespace spsim
