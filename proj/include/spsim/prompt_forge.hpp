#pragma once

// Deterministic rendering of system and user messages for every
// (respondent, experiment, test-scenario) triple, plus the built-in
// 13-row ablation matrix.

#include "spsim/prompt_templates.hpp"
#include "spsim/survey_data.hpp"

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace spsim {

inline constexpr const char* kFactorSpc = "Your previous choices";
inline constexpr const char* kFactorSd = "Your socio-demographics";
inline constexpr const char* kFactorSt = "Your personality and attitudes";

struct TestScenarioConfig {
    int id = 0;
    std::string code;
    bool include_spc = false;
    bool include_sd = false;
    bool include_st = false;
    bool include_option_explanations = true;
    bool require_explanation = true;
    // Retained factor names for the model-informed scenario: component names
    // ("SPC", "SD", "ST") and/or item keys ("SD:income", "ST:3"). Components
    // without any retained entry are dropped wholesale.
    std::optional<std::set<std::string>> factor_filter;
    std::string backend_id = "local";
    bool is_llm_scenario = true;

    bool retains_component(const std::string& comp) const {
        if (!factor_filter) return true;
        if (factor_filter->count(comp)) return true;
        const std::string prefix = comp + ":";
        for (const auto& name : *factor_filter)
            if (starts_with(name, prefix)) return true;
        return false;
    }
    bool retains_item(const std::string& comp, const std::string& item) const {
        if (!factor_filter) return true;
        if (factor_filter->count(comp)) return true;
        return factor_filter->count(comp + ":" + item) > 0;
    }
};

// The 13-row test-scenario matrix. Scenario 10 ships with a retain-all
// placeholder filter; a model-derived filter file replaces it at run time.
inline std::vector<TestScenarioConfig> list_test_scenarios() {
    std::vector<TestScenarioConfig> rows;
    auto add = [&](int id, std::string code, bool spc, bool sd, bool st) -> TestScenarioConfig& {
        TestScenarioConfig cfg;
        cfg.id = id;
        cfg.code = std::move(code);
        cfg.include_spc = spc;
        cfg.include_sd = sd;
        cfg.include_st = st;
        rows.push_back(std::move(cfg));
        return rows.back();
    };
    add(1, "N (default)", false, false, false);
    add(2, "SPC", true, false, false);
    add(3, "SD", false, true, false);
    add(4, "ST", false, false, true);
    add(5, "SPC+SD", true, true, false);
    add(6, "SD+ST", false, true, true);
    add(7, "SPC+ST", true, false, true);
    add(8, "SPC+SD+ST", true, true, true);
    add(9, "SPC+SD+ST(-OP)", true, true, true).include_option_explanations = false;
    add(10, "SPC+SD+ST(MLM)", true, true, true).factor_filter =
        std::set<std::string>{"SPC", "SD", "ST"};
    add(11, "SPC+SD+ST(-COT)", true, true, true).require_explanation = false;
    add(12, "SPC+SD+ST (GPT)", true, true, true).backend_id = "cloud";
    auto& mlm = add(13, "MLM", false, false, false);
    mlm.is_llm_scenario = false;
    mlm.backend_id = "none";
    return rows;
}

inline TestScenarioConfig test_scenario(int id) {
    for (auto& cfg : list_test_scenarios())
        if (cfg.id == id) return cfg;
    fail(ErrorKind::config, "unknown test scenario id " + std::to_string(id));
}

struct PromptBundle {
    std::string system_message;
    std::string user_message;
    std::vector<std::string> provided_factors;
    std::map<int, std::string> response_code_legend;

    std::string digest() const { return digest_hex(system_message + '\x1f' + user_message); }

    ojson to_json() const {
        ojson j;
        j["system_message"] = system_message;
        j["user_message"] = user_message;
        j["provided_factors"] = provided_factors;
        ojson legend;
        for (const auto& [code, name] : response_code_legend) legend[std::to_string(code)] = name;
        j["response_code_legend"] = std::move(legend);
        return j;
    }
};

namespace detail {

inline std::string require_sd(const Respondent& r, const char* key) {
    auto v = r.sd_text(key);
    if (!v)
        fail(ErrorKind::render,
             "respondent '" + r.id + "' is missing sociodem field '" + key + "'");
    return *v;
}

inline std::string property_phrase(const Respondent& r, const TemplateSet& templates) {
    return interpolate(templates.get("property_phrase"),
                       {{"SIZE", require_sd(r, "property_size_class")},
                        {"BUILT", require_sd(r, "property_built_desc")},
                        {"AREA", require_sd(r, "property_area_m2")}},
                       "property phrase for respondent '" + r.id + "'");
}

struct SociodemItem {
    const char* key;       // filter key, e.g. "income"
    const char* template_key;
    std::vector<std::pair<const char*, const char*>> fields;  // placeholder -> sociodem key
};

inline const std::vector<SociodemItem>& sociodem_items() {
    static const std::vector<SociodemItem> items = {
        {"income", "sd_income", {{"INCOME_BAND", "income_band"}}},
        {"household",
         "sd_household",
         {{"AGE_0_5", "age_0_5"},
          {"AGE_6_12", "age_6_12"},
          {"AGE_13_17", "age_13_17"},
          {"AGE_18_65", "age_18_65"},
          {"AGE_65_PLUS", "age_65_plus"}}},
        {"employed", "sd_employed", {{"EMPLOYED_COUNT", "employed_count"}}},
        {"education", "sd_education", {{"EDUCATION", "education"}}},
        {"property",
         "sd_property",
         {{"PROPERTY_TYPE", "property_type"},
          {"ROOMS", "rooms"},
          {"FLOOR_AREA_BAND", "floor_area_band"},
          {"LIGHTING", "lighting"},
          {"BUILT_ERA", "built_era"},
          {"REGION", "region"},
          {"EPC_RATING", "epc_rating"}}},
        {"inspections", "sd_inspections", {{"INSPECTION_SPEND_BAND", "inspection_spend_band"}}},
        {"heating",
         "sd_heating",
         {{"HEATING_SOURCE", "heating_source"},
          {"HEATING_INSTALL_AGE_BAND", "heating_install_age_band"}}},
        {"tariff", "sd_tariff", {{"ELECTRICITY_TARIFF", "electricity_tariff"}}},
    };
    return items;
}

}  // namespace detail

// Background component: identity + experiment intro, option explanations
// (when enabled), attribute glossary, and the selection instruction.
inline std::string render_background(const Respondent& r, const ExperimentDesign& design,
                                     bool include_explanations,
                                     const TemplateSet& templates = TemplateSet::builtin()) {
    std::vector<std::string> paragraphs;
    std::map<std::string, std::string> values = {
        {"PROPERTY", detail::property_phrase(r, templates)},
        {"EXPLAIN_LEADIN", include_explanations ? design.explain_leadin : ""}};
    paragraphs.push_back(interpolate(design.experiment_intro, values,
                                     std::string(to_string(design.id)) + " intro"));
    if (include_explanations)
        for (const auto& expl : design.option_explanations) paragraphs.push_back(expl);
    paragraphs.push_back(design.glossary_header);
    for (const auto& g : design.attribute_glossary) paragraphs.push_back(g);
    paragraphs.push_back(design.closing);

    std::string out;
    for (size_t i = 0; i < paragraphs.size(); ++i) {
        if (i) out += "\n\n";
        out += paragraphs[i];
    }
    return out;
}

// The previous-choices component: header sentence plus a JSON array of the
// first five scenarios with the recorded choices.
inline std::string render_sp_choices(const ExperimentDesign& design,
                                     std::span<const ChoiceScenario> scenarios,
                                     const TemplateSet& /*templates*/ = TemplateSet::builtin()) {
    if (scenarios.size() != 5)
        fail(ErrorKind::validation, "previous-choices block needs exactly 5 scenarios, got " +
                                        std::to_string(scenarios.size()));
    ojson arr = ojson::array();
    for (const auto& sc : scenarios) {
        if (sc.index == 6)
            fail(ErrorKind::validation, "scenario 6 is the held-out question and cannot appear "
                                        "in the previous-choices block");
        if (!sc.recorded_choice)
            fail(ErrorKind::validation,
                 "scenario " + std::to_string(sc.index) + " has no recorded choice");
        arr.push_back(serialize_scenario(design, sc));
    }
    return design.spc_header + "\n\n" + arr.dump(2);
}

inline std::string render_sociodemographics(
    const Respondent& r, const TemplateSet& templates = TemplateSet::builtin(),
    const TestScenarioConfig* cfg = nullptr) {
    std::vector<std::string> sentences;
    for (const auto& item : detail::sociodem_items()) {
        if (cfg && !cfg->retains_item("SD", item.key)) continue;
        std::map<std::string, std::string> values;
        for (const auto& [placeholder, sd_key] : item.fields)
            values[placeholder] = detail::require_sd(r, sd_key);
        sentences.push_back(interpolate(templates.get(item.template_key), values,
                                        std::string("sociodem item '") + item.key + "'"));
    }
    if (sentences.empty()) return {};
    std::string out = templates.get("sociodem_header");
    out += "\n\n";
    for (size_t i = 0; i < sentences.size(); ++i) {
        if (i) out += " ";
        out += sentences[i];
    }
    return out;
}

inline std::string render_statements(const Respondent& r,
                                     const TemplateSet& templates = TemplateSet::builtin(),
                                     const TestScenarioConfig* cfg = nullptr) {
    std::vector<std::string> sentences;
    for (size_t i = 0; i < r.statements.size(); ++i) {
        if (cfg && !cfg->retains_item("ST", std::to_string(i))) continue;
        const auto& st = r.statements[i];
        std::string sentence;
        if (st.text.find("{}") != std::string::npos)
            sentence = replace_all(st.text, "{}", st.level);
        else
            sentence = st.text + ", " + st.level + ".";
        sentences.push_back(std::move(sentence));
    }
    if (sentences.empty()) return {};
    std::string out = templates.get("statements_header");
    out += "\n\n";
    for (size_t i = 0; i < sentences.size(); ++i) {
        if (i) out += " ";
        out += sentences[i];
    }
    return out;
}

namespace detail {

// The factor list is rendered the way the original survey code printed it:
// a Python-style list with a leading space inside each quoted label.
inline std::string factor_list_text(const std::vector<std::string>& factors) {
    std::string out = "[";
    for (size_t i = 0; i < factors.size(); ++i) {
        if (i) out += ", ";
        out += "' " + factors[i] + "'";
    }
    out += "]";
    return out;
}

inline std::string response_codes_text(const ExperimentDesign& design) {
    return design.code_labels[0] + "=1 or " + design.code_labels[1] + " = 2 or " +
           design.code_labels[2] + "=3";
}

}  // namespace detail

inline PromptBundle assemble_prompt(const Respondent& r, const ExperimentDesign& design,
                                    const TestScenarioConfig& cfg,
                                    const TemplateSet& templates = TemplateSet::builtin()) {
    if (!cfg.is_llm_scenario)
        fail(ErrorKind::config, "scenario " + std::to_string(cfg.id) + " (" + cfg.code +
                                    ") is not an LLM scenario and has no prompt");
    auto exp_it = r.experiments.find(design.id);
    if (exp_it == r.experiments.end() || exp_it->second.size() != 6)
        fail(ErrorKind::validation, "respondent '" + r.id + "' has no complete " +
                                        to_string(design.id) + " block");
    const auto& scenarios = exp_it->second;

    PromptBundle bundle;
    std::vector<std::string> sections;
    sections.push_back(render_background(r, design, cfg.include_option_explanations, templates));

    if (cfg.include_spc && cfg.retains_component("SPC")) {
        sections.push_back(render_sp_choices(
            design, std::span<const ChoiceScenario>(scenarios.data(), 5), templates));
        bundle.provided_factors.emplace_back(kFactorSpc);
    }
    if (cfg.include_sd) {
        std::string sd = render_sociodemographics(r, templates, &cfg);
        if (!sd.empty()) {
            sections.push_back(std::move(sd));
            bundle.provided_factors.emplace_back(kFactorSd);
        }
    }
    if (cfg.include_st) {
        std::string st = render_statements(r, templates, &cfg);
        if (!st.empty()) {
            sections.push_back(std::move(st));
            bundle.provided_factors.emplace_back(kFactorSt);
        }
    }

    for (size_t i = 0; i < sections.size(); ++i) {
        if (i) bundle.system_message += "\n\n";
        bundle.system_message += sections[i];
    }

    // The held-out sixth scenario; its recorded choice never leaks.
    ChoiceScenario question = scenarios[5];
    question.recorded_choice.reset();
    bundle.user_message = templates.get("user_question_header");
    bundle.user_message += "\n\n" + serialize_scenario(design, question).dump(2);
    bundle.user_message += "\n\n" + interpolate(templates.get("user_factors"),
                                                {{"FACTORS", detail::factor_list_text(
                                                                 bundle.provided_factors)}},
                                                "user factors line");
    const char* format_key = cfg.require_explanation ? "user_format" : "user_format_no_explanation";
    bundle.user_message += "\n\n" + interpolate(templates.get(format_key),
                                                {{"CODES", detail::response_codes_text(design)}},
                                                "output format instruction");

    for (int k = 0; k < 3; ++k)
        bundle.response_code_legend[k + 1] = design.code_labels[static_cast<size_t>(k)];
    return bundle;
}

}  // namespace spsim
