#pragma once

// Canonical data model for stated-preference survey datasets: ingestion and
// validation, display-string parsing, attribute encoding for the choice
// model, and respondent stratification.

#include "spsim/common.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace spsim {

enum class ExperimentId { SP1, SP2, SP3 };

inline const char* to_string(ExperimentId id) {
    switch (id) {
        case ExperimentId::SP1: return "SP1";
        case ExperimentId::SP2: return "SP2";
        case ExperimentId::SP3: return "SP3";
    }
    return "?";
}

inline std::optional<ExperimentId> parse_experiment_id(std::string_view s) {
    if (s == "SP1") return ExperimentId::SP1;
    if (s == "SP2") return ExperimentId::SP2;
    if (s == "SP3") return ExperimentId::SP3;
    return std::nullopt;
}

inline const std::array<ExperimentId, 3> kAllExperiments = {
    ExperimentId::SP1, ExperimentId::SP2, ExperimentId::SP3};

// ---- attribute coding ----

struct CategoricalLevel {
    std::string label;         // canonical label, e.g. "Interest-free loan"
    std::string match_prefix;  // display values are matched by prefix
    std::string slug;          // covariate-name suffix
};

struct AttributeCoding {
    std::string attribute;   // schema name this coding applies to
    std::string short_name;  // covariate label stem, e.g. "fixed_cost"
    bool is_numeric = true;
    double scale = 1.0;                     // numeric: model units per display unit
    std::vector<CategoricalLevel> levels;   // categorical: first entry is the reference
};

// ---- domain types ----

struct AttributeLevel {
    std::string attribute_name;
    std::optional<std::string> display_value;     // verbatim string, may be absent (JSON null)
    std::optional<double> numeric_value;          // parsed magnitude in display units
    std::optional<std::string> categorical_code;  // canonical level label
};

struct ScenarioOption {
    std::string name;
    std::vector<AttributeLevel> attributes;  // 5, in schema order
};

struct ChoiceScenario {
    int index = 0;                       // 1..6
    std::vector<ScenarioOption> options; // exactly 3
    std::optional<int> recorded_choice;  // 1..3
};

struct ExperimentDesign {
    ExperimentId id = ExperimentId::SP1;
    std::array<std::string, 3> option_names{};
    std::array<std::string, 3> code_labels{};  // names in the "Use response codes" line
    std::vector<std::string> attribute_schema; // 5 names
    std::array<std::string, 3> option_explanations{};
    // Intro paragraph; {PROPERTY} is replaced by the respondent's property
    // phrase and {EXPLAIN_LEADIN} by `explain_leadin` when option
    // explanations are enabled, by "" otherwise.
    std::string experiment_intro;
    std::string explain_leadin;
    std::string glossary_header;
    std::vector<std::string> attribute_glossary;  // 5 paragraphs
    std::string closing;
    std::string spc_header;
    std::vector<AttributeCoding> codings;  // parallel to attribute_schema
};

struct Statement {
    std::string text;   // sentence template; "{}" is replaced by the level
    std::string level;  // response level, e.g. "Very much like you"
};

struct Respondent {
    std::string id;
    ojson sociodem = ojson::object();  // flat string/int map
    std::vector<Statement> statements;
    std::map<ExperimentId, std::vector<ChoiceScenario>> experiments;

    std::optional<int64_t> sd_int(const std::string& key) const {
        auto it = sociodem.find(key);
        if (it == sociodem.end() || !it->is_number_integer()) return std::nullopt;
        return it->get<int64_t>();
    }
    std::optional<std::string> sd_text(const std::string& key) const {
        auto it = sociodem.find(key);
        if (it == sociodem.end()) return std::nullopt;
        if (it->is_string()) return it->get<std::string>();
        if (it->is_number_integer()) return std::to_string(it->get<int64_t>());
        return std::nullopt;
    }
    std::optional<int64_t> children_count() const {
        auto a = sd_int("age_0_5"), b = sd_int("age_6_12"), c = sd_int("age_13_17");
        if (!a || !b || !c) return std::nullopt;
        return *a + *b + *c;
    }
    std::optional<int64_t> seniors_count() const { return sd_int("age_65_plus"); }
};

struct Dataset {
    std::map<ExperimentId, ExperimentDesign> designs;
    std::vector<Respondent> respondents;

    const ExperimentDesign& design(ExperimentId id) const {
        auto it = designs.find(id);
        if (it == designs.end())
            fail(ErrorKind::validation, std::string("dataset has no design for ") + to_string(id));
        return it->second;
    }
    const Respondent* find_respondent(const std::string& rid) const {
        for (const auto& r : respondents)
            if (r.id == rid) return &r;
        return nullptr;
    }
};

// ---- display-value parsing ----

// Pulls the leading magnitude out of a display string: currency symbol and
// thousands separators stripped, trailing units and parenthetical
// restatements ignored. "£ 1900" -> 1900, "4590 kg per year (26 flight(s))"
// -> 4590, "£ 25 (Over 1 year(s))" -> 25.
inline std::optional<double> parse_display_number(std::string_view display) {
    size_t i = 0;
    while (i < display.size() &&
           (std::isspace(static_cast<unsigned char>(display[i])) || display[i] == '-')) {
        ++i;
    }
    // skip a currency marker (UTF-8 "£" is 0xC2 0xA3)
    if (i + 1 < display.size() && static_cast<unsigned char>(display[i]) == 0xC2 &&
        static_cast<unsigned char>(display[i + 1]) == 0xA3) {
        i += 2;
    }
    while (i < display.size() && std::isspace(static_cast<unsigned char>(display[i]))) ++i;
    if (i >= display.size() || !std::isdigit(static_cast<unsigned char>(display[i])))
        return std::nullopt;

    std::string digits;
    bool seen_dot = false;
    for (; i < display.size(); ++i) {
        const char c = display[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            digits.push_back(c);
        } else if (c == ',' && i + 1 < display.size() &&
                   std::isdigit(static_cast<unsigned char>(display[i + 1]))) {
            continue;  // thousands separator
        } else if (c == '.' && !seen_dot && i + 1 < display.size() &&
                   std::isdigit(static_cast<unsigned char>(display[i + 1]))) {
            seen_dot = true;
            digits.push_back(c);
        } else {
            break;
        }
    }
    if (digits.empty()) return std::nullopt;
    return std::stod(digits);
}

inline std::string slugify(std::string_view s) {
    std::string out;
    bool sep = false;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            if (sep && !out.empty()) out.push_back('_');
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            sep = false;
        } else {
            sep = true;
        }
    }
    return out;
}

// Default coding for an attribute, by name. Covers the heating-survey
// attribute vocabulary; anything unrecognized is treated as numeric when its
// values look like magnitudes and categorical otherwise.
inline AttributeCoding default_attribute_coding(const std::string& attribute) {
    AttributeCoding c;
    c.attribute = attribute;
    const std::string lower = to_lower(attribute);

    if (lower.find("support scheme") != std::string::npos) {
        c.short_name = "support";
        c.is_numeric = false;
        c.levels = {{"None", "None", "none"},
                    {"4% loan", "4% loan", "loan_4pct"},
                    {"Interest-free loan", "Interest-free loan", "loan_interest_free"}};
        return c;
    }
    if (lower.find("energy pricing") != std::string::npos) {
        c.short_name = "pricing";
        c.is_numeric = false;
        c.levels = {{"Constant across hours and days", "Constant", "fixed"},
                    {"Can change during the day and you are informed 24 hours ahead",
                     "Can change during the day and you are informed 24", "change_24h"},
                    {"Can change during the day and you are informed 1 hour ahead",
                     "Can change during the day and you are informed 1 ", "change_1h"}};
        return c;
    }
    if (lower.find("control and service flexibility") != std::string::npos) {
        c.short_name = "control";
        c.is_numeric = false;
        c.levels = {{"You control the heating entirely", "You control", "full"},
                    {"Switch-off with 7 hours notice",
                     "Heating can be switched off for 1 hour a month. Notification 7", "switch_7h"},
                    {"Switch-off with 1 hour notice",
                     "Heating can be switched off for 1 hour a month. Notification 1", "switch_1h"}};
        return c;
    }

    c.is_numeric = true;
    if (lower.find("fixed cost") != std::string::npos) {
        c.short_name = "fixed_cost";
        c.scale = 1e-3;  // £ -> £1000s
    } else if (lower.find("equipment cost") != std::string::npos) {
        c.short_name = "equipment_cost";
        c.scale = 1e-3;
    } else if (lower.find("retrofit cost") != std::string::npos) {
        c.short_name = "retrofit_cost";
        c.scale = 1e-3;
    } else if (lower.find("upfront cost") != std::string::npos) {
        c.short_name = "upfront_cost";
        c.scale = 1e-3;
    } else if (lower.find("cost of operation") != std::string::npos) {
        c.short_name = "operation_cost";
        c.scale = 1e-3;
    } else if (lower.find("savings") != std::string::npos) {
        c.short_name = "savings";
        c.scale = 1e-3;
    } else if (lower.find("co2") != std::string::npos) {
        c.short_name = "co2";
        c.scale = 1e-3;  // kg -> tonnes
    } else if (lower.find("maintenance visits") != std::string::npos) {
        c.short_name = "maintenance_visits";
    } else if (lower.find("nuisance") != std::string::npos) {
        c.short_name = "nuisance_days";
    } else if (lower.find("contract length") != std::string::npos) {
        c.short_name = "contract_years";
    } else if (lower.find("cost") != std::string::npos) {
        c.short_name = slugify(attribute);
        c.scale = 1e-3;
    } else {
        c.short_name = slugify(attribute);
    }
    return c;
}

inline const AttributeCoding* find_coding(const ExperimentDesign& design,
                                          const std::string& attribute) {
    for (const auto& c : design.codings)
        if (c.attribute == attribute) return &c;
    return nullptr;
}

// Resolve a display value against its coding.
inline AttributeLevel make_attribute_level(const ExperimentDesign& design,
                                           const std::string& attribute,
                                           std::optional<std::string> display) {
    AttributeLevel lvl;
    lvl.attribute_name = attribute;
    lvl.display_value = std::move(display);
    if (!lvl.display_value) return lvl;

    const AttributeCoding* coding = find_coding(design, attribute);
    AttributeCoding fallback;
    if (!coding) {
        fallback = default_attribute_coding(attribute);
        coding = &fallback;
    }
    if (coding->is_numeric) {
        lvl.numeric_value = parse_display_number(*lvl.display_value);
        if (!lvl.numeric_value) lvl.categorical_code = *lvl.display_value;
    } else {
        for (const auto& level : coding->levels) {
            if (starts_with(*lvl.display_value, level.match_prefix)) {
                lvl.categorical_code = level.label;
                break;
            }
        }
        if (!lvl.categorical_code) lvl.categorical_code = *lvl.display_value;
    }
    return lvl;
}

// ---- loading / serialization ----

namespace detail {

inline std::string scenario_path(const std::string& rid, ExperimentId eid, size_t idx) {
    return "respondent '" + rid + "' " + to_string(eid) + " scenario " + std::to_string(idx + 1);
}

inline ExperimentDesign load_design(ExperimentId id, const ojson& j) {
    ExperimentDesign d;
    d.id = id;
    auto require = [&](const char* key) -> const ojson& {
        auto it = j.find(key);
        if (it == j.end())
            fail(ErrorKind::format,
                 std::string("design ") + to_string(id) + " is missing '" + key + "'");
        return *it;
    };
    const auto& names = require("option_names");
    if (!names.is_array() || names.size() != 3)
        fail(ErrorKind::format, std::string("design ") + to_string(id) +
                                    ": option_names must list exactly 3 options");
    for (size_t i = 0; i < 3; ++i) d.option_names[i] = names[i].get<std::string>();
    d.code_labels = d.option_names;
    if (j.contains("code_labels")) {
        const auto& cl = j["code_labels"];
        if (!cl.is_array() || cl.size() != 3)
            fail(ErrorKind::format, std::string("design ") + to_string(id) + ": bad code_labels");
        for (size_t i = 0; i < 3; ++i) d.code_labels[i] = cl[i].get<std::string>();
    }
    for (const auto& a : require("attribute_schema")) d.attribute_schema.push_back(a.get<std::string>());
    if (j.contains("option_explanations")) {
        const auto& ex = j["option_explanations"];
        if (!ex.is_array() || ex.size() != 3)
            fail(ErrorKind::format,
                 std::string("design ") + to_string(id) + ": bad option_explanations");
        for (size_t i = 0; i < 3; ++i) d.option_explanations[i] = ex[i].get<std::string>();
    }
    d.experiment_intro = j.value("experiment_intro", std::string{});
    d.explain_leadin = j.value("explain_leadin", std::string{});
    d.glossary_header = j.value("glossary_header", std::string{});
    if (j.contains("attribute_glossary"))
        for (const auto& g : j["attribute_glossary"]) d.attribute_glossary.push_back(g.get<std::string>());
    d.closing = j.value("closing", std::string{});
    d.spc_header = j.value("spc_header", std::string{});

    if (j.contains("codings")) {
        for (const auto& cj : j["codings"]) {
            AttributeCoding c;
            c.attribute = cj.at("attribute").get<std::string>();
            c.short_name = cj.value("short_name", slugify(c.attribute));
            c.is_numeric = cj.value("numeric", true);
            c.scale = cj.value("scale", 1.0);
            if (cj.contains("levels")) {
                for (const auto& lj : cj["levels"]) {
                    CategoricalLevel lvl;
                    lvl.label = lj.at("label").get<std::string>();
                    lvl.match_prefix = lj.value("match_prefix", lvl.label);
                    lvl.slug = lj.value("slug", slugify(lvl.label));
                    c.levels.push_back(std::move(lvl));
                }
            }
            d.codings.push_back(std::move(c));
        }
    } else {
        for (const auto& attr : d.attribute_schema)
            d.codings.push_back(default_attribute_coding(attr));
    }
    return d;
}

inline ChoiceScenario load_scenario(const ExperimentDesign& design, const ojson& j,
                                    const std::string& where, int index) {
    ChoiceScenario sc;
    sc.index = index;
    auto opts_it = j.find("options");
    if (opts_it == j.end() || !opts_it->is_array())
        fail(ErrorKind::format, where + ": missing 'options' array");
    for (const auto& oj : *opts_it) {
        ScenarioOption opt;
        opt.name = oj.value("name", std::string{});
        auto ch_it = oj.find("characteristics");
        if (ch_it == oj.end() || !ch_it->is_object())
            fail(ErrorKind::format, where + ": option '" + opt.name + "' has no characteristics");
        for (const auto& attr : design.attribute_schema) {
            auto v = ch_it->find(attr);
            if (v == ch_it->end())
                fail(ErrorKind::format,
                     where + ": option '" + opt.name + "' is missing attribute '" + attr + "'");
            std::optional<std::string> display;
            if (!v->is_null()) display = v->get<std::string>();
            opt.attributes.push_back(make_attribute_level(design, attr, std::move(display)));
        }
        sc.options.push_back(std::move(opt));
    }
    auto choice_it = j.find("Choice");
    if (choice_it != j.end() && !choice_it->is_null()) {
        const std::string chosen = choice_it->get<std::string>();
        for (size_t k = 0; k < 3; ++k) {
            if (design.option_names[k] == chosen) {
                sc.recorded_choice = static_cast<int>(k) + 1;
                break;
            }
        }
        if (!sc.recorded_choice)
            fail(ErrorKind::format, where + ": Choice '" + chosen + "' is not an option name");
    }
    return sc;
}

}  // namespace detail

inline Dataset load_dataset_json(const ojson& j) {
    Dataset ds;
    auto designs_it = j.find("designs");
    if (designs_it == j.end() || !designs_it->is_object())
        fail(ErrorKind::format, "dataset: missing top-level 'designs' object");
    for (const auto& [key, dj] : designs_it->items()) {
        auto id = parse_experiment_id(key);
        if (!id) fail(ErrorKind::format, "dataset: unknown experiment id '" + key + "'");
        ds.designs.emplace(*id, detail::load_design(*id, dj));
    }
    auto resp_it = j.find("respondents");
    if (resp_it == j.end() || !resp_it->is_array())
        fail(ErrorKind::format, "dataset: missing top-level 'respondents' array");
    for (const auto& rj : *resp_it) {
        Respondent r;
        r.id = rj.value("id", std::string{});
        if (r.id.empty()) fail(ErrorKind::format, "dataset: respondent without id");
        if (rj.contains("sociodem")) r.sociodem = rj["sociodem"];
        if (rj.contains("statements")) {
            for (const auto& sj : rj["statements"])
                r.statements.push_back({sj.at("text").get<std::string>(),
                                        sj.at("level").get<std::string>()});
        }
        if (rj.contains("experiments")) {
            for (const auto& [key, scenarios] : rj["experiments"].items()) {
                auto eid = parse_experiment_id(key);
                if (!eid)
                    fail(ErrorKind::format,
                         "respondent '" + r.id + "': unknown experiment '" + key + "'");
                const ExperimentDesign& design = ds.design(*eid);
                std::vector<ChoiceScenario> list;
                for (size_t i = 0; i < scenarios.size(); ++i)
                    list.push_back(detail::load_scenario(
                        design, scenarios[i], detail::scenario_path(r.id, *eid, i),
                        static_cast<int>(i) + 1));
                r.experiments.emplace(*eid, std::move(list));
            }
        }
        ds.respondents.push_back(std::move(r));
    }
    return ds;
}

inline Dataset load_dataset(const std::string& path) {
    return load_dataset_json(parse_json_file(path));
}

inline ojson serialize_design(const ExperimentDesign& d) {
    ojson j;
    j["option_names"] = d.option_names;
    j["code_labels"] = d.code_labels;
    j["attribute_schema"] = d.attribute_schema;
    j["option_explanations"] = d.option_explanations;
    j["experiment_intro"] = d.experiment_intro;
    j["explain_leadin"] = d.explain_leadin;
    j["glossary_header"] = d.glossary_header;
    j["attribute_glossary"] = d.attribute_glossary;
    j["closing"] = d.closing;
    j["spc_header"] = d.spc_header;
    ojson codings = ojson::array();
    for (const auto& c : d.codings) {
        ojson cj;
        cj["attribute"] = c.attribute;
        cj["short_name"] = c.short_name;
        cj["numeric"] = c.is_numeric;
        if (c.is_numeric) {
            cj["scale"] = c.scale;
        } else {
            ojson levels = ojson::array();
            for (const auto& lvl : c.levels)
                levels.push_back({{"label", lvl.label},
                                  {"match_prefix", lvl.match_prefix},
                                  {"slug", lvl.slug}});
            cj["levels"] = std::move(levels);
        }
        codings.push_back(std::move(cj));
    }
    j["codings"] = std::move(codings);
    return j;
}

inline ojson serialize_scenario(const ExperimentDesign& design, const ChoiceScenario& sc) {
    ojson j;
    ojson options = ojson::array();
    for (const auto& opt : sc.options) {
        ojson oj;
        oj["name"] = opt.name;
        ojson ch;
        for (const auto& lvl : opt.attributes) {
            if (lvl.display_value)
                ch[lvl.attribute_name] = *lvl.display_value;
            else
                ch[lvl.attribute_name] = nullptr;
        }
        oj["characteristics"] = std::move(ch);
        options.push_back(std::move(oj));
    }
    j["options"] = std::move(options);
    if (sc.recorded_choice)
        j["Choice"] = design.option_names[static_cast<size_t>(*sc.recorded_choice - 1)];
    else
        j["Choice"] = nullptr;
    return j;
}

inline ojson serialize_dataset(const Dataset& ds) {
    ojson j;
    ojson designs;
    for (const auto& [id, d] : ds.designs) designs[to_string(id)] = serialize_design(d);
    j["designs"] = std::move(designs);
    ojson respondents = ojson::array();
    for (const auto& r : ds.respondents) {
        ojson rj;
        rj["id"] = r.id;
        rj["sociodem"] = r.sociodem;
        ojson stmts = ojson::array();
        for (const auto& s : r.statements) stmts.push_back({{"text", s.text}, {"level", s.level}});
        rj["statements"] = std::move(stmts);
        ojson exps;
        for (const auto& [eid, scenarios] : r.experiments) {
            ojson list = ojson::array();
            for (const auto& sc : scenarios) list.push_back(serialize_scenario(ds.design(eid), sc));
            exps[to_string(eid)] = std::move(list);
        }
        rj["experiments"] = std::move(exps);
        respondents.push_back(std::move(rj));
    }
    j["respondents"] = std::move(respondents);
    return j;
}

inline std::string dataset_digest(const Dataset& ds) {
    return digest_hex(serialize_dataset(ds).dump());
}

// ---- validation ----

struct Violation {
    std::string where;
    std::string message;
};

inline std::vector<Violation> validate_dataset(const Dataset& ds) {
    std::vector<Violation> out;
    auto add = [&](std::string where, std::string message) {
        out.push_back({std::move(where), std::move(message)});
    };

    for (const auto& [id, d] : ds.designs) {
        const std::string where = std::string("design ") + to_string(id);
        if (d.attribute_schema.size() != 5)
            add(where, "attribute_schema must have 5 entries, has " +
                           std::to_string(d.attribute_schema.size()));
        for (const auto& attr : d.attribute_schema)
            if (!find_coding(d, attr)) add(where, "no coding for attribute '" + attr + "'");
    }

    std::map<std::string, int> seen_ids;
    for (const auto& r : ds.respondents) seen_ids[r.id]++;
    for (const auto& [rid, n] : seen_ids)
        if (n > 1) add("respondent '" + rid + "'", "duplicate respondent id");

    static const char* kAgeKeys[] = {"age_0_5", "age_6_12", "age_13_17", "age_18_65",
                                     "age_65_plus"};
    for (const auto& r : ds.respondents) {
        for (const char* key : kAgeKeys) {
            auto it = r.sociodem.find(key);
            if (it == r.sociodem.end()) continue;
            if (!it->is_number_integer() || it->get<int64_t>() < 0)
                add("respondent '" + r.id + "'",
                    std::string("age-group count '") + key + "' must be a non-negative integer");
        }
        for (const auto& [eid, scenarios] : r.experiments) {
            const std::string where = "respondent '" + r.id + "' " + to_string(eid);
            if (ds.designs.find(eid) == ds.designs.end()) {
                add(where, "no design for this experiment");
                continue;
            }
            const ExperimentDesign& design = ds.design(eid);
            if (scenarios.size() != 6)
                add(where, "expected 6 scenarios, found " + std::to_string(scenarios.size()));
            for (const auto& sc : scenarios) {
                const std::string swhere = where + " scenario " + std::to_string(sc.index);
                if (sc.options.size() != 3) {
                    add(swhere, "expected 3 options, found " + std::to_string(sc.options.size()));
                    continue;
                }
                for (size_t k = 0; k < 3; ++k) {
                    const auto& opt = sc.options[k];
                    if (opt.name != design.option_names[k])
                        add(swhere, "option " + std::to_string(k + 1) + " is '" + opt.name +
                                        "', design says '" + design.option_names[k] + "'");
                    if (opt.attributes.size() != design.attribute_schema.size()) {
                        add(swhere, "option '" + opt.name + "' has " +
                                        std::to_string(opt.attributes.size()) + " attributes, " +
                                        "schema has " +
                                        std::to_string(design.attribute_schema.size()));
                        continue;
                    }
                    for (size_t a = 0; a < opt.attributes.size(); ++a) {
                        const auto& lvl = opt.attributes[a];
                        if (lvl.attribute_name != design.attribute_schema[a])
                            add(swhere, "attribute order mismatch at position " +
                                            std::to_string(a + 1));
                        if (lvl.display_value) {
                            if (!lvl.numeric_value && !lvl.categorical_code)
                                add(swhere, "attribute '" + lvl.attribute_name +
                                                "' resolved to neither numeric nor categorical");
                            if (lvl.numeric_value &&
                                (!std::isfinite(*lvl.numeric_value) || *lvl.numeric_value < 0))
                                add(swhere, "attribute '" + lvl.attribute_name +
                                                "' has a negative or non-finite value");
                        } else if (lvl.numeric_value || lvl.categorical_code) {
                            add(swhere, "attribute '" + lvl.attribute_name +
                                            "' has codes but no display value");
                        }
                    }
                }
                if (sc.recorded_choice && (*sc.recorded_choice < 1 || *sc.recorded_choice > 3))
                    add(swhere, "recorded_choice " + std::to_string(*sc.recorded_choice) +
                                    " out of range 1..3");
            }
        }
    }
    return out;
}

// ---- stratification ----

enum class StratifyCriterion { children, seniors, income_25k };

inline const char* to_string(StratifyCriterion c) {
    switch (c) {
        case StratifyCriterion::children: return "children";
        case StratifyCriterion::seniors: return "seniors";
        case StratifyCriterion::income_25k: return "income_25k";
    }
    return "?";
}

inline std::optional<StratifyCriterion> parse_stratify_criterion(std::string_view s) {
    if (s == "children") return StratifyCriterion::children;
    if (s == "seniors") return StratifyCriterion::seniors;
    if (s == "income_25k") return StratifyCriterion::income_25k;
    return std::nullopt;
}

struct StratifyResult {
    StratifyCriterion criterion = StratifyCriterion::children;
    // groups[0] holds Child-Free / No-Seniors / Low-income, groups[1] the
    // complement; report tables list them in this order.
    struct Group {
        std::string label;
        std::vector<std::string> ids;
    };
    std::array<Group, 2> groups;
    std::vector<std::string> excluded;
};

// Income bands like "£10,000-14,999", "£75,000 or more", "Less than £10,000".
// Returns {lower, upper}; upper is absent for open-ended bands.
inline std::optional<std::pair<double, std::optional<double>>> parse_income_band(
    std::string_view band) {
    std::vector<double> nums;
    std::string cur;
    for (size_t i = 0; i <= band.size(); ++i) {
        const char c = i < band.size() ? band[i] : '\0';
        if (std::isdigit(static_cast<unsigned char>(c))) {
            cur.push_back(c);
        } else if (c == ',' && !cur.empty()) {
            continue;
        } else if (!cur.empty()) {
            nums.push_back(std::stod(cur));
            cur.clear();
        }
    }
    const std::string lower = to_lower(band);
    const bool open_below = lower.find("less than") != std::string::npos ||
                            lower.find("under") != std::string::npos;
    const bool open_above = lower.find("or more") != std::string::npos ||
                            lower.find("and above") != std::string::npos ||
                            lower.find("or above") != std::string::npos;
    if (nums.empty()) return std::nullopt;
    if (open_below) return std::make_pair(0.0, std::optional<double>(nums[0] - 1.0));
    if (open_above) return std::make_pair(nums[0], std::optional<double>{});
    if (nums.size() >= 2) return std::make_pair(nums[0], std::optional<double>(nums[1]));
    return std::nullopt;
}

inline StratifyResult stratify(const Dataset& ds, StratifyCriterion criterion) {
    StratifyResult res;
    res.criterion = criterion;
    switch (criterion) {
        case StratifyCriterion::children:
            res.groups[0].label = "Child-Free";
            res.groups[1].label = "With-Children";
            break;
        case StratifyCriterion::seniors:
            res.groups[0].label = "No-Seniors";
            res.groups[1].label = "With-Seniors";
            break;
        case StratifyCriterion::income_25k:
            res.groups[0].label = "Low-income";
            res.groups[1].label = "High-income";
            break;
    }
    constexpr double kIncomeThreshold = 25000.0;
    for (const auto& r : ds.respondents) {
        switch (criterion) {
            case StratifyCriterion::children: {
                auto c = r.children_count();
                if (!c)
                    res.excluded.push_back(r.id);
                else
                    res.groups[*c > 0 ? 1 : 0].ids.push_back(r.id);
                break;
            }
            case StratifyCriterion::seniors: {
                auto c = r.seniors_count();
                if (!c)
                    res.excluded.push_back(r.id);
                else
                    res.groups[*c > 0 ? 1 : 0].ids.push_back(r.id);
                break;
            }
            case StratifyCriterion::income_25k: {
                auto band = r.sd_text("income_band");
                auto range = band ? parse_income_band(*band) : std::nullopt;
                if (!range) {
                    res.excluded.push_back(r.id);
                } else if (range->first >= kIncomeThreshold) {
                    res.groups[1].ids.push_back(r.id);
                } else if (range->second && *range->second < kIncomeThreshold) {
                    res.groups[0].ids.push_back(r.id);
                } else {
                    res.excluded.push_back(r.id);  // band straddles the threshold
                }
                break;
            }
        }
    }
    return res;
}

// ---- attribute encoding ----

struct EncodedScenario {
    std::vector<std::string> covariate_names;
    std::array<std::vector<double>, 3> x;  // one row per alternative
};

inline std::vector<std::string> design_covariate_names(const ExperimentDesign& design) {
    std::vector<std::string> names = {"asc2", "asc3"};
    for (const auto& attr : design.attribute_schema) {
        const AttributeCoding* c = find_coding(design, attr);
        if (!c) fail(ErrorKind::config, "no coding for attribute '" + attr + "'");
        if (c->is_numeric) {
            names.push_back(c->short_name);
        } else {
            for (size_t l = 1; l < c->levels.size(); ++l)
                names.push_back(c->short_name + "_" + c->levels[l].slug);
        }
    }
    return names;
}

// 3 alternatives x K covariates: two alternative-specific constants (option 1
// is the reference), numeric attributes scaled to model units, categorical
// attributes dummy-coded against their declared reference level. Absent
// levels encode 0.
inline EncodedScenario encode_attributes(const ExperimentDesign& design,
                                         const ChoiceScenario& scenario) {
    EncodedScenario out;
    out.covariate_names = design_covariate_names(design);
    for (int j = 0; j < 3; ++j) {
        auto& row = out.x[static_cast<size_t>(j)];
        row.reserve(out.covariate_names.size());
        row.push_back(j == 1 ? 1.0 : 0.0);  // asc2
        row.push_back(j == 2 ? 1.0 : 0.0);  // asc3
        const auto& opt = scenario.options.at(static_cast<size_t>(j));
        for (size_t a = 0; a < design.attribute_schema.size(); ++a) {
            const AttributeCoding* c = find_coding(design, design.attribute_schema[a]);
            const AttributeLevel& lvl = opt.attributes.at(a);
            if (c->is_numeric) {
                double v = 0.0;
                if (lvl.display_value) {
                    if (!lvl.numeric_value)
                        fail(ErrorKind::validation,
                             "attribute '" + lvl.attribute_name + "': display value '" +
                                 *lvl.display_value + "' did not parse as a number");
                    v = *lvl.numeric_value * c->scale;
                }
                row.push_back(v);
            } else {
                int matched = -1;
                if (lvl.display_value) {
                    for (size_t l = 0; l < c->levels.size(); ++l) {
                        if (lvl.categorical_code && *lvl.categorical_code == c->levels[l].label) {
                            matched = static_cast<int>(l);
                            break;
                        }
                    }
                    if (matched < 0)
                        fail(ErrorKind::validation,
                             "attribute '" + lvl.attribute_name + "': unknown categorical level '" +
                                 lvl.display_value.value_or("") + "'");
                }
                for (size_t l = 1; l < c->levels.size(); ++l)
                    row.push_back(matched == static_cast<int>(l) ? 1.0 : 0.0);
            }
        }
    }
    return out;
}

}  // namespace spsim
