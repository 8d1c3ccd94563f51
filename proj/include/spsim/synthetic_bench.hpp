#pragma once

// Synthetic population generator with a known utility ground truth, so the
// full pipeline (prompts, runner, metrics, estimators) can be verified
// without the proprietary survey. Attribute pools reuse level values visible
// in the real instrument so synthetic prompts render through the same
// templates as real data.

#include "spsim/heating_survey.hpp"
#include "spsim/numeric.hpp"

#include <array>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace spsim {

struct TrueParams {
    std::vector<double> beta;          // aligned with design_covariate_names(design)
    std::map<std::string, double> w;   // normal mixing SD per covariate name

    ojson to_json(const std::vector<std::string>& names) const {
        ojson bj = ojson::object();
        for (size_t i = 0; i < names.size(); ++i) bj[names[i]] = beta[i];
        ojson wj = ojson::object();
        for (const auto& [name, sd] : w) wj[name] = sd;
        return ojson{{"beta", std::move(bj)}, {"w", std::move(wj)}};
    }
};

struct ExperimentTemplate {
    ExperimentDesign design;
    // pools[option][attribute] -> candidate display values (nullopt = absent)
    std::array<std::vector<std::vector<std::optional<std::string>>>, 3> pools;
    std::set<std::string> shared_across_options;  // sampled once per scenario
    TrueParams true_params;
};

struct PopulationSpec {
    int n_respondents = 100;
    std::map<ExperimentId, ExperimentTemplate> experiments;
    uint64_t seed = 1;
    bool deterministic_choices = false;  // suppress the Gumbel noise

    void validate() const {
        if (n_respondents < 1) fail(ErrorKind::config, "n_respondents must be >= 1");
        if (experiments.empty()) fail(ErrorKind::config, "population spec has no experiments");
        for (const auto& [id, tpl] : experiments) {
            const size_t n_attrs = tpl.design.attribute_schema.size();
            const size_t n_cov = design_covariate_names(tpl.design).size();
            if (tpl.true_params.beta.size() != n_cov)
                fail(ErrorKind::config,
                     std::string(to_string(id)) + ": true beta has " +
                         std::to_string(tpl.true_params.beta.size()) + " entries, design needs " +
                         std::to_string(n_cov));
            for (int j = 0; j < 3; ++j) {
                if (tpl.pools[static_cast<size_t>(j)].size() != n_attrs)
                    fail(ErrorKind::config, std::string(to_string(id)) + ": option " +
                                                std::to_string(j + 1) + " pool count mismatch");
                for (const auto& pool : tpl.pools[static_cast<size_t>(j)])
                    if (pool.empty())
                        fail(ErrorKind::config,
                             std::string(to_string(id)) + ": empty attribute pool");
            }
        }
    }
};

struct Oracle {
    // probabilities[experiment][respondent][scenario] = P(choice = k | beta_n)
    std::map<ExperimentId, std::vector<std::array<std::array<double, 3>, 6>>> probabilities;
    std::map<ExperimentId, TrueParams> true_params;
    std::map<ExperimentId, std::vector<std::string>> covariate_names;
    std::vector<std::string> respondent_ids;

    ojson to_json() const {
        ojson j;
        ojson params = ojson::object();
        for (const auto& [id, tp] : true_params)
            params[to_string(id)] = tp.to_json(covariate_names.at(id));
        j["true_params"] = std::move(params);
        j["respondent_ids"] = respondent_ids;
        ojson probs = ojson::object();
        for (const auto& [id, all] : probabilities) {
            ojson per_resp = ojson::array();
            for (const auto& scenarios : all) {
                ojson list = ojson::array();
                for (const auto& p : scenarios) list.push_back(p);
                per_resp.push_back(std::move(list));
            }
            probs[to_string(id)] = std::move(per_resp);
        }
        j["probabilities"] = std::move(probs);
        return j;
    }
};

struct SyntheticPopulation {
    Dataset dataset;
    Oracle oracle;
};

// Expected accuracy of the Bayes-optimal predictor on the held-out scenario:
// the mean over respondents of the largest true choice probability. No
// predictor can beat it in expectation.
inline double oracle_accuracy_bound(const Oracle& oracle, ExperimentId experiment) {
    auto it = oracle.probabilities.find(experiment);
    if (it == oracle.probabilities.end() || it->second.empty())
        fail(ErrorKind::config, "oracle has no probabilities for this experiment");
    double sum = 0.0;
    for (const auto& scenarios : it->second) {
        const auto& p = scenarios[5];
        sum += std::max({p[0], p[1], p[2]});
    }
    return sum / static_cast<double>(it->second.size());
}

namespace detail {

struct SociodemPools {
    std::vector<std::string> income_bands = {
        "Less than £10,000", "£10,000-14,999", "£15,000-19,999", "£20,000-24,999",
        "£25,000-34,999",    "£35,000-49,999", "£50,000-74,999", "£75,000 or more"};
    std::vector<int> age_0_5 = {0, 0, 1, 2};
    std::vector<int> age_6_12 = {0, 0, 1};
    std::vector<int> age_13_17 = {0, 0, 1};
    std::vector<int> age_18_65 = {1, 1, 2};
    std::vector<int> age_65_plus = {0, 0, 1};
    std::vector<int> employed = {0, 1, 2};
    std::vector<std::string> education = {"Secondary school", "A-levels or equivalent",
                                          "Bachelor's degree", "Master's degree"};
    std::vector<std::string> property_type = {"Semi-detached", "Detached", "Terraced", "Flat"};
    std::vector<int> rooms = {4, 5, 6, 7, 8, 9};
    std::vector<std::string> floor_area = {"51-100 m²", "101-150 m²", "151-200 m²"};
    std::vector<std::string> lighting = {"LED", "halogen"};
    std::vector<std::string> built_era = {"Before 1919", "Between 1919 and 1944",
                                          "Between 1945 and 1964", "Between 1965 and 1980",
                                          "After 1980"};
    std::vector<std::string> region = {"Yorkshire and the Humber", "London",  "South East",
                                       "North West",               "Scotland", "Wales"};
    std::vector<std::string> epc = {"A", "B", "C", "D", "E"};
    std::vector<std::string> inspection = {"£0-100", "£101-200", "£201-500"};
    std::vector<std::string> heating_source = {"Gas boiler", "Electric boiler", "Oil boiler"};
    std::vector<std::string> install_age = {"0-3 years", "4-6 years", "7-12 years",
                                            "More than 12 years"};
    std::vector<std::string> tariff = {
        "Fixed price (Price of energy is fixed for 12 or 24 months)",
        "Standard variable (Price of energy can vary during the year)"};
    std::vector<std::string> size_class = {"large house", "medium-sized house", "small house"};
    std::vector<std::string> built_desc = {"before 1965", "after 1965"};
    std::vector<std::string> area_m2 = {"90", "110", "130"};
};

template <typename T>
const T& pick(const std::vector<T>& pool, std::mt19937_64& rng) {
    return pool[rng() % pool.size()];
}

struct StatementPool {
    std::string text;
    const std::vector<std::string>* levels;
};

inline std::vector<StatementPool> statement_pools() {
    static const std::vector<std::string> pvq_levels = {
        "Not like you", "A little like you", "Somewhat like you", "Mostly like you",
        "Very much like you"};
    static const std::vector<std::string> agree_levels = {
        "Strongly disagree", "Somewhat disagree", "Neither agree nor disagree", "Somewhat agree",
        "Strongly agree"};
    static const std::vector<std::string> habit_levels = {"Never", "Occasionally", "Sometimes",
                                                          "Most of the time", "Always"};
    std::vector<StatementPool> pools;
    const char* pvq_items[] = {
        "to prevent environmental pollution", "to protect the environment", "to respect nature",
        "to be in unity with nature",         "to have control over others' actions",
        "to have authority over others",      "to be influential",
        "to have money and possessions",      "to work hard and be ambitious",
        "to have fun",                        "to enjoy life's pleasures",
        "to do things he/she enjoys",         "that everybody has equal opportunities",
        "to take care of those who are worse off", "that everybody is treated justly",
        "that there is no war or conflict",   "to be helpful to others"};
    for (const char* item : pvq_items)
        pools.push_back({std::string("You find a person for whom it is important ") + item +
                             ", {}.",
                         &pvq_levels});
    const char* agree_items[] = {
        "you can obtain reliable advice or guidance about greener and more energy-efficient "
        "heating options",
        "you are confident you would get a high-quality installation",
        "you are clear about the expected level of disruption",
        "the up-front costs of appliances and the installation will be affordable",
        "the bills and maintenance of the heating system will be affordable",
        "the more environmentally friendly heating system would meet my heating needs"};
    for (const char* item : agree_items)
        pools.push_back({std::string("You {} that ") + item + ".", &agree_levels});
    const char* habit_items[] = {
        "check the energy rating on appliances before purchase",
        "reduced waste and increased recycling",
        "adapt your food shopping habits to buy less carbon intensive food",
        "used active travel and public transport alternatives for most travel",
        "taken holidays in the UK rather than abroad specifically to avoid air travel"};
    for (const char* item : habit_items)
        pools.push_back({std::string("You {} ") + item + ".", &habit_levels});
    return pools;
}

}  // namespace detail

// Attribute pools for the built-in heating instrument, seeded from the level
// values the real experiments display.
inline ExperimentTemplate heating_experiment_template(ExperimentId id) {
    ExperimentTemplate tpl;
    tpl.design = heating_design(id);
    using Pool = std::vector<std::optional<std::string>>;
    auto opt = [](std::initializer_list<const char*> values) {
        Pool pool;
        for (const char* v : values) pool.emplace_back(v);
        return pool;
    };
    const Pool support = opt({"None", "4% loan", "Interest-free loan"});
    switch (id) {
        case ExperimentId::SP1: {
            const Pool visits = opt({"1 per year", "2 per year"});
            tpl.pools[0] = {opt({"£ 1900", "£ 2400", "£ 3000"}),
                            opt({"£ 3600 (£ 300 per month)", "£ 6240 (£ 520 per month)",
                                 "£ 2400 (£ 200 per month)"}),
                            support, visits,
                            opt({"4590 kg per year (26 flight(s))",
                                 "4080 kg per year (23 flight(s))",
                                 "2020 kg per year (12 flight(s))"})};
            tpl.pools[1] = {opt({"£ 1900", "£ 2600", "£ 3400"}),
                            opt({"£ 6600 (£ 550 per month)", "£ 1920 (£ 160 per month)",
                                 "£ 3240 (£ 270 per month)"}),
                            support, visits,
                            opt({"1000 kg per year (6 flight(s))", "0 kg per year (0 flight(s))",
                                 "500 kg per year (3 flight(s))"})};
            tpl.pools[2] = {opt({"£ 15300", "£ 9600", "£ 12000"}),
                            opt({"£ 1680 (£ 140 per month)", "£ 2880 (£ 240 per month)",
                                 "£ 2160 (£ 180 per month)"}),
                            support, visits,
                            opt({"0 kg per year (0 flight(s))", "2020 kg per year (12 flight(s))",
                                 "1000 kg per year (6 flight(s))"})};
            tpl.true_params.beta = {0.4, 0.2, -0.12, -0.35, 0.2, 0.5, -0.15, -0.2};
            tpl.true_params.w = {{"fixed_cost", 0.06}, {"operation_cost", 0.15}};
            break;
        }
        case ExperimentId::SP2: {
            const Pool equipment = opt({"£ 10400", "£ 8200", "£ 12600"});
            tpl.shared_across_options = {"Equipment cost"};
            tpl.pools[0] = {equipment, {std::nullopt}, opt({"1 day(s)"}), {std::nullopt}, support};
            tpl.pools[1] = {equipment, opt({"£ 430", "£ 250", "£ 900"}),
                            opt({"1 day(s)", "3 day(s)"}),
                            opt({"£ 25 (Over 1 year(s))", "£ 30 (Over 1 year(s))",
                                 "£ 45 (Over 2 year(s))"}),
                            support};
            tpl.pools[2] = {equipment, opt({"£ 12000", "£ 41000", "£ 22000"}),
                            opt({"30 day(s)", "14 day(s)"}),
                            opt({"£ 116 (Over 9 year(s))", "£ 96 (Over 36 year(s))",
                                 "£ 150 (Over 12 year(s))"}),
                            support};
            tpl.true_params.beta = {0.5, 0.3, 0.0, -0.08, -0.03, 8.0, 0.2, 0.5};
            tpl.true_params.w = {{"retrofit_cost", 0.04}};
            break;
        }
        case ExperimentId::SP3: {
            const Pool pricing =
                opt({"Constant across hours and days",
                     "Can change during the day and you are informed 24 hours ahead of any "
                     "changes",
                     "Can change during the day and you are informed 1 hour ahead of any "
                     "changes"});
            const Pool control =
                opt({"You control the heating entirely",
                     "Heating can be switched off for 1 hour a month. Notification 7 hours "
                     "ahead. Compensation £14",
                     "Heating can be switched off for 1 hour a month. Notification 1 hour "
                     "ahead. Compensation £14"});
            tpl.pools[0] = {opt({"£ 10400", "£ 12800"}),
                            opt({"£ 3600 (£ 300 per month)", "£ 2880 (£ 240 per month)"}),
                            {std::nullopt}, pricing, control};
            tpl.pools[1] = {opt({"£ 5700", "£ 4200"}),
                            opt({"£ 3600 (£ 300 per month)", "£ 3240 (£ 270 per month)"}),
                            opt({"4 year(s)", "8 year(s)"}), pricing, control};
            tpl.pools[2] = {{std::nullopt},
                            opt({"£ 4920 (£ 410 per month)", "£ 4200 (£ 350 per month)"}),
                            opt({"1 year(s)", "2 year(s)"}), pricing, control};
            tpl.true_params.beta = {0.3, 0.1, -0.1, -0.4, -0.08, -0.3, -0.6, -0.2, -0.4};
            tpl.true_params.w = {{"upfront_cost", 0.05}, {"operation_cost", 0.12}};
            break;
        }
    }
    return tpl;
}

inline PopulationSpec default_population_spec(int n_respondents, uint64_t seed) {
    PopulationSpec spec;
    spec.n_respondents = n_respondents;
    spec.seed = seed;
    for (ExperimentId id : kAllExperiments)
        spec.experiments.emplace(id, heating_experiment_template(id));
    return spec;
}

inline SyntheticPopulation generate_population(const PopulationSpec& spec) {
    spec.validate();
    SyntheticPopulation pop;
    std::mt19937_64 rng(spec.seed);
    detail::SociodemPools sd;
    const auto statements = detail::statement_pools();

    for (const auto& [id, tpl] : spec.experiments) {
        pop.dataset.designs.emplace(id, tpl.design);
        pop.oracle.true_params.emplace(id, tpl.true_params);
        pop.oracle.covariate_names.emplace(id, design_covariate_names(tpl.design));
        pop.oracle.probabilities[id].reserve(static_cast<size_t>(spec.n_respondents));
    }

    for (int i = 0; i < spec.n_respondents; ++i) {
        Respondent r;
        char buf[16];
        std::snprintf(buf, sizeof buf, "S%04d", i + 1);
        r.id = buf;
        r.sociodem = ojson{{"income_band", detail::pick(sd.income_bands, rng)},
                           {"age_0_5", detail::pick(sd.age_0_5, rng)},
                           {"age_6_12", detail::pick(sd.age_6_12, rng)},
                           {"age_13_17", detail::pick(sd.age_13_17, rng)},
                           {"age_18_65", detail::pick(sd.age_18_65, rng)},
                           {"age_65_plus", detail::pick(sd.age_65_plus, rng)},
                           {"employed_count", detail::pick(sd.employed, rng)},
                           {"education", detail::pick(sd.education, rng)},
                           {"property_type", detail::pick(sd.property_type, rng)},
                           {"rooms", detail::pick(sd.rooms, rng)},
                           {"floor_area_band", detail::pick(sd.floor_area, rng)},
                           {"lighting", detail::pick(sd.lighting, rng)},
                           {"built_era", detail::pick(sd.built_era, rng)},
                           {"region", detail::pick(sd.region, rng)},
                           {"epc_rating", detail::pick(sd.epc, rng)},
                           {"inspection_spend_band", detail::pick(sd.inspection, rng)},
                           {"heating_source", detail::pick(sd.heating_source, rng)},
                           {"heating_install_age_band", detail::pick(sd.install_age, rng)},
                           {"electricity_tariff", detail::pick(sd.tariff, rng)},
                           {"property_size_class", detail::pick(sd.size_class, rng)},
                           {"property_built_desc", detail::pick(sd.built_desc, rng)},
                           {"property_area_m2", detail::pick(sd.area_m2, rng)}};
        for (const auto& st : statements)
            r.statements.push_back({st.text, detail::pick(*st.levels, rng)});

        for (const auto& [id, tpl] : spec.experiments) {
            const auto covariates = design_covariate_names(tpl.design);
            // respondent-level taste draw
            std::vector<double> beta = tpl.true_params.beta;
            for (const auto& [name, sdev] : tpl.true_params.w) {
                auto it = std::find(covariates.begin(), covariates.end(), name);
                if (it == covariates.end())
                    fail(ErrorKind::config, "true mixing on unknown covariate '" + name + "'");
                beta[static_cast<size_t>(std::distance(covariates.begin(), it))] +=
                    sdev * normal_quantile(uniform_open01(rng));
            }

            std::vector<ChoiceScenario> scenarios;
            std::array<std::array<double, 3>, 6> probs{};
            for (int t = 0; t < 6; ++t) {
                ChoiceScenario sc;
                sc.index = t + 1;
                std::map<std::string, std::optional<std::string>> shared;
                for (int j = 0; j < 3; ++j) {
                    ScenarioOption opt;
                    opt.name = tpl.design.option_names[static_cast<size_t>(j)];
                    for (size_t a = 0; a < tpl.design.attribute_schema.size(); ++a) {
                        const std::string& attr = tpl.design.attribute_schema[a];
                        std::optional<std::string> display;
                        if (tpl.shared_across_options.count(attr)) {
                            auto it = shared.find(attr);
                            if (it == shared.end()) {
                                display = detail::pick(tpl.pools[static_cast<size_t>(j)][a], rng);
                                shared.emplace(attr, display);
                            } else {
                                display = it->second;
                            }
                        } else {
                            display = detail::pick(tpl.pools[static_cast<size_t>(j)][a], rng);
                        }
                        opt.attributes.push_back(
                            make_attribute_level(tpl.design, attr, std::move(display)));
                    }
                    sc.options.push_back(std::move(opt));
                }

                const EncodedScenario enc = encode_attributes(tpl.design, sc);
                std::array<double, 3> v{};
                for (int j = 0; j < 3; ++j) {
                    double acc = 0.0;
                    for (size_t k = 0; k < beta.size(); ++k)
                        acc += beta[k] * enc.x[static_cast<size_t>(j)][k];
                    v[static_cast<size_t>(j)] = acc;
                }
                const double m = std::max({v[0], v[1], v[2]});
                double s = 0.0;
                std::array<double, 3> p{};
                for (int j = 0; j < 3; ++j) {
                    p[static_cast<size_t>(j)] = std::exp(v[static_cast<size_t>(j)] - m);
                    s += p[static_cast<size_t>(j)];
                }
                for (auto& q : p) q /= s;

                int chosen;
                if (spec.deterministic_choices) {
                    chosen = 0;
                    for (int j = 1; j < 3; ++j)
                        if (v[static_cast<size_t>(j)] > v[static_cast<size_t>(chosen)]) chosen = j;
                    // the noiseless oracle is the argmax indicator
                    p = {0.0, 0.0, 0.0};
                    p[static_cast<size_t>(chosen)] = 1.0;
                } else {
                    std::array<double, 3> shocked = v;
                    for (auto& u : shocked) u += gumbel_from_uniform(uniform_open01(rng));
                    chosen = 0;
                    for (int j = 1; j < 3; ++j)
                        if (shocked[static_cast<size_t>(j)] > shocked[static_cast<size_t>(chosen)])
                            chosen = j;
                }
                sc.recorded_choice = chosen + 1;
                probs[static_cast<size_t>(t)] = p;
                scenarios.push_back(std::move(sc));
            }
            r.experiments.emplace(id, std::move(scenarios));
            pop.oracle.probabilities[id].push_back(probs);
        }
        pop.oracle.respondent_ids.push_back(r.id);
        pop.dataset.respondents.push_back(std::move(r));
    }
    return pop;
}

}  // namespace spsim
