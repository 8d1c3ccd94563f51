#include "spsim/synthetic_bench.hpp"

#include "spsim/prompt_forge.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace spsim;

TEST_SUITE_BEGIN("synthetic_bench");

TEST_CASE("same seed yields a byte-identical dataset") {
    PopulationSpec spec = default_population_spec(20, 77);
    SyntheticPopulation a = generate_population(spec);
    SyntheticPopulation b = generate_population(spec);
    CHECK(serialize_dataset(a.dataset).dump() == serialize_dataset(b.dataset).dump());
    CHECK(a.oracle.to_json().dump() == b.oracle.to_json().dump());

    PopulationSpec other = default_population_spec(20, 78);
    SyntheticPopulation c = generate_population(other);
    CHECK(serialize_dataset(a.dataset).dump() != serialize_dataset(c.dataset).dump());
}

TEST_CASE("generated datasets validate cleanly") {
    SyntheticPopulation pop = generate_population(default_population_spec(30, 3));
    CHECK(validate_dataset(pop.dataset).empty());
    CHECK(pop.dataset.respondents.size() == 30);
    for (const auto& r : pop.dataset.respondents) {
        CHECK(r.experiments.size() == 3);
        for (const auto& [id, scenarios] : r.experiments) {
            CHECK(scenarios.size() == 6);
            for (const auto& sc : scenarios) CHECK(sc.recorded_choice.has_value());
        }
    }
}

TEST_CASE("synthetic respondents render through the standard prompt templates") {
    SyntheticPopulation pop = generate_population(default_population_spec(3, 5));
    for (const auto& r : pop.dataset.respondents) {
        const PromptBundle bundle =
            assemble_prompt(r, pop.dataset.design(ExperimentId::SP1), test_scenario(8));
        CHECK(bundle.system_message.find("Your previous choices:") != std::string::npos);
        CHECK(bundle.user_message.find("\"Choice\": null") != std::string::npos);
    }
}

TEST_CASE("deterministic mode records the systematic argmax with a one-hot oracle") {
    PopulationSpec spec = default_population_spec(15, 9);
    spec.deterministic_choices = true;
    SyntheticPopulation pop = generate_population(spec);
    for (auto id : kAllExperiments) {
        const auto& design = pop.dataset.design(id);
        const auto& probs = pop.oracle.probabilities.at(id);
        for (size_t n = 0; n < pop.dataset.respondents.size(); ++n) {
            const auto& scenarios = pop.dataset.respondents[n].experiments.at(id);
            for (int t = 0; t < 6; ++t) {
                const auto& p = probs[n][size_t(t)];
                const int chosen = *scenarios[size_t(t)].recorded_choice;
                CHECK(p[size_t(chosen - 1)] == doctest::Approx(1.0));
            }
            (void)design;
        }
    }
    CHECK(oracle_accuracy_bound(pop.oracle, ExperimentId::SP1) == doctest::Approx(1.0));
}

TEST_CASE("flat zero utilities give uniform shares and a one-third bound") {
    PopulationSpec spec;
    spec.n_respondents = 3000;
    spec.seed = 21;
    auto tpl = heating_experiment_template(ExperimentId::SP1);
    tpl.true_params.beta.assign(tpl.true_params.beta.size(), 0.0);
    tpl.true_params.w.clear();
    spec.experiments.emplace(ExperimentId::SP1, tpl);
    SyntheticPopulation pop = generate_population(spec);

    CHECK(oracle_accuracy_bound(pop.oracle, ExperimentId::SP1) == doctest::Approx(1.0 / 3.0));

    std::array<int, 3> counts{0, 0, 0};
    for (const auto& r : pop.dataset.respondents)
        counts[size_t(*r.experiments.at(ExperimentId::SP1)[5].recorded_choice - 1)]++;
    // 3 sigma binomial around 1000
    const double sd = std::sqrt(3000.0 * (1.0 / 3.0) * (2.0 / 3.0));
    for (int k = 0; k < 3; ++k) CHECK(std::fabs(counts[size_t(k)] - 1000.0) < 3.0 * sd);
}

TEST_CASE("empirical shares converge to the oracle probabilities") {
    PopulationSpec spec;
    spec.n_respondents = 10000;
    spec.seed = 100;
    spec.experiments.emplace(ExperimentId::SP1, heating_experiment_template(ExperimentId::SP1));
    SyntheticPopulation pop = generate_population(spec);

    const auto& probs = pop.oracle.probabilities.at(ExperimentId::SP1);
    std::array<double, 3> expected{0, 0, 0};
    std::array<int, 3> observed{0, 0, 0};
    for (size_t n = 0; n < pop.dataset.respondents.size(); ++n) {
        for (int k = 0; k < 3; ++k) expected[size_t(k)] += probs[n][5][size_t(k)];
        observed[size_t(
            *pop.dataset.respondents[n].experiments.at(ExperimentId::SP1)[5].recorded_choice -
            1)]++;
    }
    for (int k = 0; k < 3; ++k) {
        const double mean = expected[size_t(k)];
        // conservative binomial bound: p(1-p) <= 1/4
        const double sd = std::sqrt(10000.0 * 0.25);
        CHECK(std::fabs(observed[size_t(k)] - mean) < 3.0 * sd);
    }
}

TEST_CASE("the cost-dominant share tracks the oracle within three binomial deviations") {
    PopulationSpec spec;
    spec.n_respondents = 500;
    spec.seed = 61;
    auto tpl = heating_experiment_template(ExperimentId::SP1);
    tpl.true_params.beta.assign(tpl.true_params.beta.size(), 0.0);
    tpl.true_params.beta[2] = -1.5;  // strong fixed-cost taste
    tpl.true_params.w.clear();
    spec.experiments.emplace(ExperimentId::SP1, tpl);
    SyntheticPopulation pop = generate_population(spec);

    const auto& probs = pop.oracle.probabilities.at(ExperimentId::SP1);
    double expected_cheapest = 0.0;
    int observed_cheapest = 0;
    const auto& design = pop.dataset.design(ExperimentId::SP1);
    for (size_t n = 0; n < pop.dataset.respondents.size(); ++n) {
        const auto& sc = pop.dataset.respondents[n].experiments.at(ExperimentId::SP1)[5];
        EncodedScenario enc = encode_attributes(design, sc);
        int cheapest = 0;
        for (int j = 1; j < 3; ++j)
            if (enc.x[size_t(j)][2] < enc.x[size_t(cheapest)][2]) cheapest = j;
        expected_cheapest += probs[n][5][size_t(cheapest)];
        if (*sc.recorded_choice == cheapest + 1) observed_cheapest++;
    }
    const double sd = std::sqrt(500.0 * 0.25);
    CHECK(std::fabs(observed_cheapest - expected_cheapest) < 3.0 * sd);
}

TEST_CASE("the accuracy bound matches a Monte Carlo run of the truth process") {
    PopulationSpec spec;
    spec.n_respondents = 200;
    spec.seed = 404;
    spec.experiments.emplace(ExperimentId::SP1, heating_experiment_template(ExperimentId::SP1));
    SyntheticPopulation pop = generate_population(spec);
    const double bound = oracle_accuracy_bound(pop.oracle, ExperimentId::SP1);
    CHECK(bound > 1.0 / 3.0);
    CHECK(bound < 1.0);

    // resample each respondent's held-out choice from its true probabilities
    // and score the Bayes predictor (argmax p) against the draws
    std::mt19937_64 rng(1234);
    const int draws = 400;
    double hits = 0;
    const auto& probs = pop.oracle.probabilities.at(ExperimentId::SP1);
    for (int m = 0; m < draws; ++m) {
        for (size_t n = 0; n < probs.size(); ++n) {
            const auto& p = probs[n][5];
            int best = 0;
            for (int k = 1; k < 3; ++k)
                if (p[size_t(k)] > p[size_t(best)]) best = k;
            const double u = uniform_open01(rng);
            const int sampled = u < p[0] ? 0 : (u < p[0] + p[1] ? 1 : 2);
            if (sampled == best) hits += 1.0;
        }
    }
    const double mc = hits / (draws * double(probs.size()));
    const double mc_sd = std::sqrt(bound * (1 - bound) / (draws * double(probs.size())));
    CHECK(std::fabs(mc - bound) < 4.0 * mc_sd);
}

TEST_CASE("population specs validate their shape") {
    PopulationSpec spec = default_population_spec(0, 1);
    CHECK_THROWS_AS(generate_population(spec), Error);

    PopulationSpec bad = default_population_spec(5, 1);
    bad.experiments.at(ExperimentId::SP1).true_params.beta.pop_back();
    CHECK_THROWS_AS(generate_population(bad), Error);

    PopulationSpec empty_pool = default_population_spec(5, 1);
    empty_pool.experiments.at(ExperimentId::SP2).pools[1][1].clear();
    CHECK_THROWS_AS(generate_population(empty_pool), Error);
}

TEST_CASE("oracle JSON carries parameters, ids and probabilities") {
    SyntheticPopulation pop = generate_population(default_population_spec(4, 2));
    const ojson j = pop.oracle.to_json();
    CHECK(j["respondent_ids"].size() == 4);
    CHECK(j["true_params"].contains("SP1"));
    CHECK(j["true_params"]["SP1"]["beta"].contains("fixed_cost"));
    CHECK(j["probabilities"]["SP2"].size() == 4);
    CHECK(j["probabilities"]["SP2"][0].size() == 6);
}

TEST_SUITE_END();
