// Command-line entry point wiring the survey-simulation harness together:
// dataset validation, prompt rendering, ablation runs against local/cloud or
// scripted backends, choice-model estimation, factor filtering, holdout
// prediction, reporting, and synthetic dataset generation.

#include "spsim/choice_model.hpp"
#include "spsim/heating_survey.hpp"
#include "spsim/llm_gateway.hpp"
#include "spsim/metrics_lab.hpp"
#include "spsim/prompt_forge.hpp"
#include "spsim/scenario_runner.hpp"
#include "spsim/scripted_backends.hpp"
#include "spsim/survey_data.hpp"
#include "spsim/synthetic_bench.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <memory>

using namespace spsim;

namespace {

std::vector<ExperimentId> parse_experiments(const std::vector<std::string>& names) {
    std::vector<ExperimentId> out;
    if (names.empty()) return {ExperimentId::SP1, ExperimentId::SP2, ExperimentId::SP3};
    for (const auto& name : names) {
        auto id = parse_experiment_id(name);
        if (!id) fail(ErrorKind::config, "unknown experiment '" + name + "' (SP1|SP2|SP3)");
        out.push_back(*id);
    }
    return out;
}

// Scripted backend specs: mock:echo | mock:fixed:K | mock:uniform:SEED |
// mock:malformed:RATE:SEED | mock:argmax:PARAMS.json
std::unique_ptr<ChatBackend> make_mock(const std::string& spec, const Dataset& dataset) {
    const auto parts = split(spec, ':');
    const std::string& kind = parts[1];
    if (kind == "echo") return ScriptedBackend::echo();
    if (kind == "fixed") {
        if (parts.size() < 3) fail(ErrorKind::config, "mock:fixed needs a choice, e.g. mock:fixed:2");
        return ScriptedBackend::fixed_choice(std::stoi(parts[2]));
    }
    if (kind == "uniform") {
        const uint64_t seed = parts.size() > 2 ? std::stoull(parts[2]) : 1;
        return ScriptedBackend::uniform_random(seed);
    }
    if (kind == "malformed") {
        if (parts.size() < 4)
            fail(ErrorKind::config, "mock:malformed needs rate and seed, e.g. mock:malformed:0.05:7");
        return ScriptedBackend::malformed(std::stod(parts[2]), std::stoull(parts[3]));
    }
    if (kind == "argmax") {
        if (parts.size() < 3)
            fail(ErrorKind::config, "mock:argmax needs a parameter file, e.g. mock:argmax:params.json");
        const ojson j = parse_json_file(parts[2]);
        std::map<ExperimentId, std::vector<double>> betas;
        std::map<ExperimentId, ExperimentDesign> designs;
        for (const auto& [name, bj] : j.at("betas").items()) {
            auto id = parse_experiment_id(name);
            if (!id) fail(ErrorKind::config, "argmax params: unknown experiment '" + name + "'");
            const ExperimentDesign& design = dataset.design(*id);
            const auto names = design_covariate_names(design);
            std::vector<double> beta(names.size(), 0.0);
            for (const auto& [cov, value] : bj.items()) {
                auto it = std::find(names.begin(), names.end(), cov);
                if (it == names.end())
                    fail(ErrorKind::config, "argmax params: unknown covariate '" + cov + "'");
                beta[static_cast<size_t>(std::distance(names.begin(), it))] = value.get<double>();
            }
            betas.emplace(*id, std::move(beta));
            designs.emplace(*id, design);
        }
        std::optional<uint64_t> noise;
        if (j.contains("noise_seed") && !j["noise_seed"].is_null())
            noise = j["noise_seed"].get<uint64_t>();
        return ScriptedBackend::utility_argmax(std::move(betas), std::move(designs), noise);
    }
    fail(ErrorKind::config, "unknown mock backend '" + spec + "'");
}

std::map<std::string, BackendConfig> load_backend_registry(const std::string& path) {
    std::map<std::string, BackendConfig> out;
    if (path.empty()) return out;
    const ojson j = parse_json_file(path);
    for (const auto& bj : j.at("backends")) {
        BackendConfig cfg = BackendConfig::from_json(bj);
        out.emplace(cfg.backend_id, std::move(cfg));
    }
    return out;
}

int run_command(int argc, char** argv) {
    CLI::App app{"Stated-preference survey simulation harness"};
    app.require_subcommand(1);

    std::string dataset_path, run_dir, backend_spec, backends_config, templates_dir;
    std::string fit_path, out_path, oracle_path, format = "text", filter_path, model = "mixl";
    std::vector<std::string> experiment_names, run_dirs, prediction_files;
    std::vector<int> scenario_ids;
    std::string respondent_id;
    int scenario_id = 8;
    int repeats = 5;
    int respondents = 100;
    int draws = 200;
    int workers = 4;
    uint64_t seed = 1;
    double alpha = 0.05;
    bool deterministic = false, no_interactions = false;
    std::string random_names, policy_name = "retry_then_exclude";

    auto* validate = app.add_subcommand("validate", "Check a dataset against the schema");
    validate->add_option("--dataset", dataset_path, "Dataset JSON file")->required();

    auto* render = app.add_subcommand("render", "Render one prompt bundle (audit tool)");
    render->add_option("--dataset", dataset_path)->required();
    render->add_option("--respondent", respondent_id, "Respondent id")->required();
    render->add_option("--experiment", experiment_names, "SP1|SP2|SP3");
    render->add_option("--scenario", scenario_id, "Test scenario id (1..12)");
    render->add_option("--templates", templates_dir, "Template override directory");
    render->add_option("--format", format, "text|json");

    auto* run_cmd = app.add_subcommand("run", "Execute the ablation matrix against a backend");
    run_cmd->add_option("--dataset", dataset_path)->required();
    run_cmd->add_option("--run-dir", run_dir)->required();
    run_cmd->add_option("--scenario", scenario_ids, "Scenario ids (repeatable, 1..12)");
    run_cmd->add_option("--experiment", experiment_names, "Experiments (repeatable)");
    auto* repeats_opt = run_cmd->add_option("--repeats", repeats, "Repeats per scenario");
    run_cmd->add_option("--backend", backend_spec, "mock:... or a named backend");
    run_cmd->add_option("--backends-config", backends_config, "Backend registry JSON");
    run_cmd->add_option("--seed", seed, "Run seed");
    run_cmd->add_option("--policy", policy_name, "retry_then_exclude|retry_then_wrong");
    run_cmd->add_option("--filter", filter_path, "Factor-filter JSON for scenario 10");
    run_cmd->add_option("--workers", workers, "Worker threads");
    run_cmd->add_option("--templates", templates_dir);
    bool dump_prompts = false;
    run_cmd->add_flag("--dump-prompts", dump_prompts, "Write prompts/<digest>.json audit dumps");
    std::string keywords_path;
    run_cmd->add_option("--keywords", keywords_path, "Ignored-factor keyword table JSON");

    auto* estimate = app.add_subcommand("estimate", "Estimate a choice model");
    estimate->add_option("--dataset", dataset_path)->required();
    estimate->add_option("--experiment", experiment_names)->required();
    estimate->add_option("--model", model, "mnl|mixl");
    estimate->add_option("--draws", draws, "Simulation draws");
    estimate->add_option("--seed", seed, "Draw seed");
    estimate->add_option("--random", random_names, "Comma-separated random coefficients");
    estimate->add_flag("--no-interactions", no_interactions,
                       "Drop the sociodemographic interaction terms");
    estimate->add_option("--out", out_path, "Fit output JSON");

    auto* filter_cmd = app.add_subcommand("filter", "Derive the scenario-10 factor filter");
    filter_cmd->add_option("--fit", fit_path)->required();
    filter_cmd->add_option("--alpha", alpha, "Significance level");
    filter_cmd->add_option("--out", out_path, "Filter output JSON");

    auto* predict = app.add_subcommand("predict", "Predict held-out choices from a fit");
    predict->add_option("--fit", fit_path)->required();
    predict->add_option("--dataset", dataset_path)->required();
    predict->add_option("--out", out_path, "Predictions output JSON");

    auto* report = app.add_subcommand("report", "Build the evaluation report from run stores");
    report->add_option("--run-dir", run_dirs, "Run directories (repeatable)")->required();
    report->add_option("--dataset", dataset_path)->required();
    report->add_option("--predictions", prediction_files, "Choice-model predictions (repeatable)");
    report->add_option("--format", format, "text|json|csv");
    report->add_option("--out", out_path, "Output directory for CSV tables");
    report->add_option("--policy", policy_name, "retry_then_exclude|retry_then_wrong");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with ground truth");
    synth->add_option("--respondents", respondents, "Population size");
    synth->add_option("--seed", seed, "Generator seed");
    synth->add_option("--out", out_path, "Dataset output JSON")->required();
    synth->add_option("--oracle", oracle_path, "Oracle sidecar output JSON");
    synth->add_flag("--deterministic", deterministic, "Suppress the choice noise");

    auto* templates_cmd = app.add_subcommand("templates", "Export the built-in prompt templates");
    templates_cmd->add_option("--out", out_path, "Directory to write one file per template")
        ->required();

    CLI11_PARSE(app, argc, argv);

    if (validate->parsed()) {
        Dataset ds = load_dataset(dataset_path);
        auto violations = validate_dataset(ds);
        for (const auto& v : violations)
            std::cout << v.where << ": " << v.message << "\n";
        std::cout << (violations.empty() ? "dataset OK" : "violations: " +
                                                              std::to_string(violations.size()))
                  << "\n";
        return violations.empty() ? 0 : 1;
    }

    if (render->parsed()) {
        Dataset ds = load_dataset(dataset_path);
        const Respondent* r = ds.find_respondent(respondent_id);
        if (!r) fail(ErrorKind::config, "no respondent '" + respondent_id + "' in the dataset");
        const auto experiments = parse_experiments(experiment_names);
        const TemplateSet templates = templates_dir.empty() ? TemplateSet::builtin()
                                                            : TemplateSet::from_dir(templates_dir);
        const TestScenarioConfig cfg = test_scenario(scenario_id);
        const PromptBundle bundle =
            assemble_prompt(*r, ds.design(experiments.front()), cfg, templates);
        if (format == "json") {
            std::cout << bundle.to_json().dump(2) << "\n";
        } else {
            std::cout << "--- system message ---\n" << bundle.system_message
                      << "\n--- user message ---\n" << bundle.user_message << "\n";
        }
        return 0;
    }

    if (run_cmd->parsed()) {
        Dataset ds = load_dataset(dataset_path);
        if (scenario_ids.empty()) scenario_ids = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
        RunManifest manifest = make_manifest(ds, scenario_ids, parse_experiments(experiment_names),
                                             repeats, repeats_opt->count() > 0, seed);
        if (auto p = parse_invalid_policy(policy_name)) manifest.invalid_policy = *p;
        else fail(ErrorKind::config, "unknown policy '" + policy_name + "'");
        if (!filter_path.empty()) {
            const ojson j = parse_json_file(filter_path);
            std::set<std::string> retain;
            for (const auto& f : j.at("retain")) retain.insert(f.get<std::string>());
            manifest.scenario10_filter = std::move(retain);
        }

        auto registry = load_backend_registry(backends_config);
        std::map<std::string, std::unique_ptr<ChatBackend>> cache;
        std::unique_ptr<ChatBackend> mock;
        if (starts_with(backend_spec, "mock:")) mock = make_mock(backend_spec, ds);
        BackendProvider provider = [&](const std::string& backend_id) -> ChatBackend& {
            if (mock) return *mock;
            const std::string wanted = backend_spec.empty() ? backend_id : backend_spec;
            auto it = cache.find(wanted);
            if (it != cache.end()) return *it->second;
            auto cfg_it = registry.find(wanted);
            if (cfg_it == registry.end())
                fail(ErrorKind::config, "no backend named '" + wanted +
                                            "' (give --backends-config or use mock:...)");
            auto backend = std::make_unique<HttpChatBackend>(cfg_it->second);
            auto log = std::make_shared<AuditLog>(run_dir + "/audit_" + wanted + ".jsonl");
            backend->set_audit_log(log);
            return *cache.emplace(wanted, std::move(backend)).first->second;
        };
        for (const auto& [name, cfg] : registry)
            manifest.backend_summaries[name] = cfg.to_json();

        RunOptions options;
        options.workers = workers;
        options.dump_prompts = dump_prompts;
        if (!keywords_path.empty())
            options.keyword_table = IgnoredKeywordTable::from_file(keywords_path);
        TemplateSet templates = templates_dir.empty() ? TemplateSet::builtin()
                                                      : TemplateSet::from_dir(templates_dir);
        options.templates = &templates;
        RunStore store(run_dir);
        RunSummary summary = run(ds, manifest, store, provider, options);
        std::cout << summary.to_json().dump(2) << "\n";
        return 0;
    }

    if (estimate->parsed()) {
        Dataset ds = load_dataset(dataset_path);
        const auto experiments = parse_experiments(experiment_names);
        ModelSpec spec = canonical_model_spec(experiments.front());
        if (no_interactions) spec.sociodem_terms.clear();
        spec.n_draws = draws;
        spec.seed = seed;
        if (!random_names.empty()) {
            spec.random_coefficients.clear();
            for (const auto& name : split(random_names, ','))
                if (!trim(name).empty()) spec.random_coefficients.push_back(trim(name));
        }
        ChoiceModelFit fit;
        if (model == "mnl") {
            spec.random_coefficients.clear();
            fit = estimate_mnl(spec, ds);
        } else if (model == "mixl") {
            fit = estimate_mixl(spec, ds);
        } else {
            fail(ErrorKind::config, "unknown model '" + model + "' (mnl|mixl)");
        }
        std::cout << fit.summary_table();
        if (!out_path.empty()) write_file(out_path, fit.to_json().dump(2) + "\n");
        return fit.converged ? 0 : 1;
    }

    if (filter_cmd->parsed()) {
        ChoiceModelFit fit = ChoiceModelFit::from_json(parse_json_file(fit_path));
        auto retained = factor_filter_from_fit(fit, alpha);
        ojson j;
        j["alpha"] = alpha;
        j["retain"] = retained;
        const std::string text = j.dump(2) + "\n";
        if (!out_path.empty()) write_file(out_path, text);
        std::cout << text;
        return 0;
    }

    if (predict->parsed()) {
        ChoiceModelFit fit = ChoiceModelFit::from_json(parse_json_file(fit_path));
        Dataset ds = load_dataset(dataset_path);
        auto predictions = predict_choices(fit, ds);
        const ojson j = predictions_to_json(fit.spec.experiment_id, predictions);
        if (!out_path.empty()) write_file(out_path, j.dump(2) + "\n");
        else std::cout << j.dump(2) << "\n";
        std::cerr << "predicted " << predictions.size() << " respondents\n";
        return 0;
    }

    if (report->parsed()) {
        Dataset ds = load_dataset(dataset_path);
        std::vector<SimulationRecord> records;
        for (const auto& dir : run_dirs) {
            RunStore store(dir);
            for (auto& rec : store.load_records()) records.push_back(std::move(rec));
        }
        PredictionSet predictions;
        for (const auto& file : prediction_files) {
            PredictionSet p = PredictionSet::from_json(parse_json_file(file));
            for (auto& [eid, preds] : p.choices)
                predictions.choices[eid].insert(preds.begin(), preds.end());
        }
        ReportOptions options;
        if (auto p = parse_invalid_policy(policy_name)) options.policy = *p;
        MetricsReport result = compute_report(
            records, ds, options, prediction_files.empty() ? nullptr : &predictions);
        if (format == "json") {
            std::cout << report_to_json(result).dump(2) << "\n";
        } else if (format == "csv") {
            if (out_path.empty()) fail(ErrorKind::config, "--format csv needs --out DIR");
            std::filesystem::create_directories(out_path);
            for (const auto& [name, csv] : report_to_csv(result))
                write_file(out_path + "/" + name + ".csv", csv);
            std::cout << "wrote CSV tables to " << out_path << "\n";
        } else {
            std::cout << report_to_text(result);
        }
        return 0;
    }

    if (synth->parsed()) {
        PopulationSpec spec = default_population_spec(respondents, seed);
        spec.deterministic_choices = deterministic;
        SyntheticPopulation pop = generate_population(spec);
        write_file(out_path, serialize_dataset(pop.dataset).dump(2) + "\n");
        if (!oracle_path.empty()) write_file(oracle_path, pop.oracle.to_json().dump(2) + "\n");
        std::cout << "wrote " << respondents << " respondents to " << out_path << "\n";
        return 0;
    }

    if (templates_cmd->parsed()) {
        TemplateSet::builtin().save_dir(out_path);
        std::cout << "wrote templates to " << out_path << "\n";
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_command(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
