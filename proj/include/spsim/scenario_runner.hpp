#pragma once

// Executes the ablation matrix over a dataset: every (respondent,
// experiment, test scenario, repeat) cell is rendered, sent to a backend,
// parsed, and persisted to an append-only JSONL store. Stores are resumable
// and byte-deterministic under scripted backends: cells are committed in
// canonical order regardless of how many workers computed them.

#include "spsim/llm_gateway.hpp"
#include "spsim/numeric.hpp"
#include "spsim/prompt_forge.hpp"
#include "spsim/response_codec.hpp"

#include <atomic>
#include <ctime>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace spsim {

enum class InvalidPolicy { retry_then_exclude, retry_then_wrong };

inline const char* to_string(InvalidPolicy p) {
    return p == InvalidPolicy::retry_then_exclude ? "retry_then_exclude" : "retry_then_wrong";
}

inline std::optional<InvalidPolicy> parse_invalid_policy(std::string_view s) {
    if (s == "retry_then_exclude") return InvalidPolicy::retry_then_exclude;
    if (s == "retry_then_wrong") return InvalidPolicy::retry_then_wrong;
    return std::nullopt;
}

struct RunManifest {
    std::string run_id;
    std::string dataset_hash;
    std::vector<int> scenario_ids;           // LLM scenarios only (1..12)
    std::vector<ExperimentId> experiments;
    int repeats = 5;
    std::map<int, int> repeats_by_scenario;  // resolved per-scenario counts
    ojson backend_summaries = ojson::object();
    std::string created_at;
    InvalidPolicy invalid_policy = InvalidPolicy::retry_then_exclude;
    int content_retries = 2;
    uint64_t seed = 0;
    std::optional<std::set<std::string>> scenario10_filter;

    void validate() const {
        if (repeats < 1) fail(ErrorKind::config, "repeats must be >= 1");
        if (scenario_ids.empty()) fail(ErrorKind::config, "no scenarios selected");
        for (int id : scenario_ids)
            if (id < 1 || id > 12)
                fail(ErrorKind::config,
                     "scenario " + std::to_string(id) + " is outside the LLM range 1..12");
        if (experiments.empty()) fail(ErrorKind::config, "no experiments selected");
        for (const auto& [id, n] : repeats_by_scenario)
            if (n < 1) fail(ErrorKind::config, "resolved repeats for scenario " +
                                               std::to_string(id) + " must be >= 1");
    }

    int repeats_for(int scenario_id) const {
        auto it = repeats_by_scenario.find(scenario_id);
        return it != repeats_by_scenario.end() ? it->second : repeats;
    }

    ojson to_json() const {
        ojson j;
        j["run_id"] = run_id;
        j["dataset_hash"] = dataset_hash;
        j["scenario_ids"] = scenario_ids;
        ojson exps = ojson::array();
        for (auto e : experiments) exps.push_back(to_string(e));
        j["experiments"] = std::move(exps);
        j["repeats"] = repeats;
        ojson rbs = ojson::object();
        for (const auto& [id, n] : repeats_by_scenario) rbs[std::to_string(id)] = n;
        j["repeats_by_scenario"] = std::move(rbs);
        j["backend_summaries"] = backend_summaries;
        j["created_at"] = created_at;
        j["invalid_policy"] = to_string(invalid_policy);
        j["content_retries"] = content_retries;
        j["seed"] = seed;
        if (scenario10_filter) {
            ojson filter = ojson::array();
            for (const auto& f : *scenario10_filter) filter.push_back(f);
            j["scenario10_filter"] = std::move(filter);
        } else {
            j["scenario10_filter"] = nullptr;
        }
        return j;
    }

    static RunManifest from_json(const ojson& j) {
        RunManifest m;
        m.run_id = j.value("run_id", std::string{});
        m.dataset_hash = j.value("dataset_hash", std::string{});
        for (const auto& id : j.at("scenario_ids")) m.scenario_ids.push_back(id.get<int>());
        for (const auto& e : j.at("experiments")) {
            auto eid = parse_experiment_id(e.get<std::string>());
            if (!eid) fail(ErrorKind::format, "manifest: bad experiment id");
            m.experiments.push_back(*eid);
        }
        m.repeats = j.value("repeats", 5);
        if (j.contains("repeats_by_scenario"))
            for (const auto& [key, n] : j["repeats_by_scenario"].items())
                m.repeats_by_scenario[std::stoi(key)] = n.get<int>();
        m.backend_summaries = j.value("backend_summaries", ojson::object());
        m.created_at = j.value("created_at", std::string{});
        if (auto p = parse_invalid_policy(j.value("invalid_policy", "retry_then_exclude")))
            m.invalid_policy = *p;
        m.content_retries = j.value("content_retries", 2);
        m.seed = j.value("seed", uint64_t{0});
        if (j.contains("scenario10_filter") && !j["scenario10_filter"].is_null()) {
            std::set<std::string> filter;
            for (const auto& f : j["scenario10_filter"]) filter.insert(f.get<std::string>());
            m.scenario10_filter = std::move(filter);
        }
        return m;
    }
};

// Builds a manifest with the standard defaults: five repeats for scenarios
// run against the local backend, a single run for the cloud scenario (12)
// unless the caller pinned the repeat count explicitly.
inline RunManifest make_manifest(const Dataset& dataset, std::vector<int> scenario_ids,
                                 std::vector<ExperimentId> experiments, int repeats = 5,
                                 bool repeats_explicit = false, uint64_t seed = 0) {
    RunManifest m;
    m.dataset_hash = dataset_digest(dataset);
    m.scenario_ids = std::move(scenario_ids);
    m.experiments = std::move(experiments);
    m.repeats = repeats;
    m.seed = seed;
    for (int id : m.scenario_ids)
        m.repeats_by_scenario[id] = (id == 12 && !repeats_explicit) ? 1 : repeats;

    std::string key = m.dataset_hash + "|" + std::to_string(seed) + "|" +
                      std::to_string(repeats) + "|" + to_string(m.invalid_policy);
    for (int id : m.scenario_ids) key += "|s" + std::to_string(id);
    for (auto e : m.experiments) key += std::string("|") + to_string(e);
    m.run_id = "run-" + digest_hex(key).substr(0, 12);

    char buf[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    m.created_at = buf;
    m.validate();
    return m;
}

struct SimulationRecord {
    std::string run_id;
    std::string respondent_id;
    ExperimentId experiment_id = ExperimentId::SP1;
    int scenario_id = 0;
    int repeat_index = 0;  // 0-based
    SimResponse response;
    int truth = 0;  // recorded choice of the held-out scenario
    std::string prompt_digest;
    int64_t latency_ms = 0;
    int attempt_count = 1;    // transport attempts of the final call
    int content_attempts = 1; // samples drawn for this cell
    std::string transport_error;

    std::string cell_key() const {
        return respondent_id + "|" + to_string(experiment_id) + "|" +
               std::to_string(scenario_id) + "|" + std::to_string(repeat_index);
    }

    ojson to_json() const {
        ojson j;
        j["run_id"] = run_id;
        j["respondent_id"] = respondent_id;
        j["experiment"] = to_string(experiment_id);
        j["scenario"] = scenario_id;
        j["repeat"] = repeat_index;
        j["truth"] = truth;
        j["prompt_digest"] = prompt_digest;
        j["latency_ms"] = latency_ms;
        j["attempt_count"] = attempt_count;
        j["content_attempts"] = content_attempts;
        j["transport_error"] = transport_error;
        j["response"] = response.to_json();
        return j;
    }

    static SimulationRecord from_json(const ojson& j) {
        SimulationRecord r;
        r.run_id = j.value("run_id", std::string{});
        r.respondent_id = j.at("respondent_id").get<std::string>();
        auto eid = parse_experiment_id(j.at("experiment").get<std::string>());
        if (!eid) fail(ErrorKind::format, "record: bad experiment id");
        r.experiment_id = *eid;
        r.scenario_id = j.at("scenario").get<int>();
        r.repeat_index = j.at("repeat").get<int>();
        r.truth = j.at("truth").get<int>();
        r.prompt_digest = j.value("prompt_digest", std::string{});
        r.latency_ms = j.value("latency_ms", int64_t{0});
        r.attempt_count = j.value("attempt_count", 1);
        r.content_attempts = j.value("content_attempts", 1);
        r.transport_error = j.value("transport_error", std::string{});
        const auto& rj = j.at("response");
        if (auto s = parse_response_status(rj.value("status", "invalid_format")))
            r.response.status = *s;
        if (rj.contains("choice") && !rj["choice"].is_null())
            r.response.choice = rj["choice"].get<int>();
        if (rj.contains("explanation") && !rj["explanation"].is_null())
            r.response.explanation = rj["explanation"].get<std::string>();
        if (rj.contains("ignored_raw"))
            for (const auto& item : rj["ignored_raw"])
                r.response.ignored_raw.push_back(item.get<std::string>());
        if (rj.contains("ignored_canonical"))
            for (const auto& [bucket, n] : rj["ignored_canonical"].items()) {
                FactorBucket b = FactorBucket::OTHER;
                if (bucket == "SPC") b = FactorBucket::SPC;
                else if (bucket == "SD") b = FactorBucket::SD;
                else if (bucket == "ST") b = FactorBucket::ST;
                r.response.ignored_canonical[b] = n.get<int>();
            }
        r.response.raw_text = rj.value("raw_text", std::string{});
        return r;
    }
};

// Run-directory store: manifest.json + records.jsonl. Appends are atomic per
// record; a partially written trailing line (crash mid-append) is dropped on
// open so a resumed run continues from the last durable record.
class RunStore {
public:
    explicit RunStore(std::string dir) : dir_(std::move(dir)) {}

    const std::string& dir() const { return dir_; }
    std::string manifest_path() const { return dir_ + "/manifest.json"; }
    std::string records_path() const { return dir_ + "/records.jsonl"; }

    // Creates the directory + manifest, or verifies that the existing
    // manifest matches (resume).
    RunManifest open(const RunManifest& wanted) {
        std::filesystem::create_directories(dir_);
        if (std::filesystem::exists(manifest_path())) {
            RunManifest existing = RunManifest::from_json(parse_json_file(manifest_path()));
            if (existing.dataset_hash != wanted.dataset_hash ||
                existing.scenario_ids != wanted.scenario_ids ||
                existing.experiments != wanted.experiments ||
                existing.repeats_by_scenario != wanted.repeats_by_scenario ||
                existing.seed != wanted.seed ||
                existing.invalid_policy != wanted.invalid_policy)
                fail(ErrorKind::config,
                     "run directory " + dir_ + " holds a different run; refusing to mix");
            load_existing();
            return existing;
        }
        write_file(manifest_path(), wanted.to_json().dump(2) + "\n");
        load_existing();
        return wanted;
    }

    bool contains(const std::string& cell_key) const { return keys_.count(cell_key) > 0; }
    size_t size() const { return keys_.size(); }

    void append(const SimulationRecord& record) {
        std::ofstream out(records_path(), std::ios::app | std::ios::binary);
        if (!out) fail(ErrorKind::io, "cannot append to " + records_path());
        out << record.to_json().dump() << '\n';
        out.flush();
        if (!out) fail(ErrorKind::io, "write failed on " + records_path());
        keys_.insert(record.cell_key());
    }

    std::vector<SimulationRecord> load_records() const {
        std::vector<SimulationRecord> out;
        if (!std::filesystem::exists(records_path())) return out;
        std::ifstream in(records_path(), std::ios::binary);
        std::string line;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            ojson j = ojson::parse(line, nullptr, false);
            if (j.is_discarded()) continue;
            out.push_back(SimulationRecord::from_json(j));
        }
        return out;
    }

private:
    void load_existing() {
        keys_.clear();
        if (!std::filesystem::exists(records_path())) return;
        std::string content = read_file(records_path());
        size_t good_end = 0, pos = 0;
        while (pos < content.size()) {
            const size_t nl = content.find('\n', pos);
            if (nl == std::string::npos) break;  // trailing partial line
            const std::string line = content.substr(pos, nl - pos);
            ojson j = ojson::parse(line, nullptr, false);
            if (j.is_discarded()) break;
            keys_.insert(SimulationRecord::from_json(j).cell_key());
            good_end = nl + 1;
            pos = nl + 1;
        }
        if (good_end != content.size())
            write_file(records_path(), content.substr(0, good_end));
    }

    std::string dir_;
    std::set<std::string> keys_;
};

using BackendProvider = std::function<ChatBackend&(const std::string& backend_id)>;

struct RunOptions {
    int workers = 4;
    // Test hook: stop after committing this many new records (simulated
    // interruption). 0 = run to completion.
    size_t max_new_records = 0;
    const TemplateSet* templates = nullptr;
    IgnoredKeywordTable keyword_table;
    bool dump_prompts = false;  // write prompts/<digest>.json audit files
};

struct RunSummary {
    size_t cells_total = 0;
    size_t cells_skipped_existing = 0;
    size_t records_written = 0;
    size_t backend_calls = 0;
    size_t respondents_skipped = 0;
    bool interrupted = false;
    std::map<std::string, size_t> status_counts;

    ojson to_json() const {
        ojson j;
        j["cells_total"] = cells_total;
        j["cells_skipped_existing"] = cells_skipped_existing;
        j["records_written"] = records_written;
        j["backend_calls"] = backend_calls;
        j["respondents_skipped"] = respondents_skipped;
        j["interrupted"] = interrupted;
        j["status_counts"] = status_counts;
        return j;
    }
};

namespace detail {

struct Cell {
    const Respondent* respondent;
    ExperimentId experiment;
    TestScenarioConfig cfg;
    int repeat;
    int truth;
};

inline uint64_t cell_sample_key(uint64_t run_seed, const Cell& cell, int content_attempt) {
    const std::string key = cell.respondent->id + "|" + to_string(cell.experiment) + "|" +
                            std::to_string(cell.cfg.id) + "|" + std::to_string(cell.repeat) +
                            "|" + std::to_string(content_attempt);
    return mix_seed(run_seed, fnv1a64(key));
}

}  // namespace detail

// Executes every missing cell of the manifest. Already persisted cells are
// skipped, which makes re-invocation after an interruption equivalent to one
// uninterrupted run.
inline RunSummary run(const Dataset& dataset, const RunManifest& manifest_in, RunStore& store,
                      const BackendProvider& backends, const RunOptions& options = {}) {
    RunManifest manifest = store.open(manifest_in);
    manifest.validate();
    const TemplateSet builtin = TemplateSet::builtin();
    const TemplateSet& templates = options.templates ? *options.templates : builtin;

    std::vector<TestScenarioConfig> configs;
    for (int id : manifest.scenario_ids) {
        TestScenarioConfig cfg = test_scenario(id);
        if (!cfg.is_llm_scenario)
            fail(ErrorKind::config, "scenario " + std::to_string(id) + " is not runnable");
        if (id == 10 && manifest.scenario10_filter) cfg.factor_filter = manifest.scenario10_filter;
        configs.push_back(std::move(cfg));
    }

    RunSummary summary;
    std::vector<detail::Cell> cells;
    std::set<std::string> skipped_respondents;
    for (const auto& cfg : configs) {
        for (ExperimentId exp : manifest.experiments) {
            for (const auto& r : dataset.respondents) {
                auto it = r.experiments.find(exp);
                if (it == r.experiments.end() || it->second.size() != 6 ||
                    !it->second[5].recorded_choice) {
                    skipped_respondents.insert(r.id + "|" + to_string(exp));
                    continue;
                }
                const int truth = *it->second[5].recorded_choice;
                for (int rep = 0; rep < manifest.repeats_for(cfg.id); ++rep)
                    cells.push_back({&r, exp, cfg, rep, truth});
            }
        }
    }
    summary.cells_total = cells.size();
    summary.respondents_skipped = skipped_respondents.size();

    std::vector<size_t> todo;
    for (size_t i = 0; i < cells.size(); ++i) {
        SimulationRecord probe;
        probe.respondent_id = cells[i].respondent->id;
        probe.experiment_id = cells[i].experiment;
        probe.scenario_id = cells[i].cfg.id;
        probe.repeat_index = cells[i].repeat;
        if (store.contains(probe.cell_key()))
            ++summary.cells_skipped_existing;
        else
            todo.push_back(i);
    }

    std::atomic<size_t> backend_calls{0};
    std::mutex dump_mutex;
    if (options.dump_prompts) std::filesystem::create_directories(store.dir() + "/prompts");
    auto process = [&](const detail::Cell& cell) -> SimulationRecord {
        SimulationRecord rec;
        rec.run_id = manifest.run_id;
        rec.respondent_id = cell.respondent->id;
        rec.experiment_id = cell.experiment;
        rec.scenario_id = cell.cfg.id;
        rec.repeat_index = cell.repeat;
        rec.truth = cell.truth;

        const PromptBundle bundle = assemble_prompt(
            *cell.respondent, dataset.design(cell.experiment), cell.cfg, templates);
        rec.prompt_digest = bundle.digest();
        if (options.dump_prompts) {
            const std::string path = store.dir() + "/prompts/" + rec.prompt_digest + ".json";
            std::lock_guard<std::mutex> lock(dump_mutex);
            if (!std::filesystem::exists(path)) write_file(path, bundle.to_json().dump(2) + "\n");
        }

        ChatBackend& backend = backends(cell.cfg.backend_id);
        for (int attempt = 0; attempt <= manifest.content_retries; ++attempt) {
            rec.content_attempts = attempt + 1;
            try {
                const uint64_t sample_key =
                    detail::cell_sample_key(manifest.seed, cell, attempt);
                CompletionResult completion = backend.complete(bundle, sample_key);
                backend_calls.fetch_add(1, std::memory_order_relaxed);
                rec.latency_ms = completion.latency.count();
                rec.attempt_count = completion.attempt_count;
                rec.response = parse_response(completion.raw_text,
                                              cell.cfg.require_explanation,
                                              options.keyword_table);
                if (rec.response.status == ResponseStatus::valid) break;
            } catch (const Error& e) {
                backend_calls.fetch_add(1, std::memory_order_relaxed);
                rec.transport_error = e.what();
                rec.response = SimResponse{};
                rec.response.status = ResponseStatus::invalid_format;
                break;  // transport retries already happened inside the gateway
            }
        }
        return rec;
    };

    // Chunked worker pool with ordered commit: workers fill a chunk in any
    // order, the chunk is appended in canonical cell order.
    const size_t chunk_size = 64;
    const int workers = std::max(1, options.workers);
    size_t committed = 0;
    for (size_t chunk_start = 0; chunk_start < todo.size() && !summary.interrupted;
         chunk_start += chunk_size) {
        const size_t chunk_end = std::min(todo.size(), chunk_start + chunk_size);
        std::vector<SimulationRecord> results(chunk_end - chunk_start);
        std::atomic<size_t> next{0};
        auto worker = [&] {
            while (true) {
                const size_t i = next.fetch_add(1);
                if (i >= results.size()) return;
                results[i] = process(cells[todo[chunk_start + i]]);
            }
        };
        if (workers == 1 || results.size() == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }
        for (auto& rec : results) {
            try {
                store.append(rec);
            } catch (const Error& e) {
                fail(ErrorKind::io,
                     std::string(e.what()) + " (aborting; " +
                         std::to_string(summary.records_written) +
                         " records persisted this invocation, store remains resumable)");
            }
            summary.status_counts[to_string(rec.response.status)]++;
            ++summary.records_written;
            ++committed;
            if (options.max_new_records > 0 && committed >= options.max_new_records) {
                summary.interrupted = true;
                break;
            }
        }
    }
    summary.backend_calls = backend_calls.load();
    return summary;
}

// ---- repeat aggregation ----

struct RepeatAggregate {
    std::vector<std::optional<double>> per_repeat;
    std::optional<double> mean;
};

// Applies a per-repeat metric over records sharing one (scenario,
// experiment) group. Undefined repeats are dropped from the mean.
inline RepeatAggregate aggregate_repeats(
    const std::vector<SimulationRecord>& records,
    const std::function<std::optional<double>(const std::vector<const SimulationRecord*>&)>&
        metric) {
    if (records.empty()) return {};
    const int scenario = records.front().scenario_id;
    const ExperimentId exp = records.front().experiment_id;
    int max_repeat = 0;
    for (const auto& r : records) {
        if (r.scenario_id != scenario || r.experiment_id != exp)
            fail(ErrorKind::config,
                 "aggregate_repeats: records span multiple (scenario, experiment) groups");
        max_repeat = std::max(max_repeat, r.repeat_index);
    }
    RepeatAggregate agg;
    double sum = 0.0;
    int defined = 0;
    for (int rep = 0; rep <= max_repeat; ++rep) {
        std::vector<const SimulationRecord*> group;
        for (const auto& r : records)
            if (r.repeat_index == rep) group.push_back(&r);
        std::optional<double> value = group.empty() ? std::nullopt : metric(group);
        if (value) {
            sum += *value;
            ++defined;
        }
        agg.per_repeat.push_back(value);
    }
    if (defined > 0) agg.mean = sum / defined;
    return agg;
}

}  // namespace spsim
