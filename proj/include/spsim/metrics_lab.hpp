#pragma once

// Every evaluation quantity the harness reports: accuracy, macro-F1,
// chi-square distance between choice distributions, per-repeat choice
// counts, ignored-factor frequencies, and stratified breakdowns — plus the
// report shapes they are printed in.

#include "spsim/scenario_runner.hpp"

#include <array>
#include <cmath>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace spsim {

// ---- core metrics ----

inline double accuracy(const std::vector<int>& preds, const std::vector<int>& truths) {
    if (preds.size() != truths.size())
        fail(ErrorKind::config, "accuracy: length mismatch");
    if (preds.empty()) fail(ErrorKind::numeric, "accuracy undefined on empty input");
    size_t matches = 0;
    for (size_t i = 0; i < preds.size(); ++i)
        if (preds[i] == truths[i]) ++matches;
    return static_cast<double>(matches) / static_cast<double>(preds.size());
}

// Unweighted mean over the 3 classes of the per-class harmonic mean of
// precision and recall; classes without any positives score 0.
inline double f1_macro(const std::vector<int>& preds, const std::vector<int>& truths) {
    if (preds.size() != truths.size()) fail(ErrorKind::config, "f1_macro: length mismatch");
    if (preds.empty()) fail(ErrorKind::numeric, "f1_macro undefined on empty input");
    double total = 0.0;
    for (int c = 1; c <= 3; ++c) {
        int tp = 0, fp = 0, fn = 0;
        for (size_t i = 0; i < preds.size(); ++i) {
            const bool p = preds[i] == c, t = truths[i] == c;
            if (p && t) ++tp;
            else if (p) ++fp;
            else if (t) ++fn;
        }
        double f1 = 0.0;
        if (tp + fp > 0 && tp + fn > 0) {
            const double precision = static_cast<double>(tp) / (tp + fp);
            const double recall = static_cast<double>(tp) / (tp + fn);
            if (precision + recall > 0.0) f1 = 2.0 * precision * recall / (precision + recall);
        }
        total += f1;
    }
    return total / 3.0;
}

// Pearson distance between a simulated and a recorded 3-way choice
// distribution. Simulated counts are rescaled to the recorded total, so the
// statistic is invariant to the simulated scale.
inline double chi_square(const std::array<double, 3>& simulated,
                         const std::array<int, 3>& recorded) {
    double sim_total = 0.0;
    long rec_total = 0;
    for (int k = 0; k < 3; ++k) {
        if (simulated[static_cast<size_t>(k)] < 0.0)
            fail(ErrorKind::config, "chi_square: negative simulated count");
        if (recorded[static_cast<size_t>(k)] <= 0)
            fail(ErrorKind::numeric, "chi_square: recorded category " + std::to_string(k + 1) +
                                         " is empty; expected counts degenerate");
        sim_total += simulated[static_cast<size_t>(k)];
        rec_total += recorded[static_cast<size_t>(k)];
    }
    if (sim_total <= 0.0) fail(ErrorKind::numeric, "chi_square: simulated counts all zero");
    double stat = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double expected = static_cast<double>(recorded[static_cast<size_t>(k)]);
        const double scaled =
            simulated[static_cast<size_t>(k)] * static_cast<double>(rec_total) / sim_total;
        stat += (scaled - expected) * (scaled - expected) / expected;
    }
    return stat;
}

// ---- record-level metrics (policy-aware) ----

inline bool scored_as_valid(const SimulationRecord& r) {
    return r.response.status == ResponseStatus::valid && r.response.choice.has_value();
}

// Accuracy over one repeat's records. Under retry_then_exclude invalid
// records leave both numerator and denominator; under retry_then_wrong they
// stay in the denominator as misses.
inline std::optional<double> repeat_accuracy(const std::vector<const SimulationRecord*>& records,
                                             InvalidPolicy policy) {
    size_t matches = 0, denom = 0;
    for (const auto* r : records) {
        if (scored_as_valid(*r)) {
            ++denom;
            if (*r->response.choice == r->truth) ++matches;
        } else if (policy == InvalidPolicy::retry_then_wrong) {
            ++denom;
        }
    }
    if (denom == 0) return std::nullopt;
    return static_cast<double>(matches) / static_cast<double>(denom);
}

inline std::optional<double> repeat_f1(const std::vector<const SimulationRecord*>& records,
                                       InvalidPolicy policy) {
    bool any = false;
    double total = 0.0;
    for (int c = 1; c <= 3; ++c) {
        int tp = 0, fp = 0, fn = 0;
        for (const auto* r : records) {
            const bool valid = scored_as_valid(*r);
            if (!valid && policy == InvalidPolicy::retry_then_exclude) continue;
            const bool p = valid && *r->response.choice == c;
            const bool t = r->truth == c;
            if (p && t) ++tp;
            else if (p) ++fp;
            else if (t) ++fn;
            any = true;
        }
        double f1 = 0.0;
        if (tp + fp > 0 && tp + fn > 0) {
            const double precision = static_cast<double>(tp) / (tp + fp);
            const double recall = static_cast<double>(tp) / (tp + fn);
            if (precision + recall > 0.0) f1 = 2.0 * precision * recall / (precision + recall);
        }
        total += f1;
    }
    if (!any) return std::nullopt;
    return total / 3.0;
}

inline std::array<double, 3> repeat_choice_counts(
    const std::vector<const SimulationRecord*>& records) {
    std::array<double, 3> counts{0.0, 0.0, 0.0};
    for (const auto* r : records)
        if (scored_as_valid(*r)) counts[static_cast<size_t>(*r->response.choice - 1)] += 1.0;
    return counts;
}

// Mean per-repeat counts of choices 1..3 over valid records.
inline std::array<double, 3> choice_distribution(const std::vector<SimulationRecord>& records) {
    std::array<double, 3> sum{0.0, 0.0, 0.0};
    if (records.empty()) return sum;
    int max_repeat = 0;
    for (const auto& r : records) max_repeat = std::max(max_repeat, r.repeat_index);
    const int repeats = max_repeat + 1;
    for (const auto& r : records)
        if (scored_as_valid(r)) sum[static_cast<size_t>(*r.response.choice - 1)] += 1.0;
    for (auto& v : sum) v /= repeats;
    return sum;
}

// Per-bucket ignored-factor counts summed within each repeat, averaged over
// repeats.
inline std::map<FactorBucket, double> ignored_frequency(
    const std::vector<SimulationRecord>& records) {
    std::map<FactorBucket, double> sum = {{FactorBucket::SPC, 0.0},
                                          {FactorBucket::SD, 0.0},
                                          {FactorBucket::ST, 0.0},
                                          {FactorBucket::OTHER, 0.0}};
    if (records.empty()) return sum;
    int max_repeat = 0;
    for (const auto& r : records) max_repeat = std::max(max_repeat, r.repeat_index);
    const int repeats = max_repeat + 1;
    for (const auto& r : records)
        for (const auto& [bucket, n] : r.response.ignored_canonical) sum[bucket] += n;
    for (auto& [bucket, v] : sum) v /= repeats;
    return sum;
}

// ---- report assembly ----

struct ExperimentMetrics {
    std::optional<double> accuracy;
    std::optional<double> f1;
    double invalid_rate = 0.0;
    std::array<double, 3> choice_counts{0.0, 0.0, 0.0};  // mean per repeat
    std::optional<double> chi_square;                    // mean of per-repeat statistics
    std::map<FactorBucket, double> ignored;
    size_t records = 0;
};

struct GroupMetrics {
    std::string label;
    size_t size = 0;  // respondents in the group (dataset level)
    std::map<ExperimentId, std::pair<std::optional<double>, std::optional<double>>> acc_f1;
    std::optional<double> avg_accuracy;
    std::optional<double> avg_f1;
};

struct ScenarioMetrics {
    int scenario_id = 0;
    std::string code;
    std::map<ExperimentId, ExperimentMetrics> per_experiment;
    std::optional<double> avg_accuracy;
    std::optional<double> avg_f1;
    std::optional<double> avg_chi_square;
    std::map<StratifyCriterion, std::vector<GroupMetrics>> stratified;
};

struct MetricsReport {
    std::vector<ExperimentId> experiments;
    std::map<ExperimentId, std::array<int, 3>> recorded_distribution;
    std::vector<ScenarioMetrics> scenarios;
    InvalidPolicy policy = InvalidPolicy::retry_then_exclude;
};

// Scenario-13 style predictions: one choice per respondent per experiment.
struct PredictionSet {
    std::map<ExperimentId, std::map<std::string, int>> choices;

    static PredictionSet from_json(const ojson& j) {
        PredictionSet p;
        for (const auto& [key, preds] : j.at("predictions").items()) {
            auto eid = parse_experiment_id(key);
            if (!eid) fail(ErrorKind::format, "predictions: unknown experiment '" + key + "'");
            for (const auto& [rid, choice] : preds.items())
                p.choices[*eid][rid] = choice.is_object() ? choice.at("choice").get<int>()
                                                          : choice.get<int>();
        }
        return p;
    }
};

namespace detail {

inline std::optional<double> mean_of_defined(const std::vector<std::optional<double>>& values) {
    double sum = 0.0;
    int n = 0;
    for (const auto& v : values)
        if (v) {
            sum += *v;
            ++n;
        }
    if (n == 0) return std::nullopt;
    return sum / n;
}

inline std::array<int, 3> truth_counts(const Dataset& dataset, ExperimentId exp) {
    std::array<int, 3> counts{0, 0, 0};
    for (const auto& r : dataset.respondents) {
        auto it = r.experiments.find(exp);
        if (it == r.experiments.end() || it->second.size() != 6) continue;
        if (auto c = it->second[5].recorded_choice) counts[static_cast<size_t>(*c - 1)]++;
    }
    return counts;
}

}  // namespace detail

inline ExperimentMetrics compute_experiment_metrics(const std::vector<SimulationRecord>& records,
                                                    const std::array<int, 3>& recorded,
                                                    InvalidPolicy policy) {
    ExperimentMetrics m;
    m.records = records.size();
    if (records.empty()) return m;

    auto acc = aggregate_repeats(records, [&](const std::vector<const SimulationRecord*>& g) {
        return repeat_accuracy(g, policy);
    });
    m.accuracy = acc.mean;
    auto f1 = aggregate_repeats(records, [&](const std::vector<const SimulationRecord*>& g) {
        return repeat_f1(g, policy);
    });
    m.f1 = f1.mean;

    size_t invalid = 0;
    for (const auto& r : records)
        if (!scored_as_valid(r)) ++invalid;
    m.invalid_rate = static_cast<double>(invalid) / static_cast<double>(records.size());

    m.choice_counts = choice_distribution(records);
    m.ignored = ignored_frequency(records);

    bool recorded_ok = recorded[0] > 0 && recorded[1] > 0 && recorded[2] > 0;
    if (recorded_ok) {
        auto chi = aggregate_repeats(records, [&](const std::vector<const SimulationRecord*>& g)
                                         -> std::optional<double> {
            const auto counts = repeat_choice_counts(g);
            if (counts[0] + counts[1] + counts[2] <= 0.0) return std::nullopt;
            return chi_square(counts, recorded);
        });
        m.chi_square = chi.mean;
    }
    return m;
}

struct ReportOptions {
    std::vector<StratifyCriterion> criteria = {StratifyCriterion::children,
                                               StratifyCriterion::seniors,
                                               StratifyCriterion::income_25k};
    InvalidPolicy policy = InvalidPolicy::retry_then_exclude;
};

inline MetricsReport compute_report(const std::vector<SimulationRecord>& all_records,
                                    const Dataset& dataset,
                                    const ReportOptions& options = {},
                                    const PredictionSet* mlm = nullptr) {
    MetricsReport report;
    report.policy = options.policy;

    std::set<ExperimentId> exp_set;
    std::set<int> scenario_set;
    for (const auto& r : all_records) {
        exp_set.insert(r.experiment_id);
        scenario_set.insert(r.scenario_id);
    }
    if (mlm)
        for (const auto& [eid, preds] : mlm->choices)
            if (!preds.empty()) exp_set.insert(eid);
    report.experiments.assign(exp_set.begin(), exp_set.end());
    for (ExperimentId e : report.experiments)
        report.recorded_distribution[e] = detail::truth_counts(dataset, e);

    std::map<StratifyCriterion, StratifyResult> strata;
    for (auto c : options.criteria) strata.emplace(c, stratify(dataset, c));

    for (int scenario_id : scenario_set) {
        ScenarioMetrics sm;
        sm.scenario_id = scenario_id;
        sm.code = test_scenario(scenario_id).code;

        std::vector<std::optional<double>> accs, f1s, chis;
        for (ExperimentId exp : report.experiments) {
            std::vector<SimulationRecord> group;
            for (const auto& r : all_records)
                if (r.scenario_id == scenario_id && r.experiment_id == exp) group.push_back(r);
            ExperimentMetrics em = compute_experiment_metrics(
                group, report.recorded_distribution[exp], options.policy);
            accs.push_back(em.accuracy);
            f1s.push_back(em.f1);
            chis.push_back(em.chi_square);
            sm.per_experiment[exp] = std::move(em);
        }
        sm.avg_accuracy = detail::mean_of_defined(accs);
        sm.avg_f1 = detail::mean_of_defined(f1s);
        sm.avg_chi_square = detail::mean_of_defined(chis);

        for (const auto& [criterion, result] : strata) {
            std::vector<GroupMetrics> groups;
            for (const auto& grp : result.groups) {
                GroupMetrics gm;
                gm.label = grp.label;
                gm.size = grp.ids.size();
                std::set<std::string> members(grp.ids.begin(), grp.ids.end());
                std::vector<std::optional<double>> gaccs, gf1s;
                for (ExperimentId exp : report.experiments) {
                    std::vector<SimulationRecord> group;
                    for (const auto& r : all_records)
                        if (r.scenario_id == scenario_id && r.experiment_id == exp &&
                            members.count(r.respondent_id))
                            group.push_back(r);
                    std::optional<double> a, f;
                    if (!group.empty()) {
                        a = aggregate_repeats(group,
                                              [&](const std::vector<const SimulationRecord*>& g) {
                                                  return repeat_accuracy(g, options.policy);
                                              })
                                .mean;
                        f = aggregate_repeats(group,
                                              [&](const std::vector<const SimulationRecord*>& g) {
                                                  return repeat_f1(g, options.policy);
                                              })
                                .mean;
                    }
                    gaccs.push_back(a);
                    gf1s.push_back(f);
                    gm.acc_f1[exp] = {a, f};
                }
                gm.avg_accuracy = detail::mean_of_defined(gaccs);
                gm.avg_f1 = detail::mean_of_defined(gf1s);
                groups.push_back(std::move(gm));
            }
            sm.stratified[criterion] = std::move(groups);
        }
        report.scenarios.push_back(std::move(sm));
    }

    if (mlm) {
        ScenarioMetrics sm;
        sm.scenario_id = 13;
        sm.code = "MLM";
        std::vector<std::optional<double>> accs, f1s, chis;
        for (ExperimentId exp : report.experiments) {
            ExperimentMetrics em;
            auto preds_it = mlm->choices.find(exp);
            if (preds_it != mlm->choices.end() && !preds_it->second.empty()) {
                std::vector<int> preds, truths;
                std::array<double, 3> counts{0.0, 0.0, 0.0};
                for (const auto& r : dataset.respondents) {
                    auto pit = preds_it->second.find(r.id);
                    if (pit == preds_it->second.end()) continue;
                    auto eit = r.experiments.find(exp);
                    if (eit == r.experiments.end() || eit->second.size() != 6 ||
                        !eit->second[5].recorded_choice)
                        continue;
                    preds.push_back(pit->second);
                    truths.push_back(*eit->second[5].recorded_choice);
                    counts[static_cast<size_t>(pit->second - 1)] += 1.0;
                }
                if (!preds.empty()) {
                    em.accuracy = accuracy(preds, truths);
                    em.f1 = f1_macro(preds, truths);
                    em.choice_counts = counts;
                    em.records = preds.size();
                    const auto& recorded = report.recorded_distribution[exp];
                    if (recorded[0] > 0 && recorded[1] > 0 && recorded[2] > 0)
                        em.chi_square = chi_square(counts, recorded);
                }
            }
            accs.push_back(em.accuracy);
            f1s.push_back(em.f1);
            chis.push_back(em.chi_square);
            sm.per_experiment[exp] = std::move(em);
        }
        sm.avg_accuracy = detail::mean_of_defined(accs);
        sm.avg_f1 = detail::mean_of_defined(f1s);
        sm.avg_chi_square = detail::mean_of_defined(chis);
        report.scenarios.push_back(std::move(sm));
    }
    return report;
}

// Stratified metrics for a single (scenario, experiment, criterion) slice —
// the stand-alone entry point mirroring the stratified table rows.
inline std::vector<GroupMetrics> stratified_report(const std::vector<SimulationRecord>& records,
                                                   const Dataset& dataset,
                                                   StratifyCriterion criterion,
                                                   InvalidPolicy policy) {
    StratifyResult strat = stratify(dataset, criterion);
    std::vector<GroupMetrics> out;
    for (const auto& grp : strat.groups) {
        GroupMetrics gm;
        gm.label = grp.label;
        gm.size = grp.ids.size();
        std::set<std::string> members(grp.ids.begin(), grp.ids.end());
        std::map<ExperimentId, std::vector<SimulationRecord>> by_exp;
        for (const auto& r : records)
            if (members.count(r.respondent_id)) by_exp[r.experiment_id].push_back(r);
        std::vector<std::optional<double>> accs, f1s;
        for (auto& [exp, group] : by_exp) {
            auto a = aggregate_repeats(group, [&](const std::vector<const SimulationRecord*>& g) {
                         return repeat_accuracy(g, policy);
                     }).mean;
            auto f = aggregate_repeats(group, [&](const std::vector<const SimulationRecord*>& g) {
                         return repeat_f1(g, policy);
                     }).mean;
            gm.acc_f1[exp] = {a, f};
            accs.push_back(a);
            f1s.push_back(f);
        }
        gm.avg_accuracy = detail::mean_of_defined(accs);
        gm.avg_f1 = detail::mean_of_defined(f1s);
        out.push_back(std::move(gm));
    }
    return out;
}

// ---- rendering ----

namespace detail {

inline ojson opt_json(const std::optional<double>& v) {
    if (!v) return nullptr;
    return *v;
}

inline std::string fmt2(const std::optional<double>& v) {
    if (!v) return "-";
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(2) << *v;
    return ss.str();
}

inline std::string fmtg(double v) {
    std::ostringstream ss;
    ss << std::setprecision(10) << v;
    return ss.str();
}

inline void render_table(std::ostringstream& out, const std::vector<std::vector<std::string>>& rows) {
    std::vector<size_t> widths;
    for (const auto& row : rows)
        for (size_t c = 0; c < row.size(); ++c) {
            if (widths.size() <= c) widths.push_back(0);
            widths[c] = std::max(widths[c], row[c].size());
        }
    for (const auto& row : rows) {
        for (size_t c = 0; c < row.size(); ++c) {
            out << std::left << std::setw(static_cast<int>(widths[c]) + 2) << row[c];
        }
        out << '\n';
    }
}

}  // namespace detail

inline ojson report_to_json(const MetricsReport& report) {
    ojson j;
    ojson exps = ojson::array();
    for (auto e : report.experiments) exps.push_back(to_string(e));
    j["experiments"] = std::move(exps);
    j["invalid_policy"] = to_string(report.policy);
    ojson recorded;
    for (const auto& [eid, counts] : report.recorded_distribution)
        recorded[to_string(eid)] = counts;
    j["recorded_distribution"] = std::move(recorded);

    ojson scenarios = ojson::array();
    for (const auto& sm : report.scenarios) {
        ojson sj;
        sj["scenario"] = sm.scenario_id;
        sj["code"] = sm.code;
        ojson per_exp;
        for (const auto& [eid, em] : sm.per_experiment) {
            ojson ej;
            ej["accuracy"] = detail::opt_json(em.accuracy);
            ej["f1"] = detail::opt_json(em.f1);
            ej["invalid_rate"] = em.invalid_rate;
            ej["choice_distribution"] = em.choice_counts;
            ej["chi_square"] = detail::opt_json(em.chi_square);
            ojson ign;
            for (const auto& [bucket, v] : em.ignored) ign[to_string(bucket)] = v;
            ej["ignored_frequency"] = std::move(ign);
            ej["records"] = em.records;
            per_exp[to_string(eid)] = std::move(ej);
        }
        sj["per_experiment"] = std::move(per_exp);
        sj["avg_accuracy"] = detail::opt_json(sm.avg_accuracy);
        sj["avg_f1"] = detail::opt_json(sm.avg_f1);
        sj["avg_chi_square"] = detail::opt_json(sm.avg_chi_square);
        ojson strat;
        for (const auto& [criterion, groups] : sm.stratified) {
            ojson list = ojson::array();
            for (const auto& gm : groups) {
                ojson gj;
                gj["label"] = gm.label;
                gj["size"] = gm.size;
                ojson per;
                for (const auto& [eid, af] : gm.acc_f1) {
                    per[to_string(eid)] = {{"accuracy", detail::opt_json(af.first)},
                                           {"f1", detail::opt_json(af.second)}};
                }
                gj["per_experiment"] = std::move(per);
                gj["avg_accuracy"] = detail::opt_json(gm.avg_accuracy);
                gj["avg_f1"] = detail::opt_json(gm.avg_f1);
                list.push_back(std::move(gj));
            }
            strat[to_string(criterion)] = std::move(list);
        }
        sj["stratified"] = std::move(strat);
        scenarios.push_back(std::move(sj));
    }
    j["scenarios"] = std::move(scenarios);
    return j;
}

inline std::string report_to_text(const MetricsReport& report) {
    std::ostringstream out;
    const auto& exps = report.experiments;

    {
        out << "== Results by test scenario ==\n";
        std::vector<std::vector<std::string>> rows;
        std::vector<std::string> header = {"Scenario", "Code"};
        for (auto e : exps) {
            header.push_back(std::string(to_string(e)) + " Acc");
            header.push_back(std::string(to_string(e)) + " F1");
        }
        header.push_back("Avg Acc");
        header.push_back("Avg F1");
        rows.push_back(header);
        for (const auto& sm : report.scenarios) {
            std::vector<std::string> row = {std::to_string(sm.scenario_id), sm.code};
            for (auto e : exps) {
                const auto& em = sm.per_experiment.at(e);
                row.push_back(detail::fmt2(em.accuracy));
                row.push_back(detail::fmt2(em.f1));
            }
            row.push_back(detail::fmt2(sm.avg_accuracy));
            row.push_back(detail::fmt2(sm.avg_f1));
            rows.push_back(std::move(row));
        }
        detail::render_table(out, rows);
    }

    {
        out << "\n== Frequency of ignored factors ==\n";
        std::vector<std::vector<std::string>> rows;
        std::vector<std::string> header = {"Scenario", "Code"};
        for (auto e : exps)
            for (const char* b : {"SPC", "ST", "SD"})
                header.push_back(std::string(to_string(e)) + " " + b);
        rows.push_back(header);
        for (const auto& sm : report.scenarios) {
            if (sm.scenario_id == 13) continue;
            std::vector<std::string> row = {std::to_string(sm.scenario_id), sm.code};
            for (auto e : exps) {
                const auto& em = sm.per_experiment.at(e);
                for (FactorBucket b : {FactorBucket::SPC, FactorBucket::ST, FactorBucket::SD}) {
                    auto it = em.ignored.find(b);
                    row.push_back(detail::fmtg(it == em.ignored.end() ? 0.0 : it->second));
                }
            }
            rows.push_back(std::move(row));
        }
        detail::render_table(out, rows);
    }

    {
        out << "\n== Choice distribution ==\n";
        std::vector<std::vector<std::string>> rows;
        std::vector<std::string> header = {"Scenario", "Code"};
        for (auto e : exps)
            for (const char* o : {"A", "B", "C"})
                header.push_back(std::string(to_string(e)) + " " + o);
        rows.push_back(header);
        std::vector<std::string> recorded_row = {"-", "Recorded"};
        for (auto e : exps)
            for (int k = 0; k < 3; ++k)
                recorded_row.push_back(
                    std::to_string(report.recorded_distribution.at(e)[static_cast<size_t>(k)]));
        rows.push_back(recorded_row);
        for (const auto& sm : report.scenarios) {
            std::vector<std::string> row = {std::to_string(sm.scenario_id), sm.code};
            for (auto e : exps) {
                const auto& em = sm.per_experiment.at(e);
                for (int k = 0; k < 3; ++k)
                    row.push_back(detail::fmtg(em.choice_counts[static_cast<size_t>(k)]));
            }
            rows.push_back(std::move(row));
        }
        detail::render_table(out, rows);
    }

    {
        out << "\n== Chi-square statistics ==\n";
        std::vector<std::vector<std::string>> rows;
        std::vector<std::string> header = {"Scenario", "Code"};
        for (auto e : exps) header.push_back(to_string(e));
        header.push_back("Average");
        rows.push_back(header);
        for (const auto& sm : report.scenarios) {
            std::vector<std::string> row = {std::to_string(sm.scenario_id), sm.code};
            for (auto e : exps) row.push_back(detail::fmt2(sm.per_experiment.at(e).chi_square));
            row.push_back(detail::fmt2(sm.avg_chi_square));
            rows.push_back(std::move(row));
        }
        detail::render_table(out, rows);
    }

    {
        out << "\n== Invalid-response rate ==\n";
        std::vector<std::vector<std::string>> rows;
        std::vector<std::string> header = {"Scenario", "Code"};
        for (auto e : exps) header.push_back(to_string(e));
        rows.push_back(header);
        for (const auto& sm : report.scenarios) {
            if (sm.scenario_id == 13) continue;
            std::vector<std::string> row = {std::to_string(sm.scenario_id), sm.code};
            for (auto e : exps) {
                std::ostringstream ss;
                ss << std::fixed << std::setprecision(3)
                   << sm.per_experiment.at(e).invalid_rate;
                row.push_back(ss.str());
            }
            rows.push_back(std::move(row));
        }
        detail::render_table(out, rows);
    }

    bool any_strat = false;
    for (const auto& sm : report.scenarios) any_strat = any_strat || !sm.stratified.empty();
    if (any_strat) {
        out << "\n== Stratified analysis ==\n";
        std::vector<std::vector<std::string>> rows;
        std::vector<std::string> header = {"Scenario", "Group"};
        for (auto e : exps) {
            header.push_back(std::string(to_string(e)) + " Acc");
            header.push_back(std::string(to_string(e)) + " F1");
        }
        header.push_back("Avg Acc");
        header.push_back("Avg F1");
        rows.push_back(header);
        for (const auto& sm : report.scenarios) {
            if (sm.stratified.empty()) continue;
            std::vector<std::string> srow = {std::to_string(sm.scenario_id), sm.code};
            for (auto e : exps) {
                const auto& em = sm.per_experiment.at(e);
                srow.push_back(detail::fmt2(em.accuracy));
                srow.push_back(detail::fmt2(em.f1));
            }
            srow.push_back(detail::fmt2(sm.avg_accuracy));
            srow.push_back(detail::fmt2(sm.avg_f1));
            rows.push_back(std::move(srow));
            for (const auto& [criterion, groups] : sm.stratified) {
                for (const auto& gm : groups) {
                    std::vector<std::string> row = {
                        "", gm.label + " [Size: " + std::to_string(gm.size) + "]"};
                    for (auto e : exps) {
                        auto it = gm.acc_f1.find(e);
                        if (it == gm.acc_f1.end()) {
                            row.push_back("-");
                            row.push_back("-");
                        } else {
                            row.push_back(detail::fmt2(it->second.first));
                            row.push_back(detail::fmt2(it->second.second));
                        }
                    }
                    row.push_back(detail::fmt2(gm.avg_accuracy));
                    row.push_back(detail::fmt2(gm.avg_f1));
                    rows.push_back(std::move(row));
                }
            }
        }
        detail::render_table(out, rows);
    }
    return out.str();
}

// CSV variants of the main tables, keyed by table name.
inline std::map<std::string, std::string> report_to_csv(const MetricsReport& report) {
    std::map<std::string, std::string> out;
    const auto& exps = report.experiments;
    auto csv_escape = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += "\"\"";
            else q.push_back(c);
        }
        q += "\"";
        return q;
    };
    auto join = [&](const std::vector<std::string>& row) {
        std::string line;
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) line += ",";
            line += csv_escape(row[i]);
        }
        return line + "\n";
    };

    {
        std::string csv;
        std::vector<std::string> header = {"scenario", "code"};
        for (auto e : exps) {
            header.push_back(std::string(to_string(e)) + "_acc");
            header.push_back(std::string(to_string(e)) + "_f1");
        }
        header.push_back("avg_acc");
        header.push_back("avg_f1");
        csv += join(header);
        for (const auto& sm : report.scenarios) {
            std::vector<std::string> row = {std::to_string(sm.scenario_id), sm.code};
            for (auto e : exps) {
                const auto& em = sm.per_experiment.at(e);
                row.push_back(em.accuracy ? detail::fmtg(*em.accuracy) : "");
                row.push_back(em.f1 ? detail::fmtg(*em.f1) : "");
            }
            row.push_back(sm.avg_accuracy ? detail::fmtg(*sm.avg_accuracy) : "");
            row.push_back(sm.avg_f1 ? detail::fmtg(*sm.avg_f1) : "");
            csv += join(row);
        }
        out["results"] = csv;
    }
    {
        std::string csv;
        std::vector<std::string> header = {"scenario", "code"};
        for (auto e : exps)
            for (const char* o : {"A", "B", "C"})
                header.push_back(std::string(to_string(e)) + "_" + o);
        csv += join(header);
        std::vector<std::string> rec = {"", "Recorded"};
        for (auto e : exps)
            for (int k = 0; k < 3; ++k)
                rec.push_back(
                    std::to_string(report.recorded_distribution.at(e)[static_cast<size_t>(k)]));
        csv += join(rec);
        for (const auto& sm : report.scenarios) {
            std::vector<std::string> row = {std::to_string(sm.scenario_id), sm.code};
            for (auto e : exps)
                for (int k = 0; k < 3; ++k)
                    row.push_back(detail::fmtg(
                        sm.per_experiment.at(e).choice_counts[static_cast<size_t>(k)]));
            csv += join(row);
        }
        out["distribution"] = csv;
    }
    {
        std::string csv;
        std::vector<std::string> header = {"scenario", "code"};
        for (auto e : exps) header.push_back(to_string(e));
        header.push_back("average");
        csv += join(header);
        for (const auto& sm : report.scenarios) {
            std::vector<std::string> row = {std::to_string(sm.scenario_id), sm.code};
            for (auto e : exps) {
                const auto& v = sm.per_experiment.at(e).chi_square;
                row.push_back(v ? detail::fmtg(*v) : "");
            }
            row.push_back(sm.avg_chi_square ? detail::fmtg(*sm.avg_chi_square) : "");
            csv += join(row);
        }
        out["chi_square"] = csv;
    }
    return out;
}

}  // namespace spsim
