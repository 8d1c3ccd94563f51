#pragma once

// Multinomial and panel mixed logit estimated by maximum simulated
// likelihood over Halton draws. Supplies the choice-model baseline
// predictions and the significance-based prompt factor filter.

#include "spsim/numeric.hpp"
#include "spsim/survey_data.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace spsim {

// Respondent-level numeric regressor interacted with an alternative-specific
// constant. `prompt_item` ties the covariate back to the prompt factor it
// describes (for the factor filter).
struct SociodemTerm {
    std::string name;
    std::string field;     // children_count, seniors_count, household_size,
                           // employed_count, rooms, income_lower_k
    int option_index = 2;  // 2 or 3: which alternative the term loads on
    std::string prompt_item;
};

struct ModelSpec {
    ExperimentId experiment_id = ExperimentId::SP1;
    std::vector<std::string> excluded_covariates;  // design covariates left out
    std::vector<SociodemTerm> sociodem_terms;
    std::vector<std::string> random_coefficients;  // normal mixing
    int n_draws = 200;
    uint64_t seed = 1;

    ojson to_json() const {
        ojson j;
        j["experiment"] = to_string(experiment_id);
        j["excluded_covariates"] = excluded_covariates;
        ojson terms = ojson::array();
        for (const auto& t : sociodem_terms)
            terms.push_back({{"name", t.name},
                             {"field", t.field},
                             {"option_index", t.option_index},
                             {"prompt_item", t.prompt_item}});
        j["sociodem_terms"] = std::move(terms);
        j["random_coefficients"] = random_coefficients;
        j["n_draws"] = n_draws;
        j["seed"] = seed;
        return j;
    }

    static ModelSpec from_json(const ojson& j) {
        ModelSpec s;
        auto eid = parse_experiment_id(j.at("experiment").get<std::string>());
        if (!eid) fail(ErrorKind::format, "model spec: bad experiment id");
        s.experiment_id = *eid;
        if (j.contains("excluded_covariates"))
            for (const auto& n : j["excluded_covariates"])
                s.excluded_covariates.push_back(n.get<std::string>());
        if (j.contains("sociodem_terms"))
            for (const auto& t : j["sociodem_terms"])
                s.sociodem_terms.push_back({t.at("name").get<std::string>(),
                                            t.at("field").get<std::string>(),
                                            t.value("option_index", 2),
                                            t.value("prompt_item", std::string{})});
        if (j.contains("random_coefficients"))
            for (const auto& n : j["random_coefficients"])
                s.random_coefficients.push_back(n.get<std::string>());
        s.n_draws = j.value("n_draws", 200);
        s.seed = j.value("seed", uint64_t{1});
        return s;
    }
};

// Default specification: all design covariates (minus any that cannot vary
// across alternatives), income and children interactions on both constants,
// and random constants.
inline ModelSpec canonical_model_spec(ExperimentId id) {
    ModelSpec s;
    s.experiment_id = id;
    if (id == ExperimentId::SP2) s.excluded_covariates = {"equipment_cost"};
    s.sociodem_terms = {{"income_x_asc2", "income_lower_k", 2, "SD:income"},
                        {"income_x_asc3", "income_lower_k", 3, "SD:income"},
                        {"children_x_asc2", "children_count", 2, "SD:household"},
                        {"children_x_asc3", "children_count", 3, "SD:household"}};
    s.random_coefficients = {"asc2", "asc3"};
    return s;
}

inline double sociodem_numeric(const Respondent& r, const std::string& field) {
    if (field == "children_count") return static_cast<double>(r.children_count().value_or(0));
    if (field == "seniors_count") return static_cast<double>(r.seniors_count().value_or(0));
    if (field == "household_size") {
        double total = 0.0;
        for (const char* key : {"age_0_5", "age_6_12", "age_13_17", "age_18_65", "age_65_plus"})
            total += static_cast<double>(r.sd_int(key).value_or(0));
        return total;
    }
    if (field == "employed_count") return static_cast<double>(r.sd_int("employed_count").value_or(0));
    if (field == "rooms") return static_cast<double>(r.sd_int("rooms").value_or(0));
    if (field == "income_lower_k") {
        auto band = r.sd_text("income_band");
        auto range = band ? parse_income_band(*band) : std::nullopt;
        return range ? range->first / 1000.0 : 0.0;
    }
    fail(ErrorKind::config, "unknown sociodem field '" + field + "'");
}

// ---- panel assembly ----

struct Observation {
    std::array<std::vector<double>, 3> x;
    int chosen = 0;  // 1..3; 0 for an unscored holdout
};

struct PanelPerson {
    std::string id;
    std::vector<Observation> obs;       // scenarios 1..5
    std::optional<Observation> holdout; // scenario 6
};

struct Panel {
    std::vector<std::string> covariate_names;
    std::vector<PanelPerson> persons;
    size_t skipped = 0;  // respondents without a usable block
};

inline Panel build_panel(const Dataset& dataset, const ModelSpec& spec) {
    const ExperimentDesign& design = dataset.design(spec.experiment_id);
    const std::vector<std::string> all_names = design_covariate_names(design);
    std::vector<size_t> keep;
    Panel panel;
    for (size_t i = 0; i < all_names.size(); ++i) {
        if (std::find(spec.excluded_covariates.begin(), spec.excluded_covariates.end(),
                      all_names[i]) == spec.excluded_covariates.end()) {
            keep.push_back(i);
            panel.covariate_names.push_back(all_names[i]);
        }
    }
    for (const auto& t : spec.sociodem_terms) {
        if (t.option_index != 2 && t.option_index != 3)
            fail(ErrorKind::config, "sociodem term '" + t.name + "': option_index must be 2 or 3");
        panel.covariate_names.push_back(t.name);
    }

    for (const auto& r : dataset.respondents) {
        auto it = r.experiments.find(spec.experiment_id);
        if (it == r.experiments.end() || it->second.size() != 6) {
            ++panel.skipped;
            continue;
        }
        bool usable = true;
        for (int t = 0; t < 5; ++t)
            if (!it->second[static_cast<size_t>(t)].recorded_choice) usable = false;
        if (!usable) {
            ++panel.skipped;
            continue;
        }
        PanelPerson person;
        person.id = r.id;
        auto encode_one = [&](const ChoiceScenario& sc, int chosen) {
            const EncodedScenario enc = encode_attributes(design, sc);
            Observation o;
            o.chosen = chosen;
            for (int j = 0; j < 3; ++j) {
                auto& row = o.x[static_cast<size_t>(j)];
                row.reserve(panel.covariate_names.size());
                for (size_t k : keep) row.push_back(enc.x[static_cast<size_t>(j)][k]);
                for (const auto& term : spec.sociodem_terms)
                    row.push_back(j + 1 == term.option_index ? sociodem_numeric(r, term.field)
                                                             : 0.0);
            }
            return o;
        };
        for (int t = 0; t < 5; ++t) {
            const auto& sc = it->second[static_cast<size_t>(t)];
            person.obs.push_back(encode_one(sc, *sc.recorded_choice));
        }
        const auto& sc6 = it->second[5];
        person.holdout = encode_one(sc6, sc6.recorded_choice.value_or(0));
        panel.persons.push_back(std::move(person));
    }
    return panel;
}

// ---- likelihoods ----

namespace detail {

// Softmax with max subtraction; returns log P(chosen) and fills probs.
inline double obs_log_prob(const Observation& o, const std::vector<double>& beta,
                           std::array<double, 3>& probs) {
    std::array<double, 3> v{};
    for (int j = 0; j < 3; ++j) {
        double acc = 0.0;
        const auto& row = o.x[static_cast<size_t>(j)];
        for (size_t k = 0; k < beta.size(); ++k) acc += beta[k] * row[k];
        v[static_cast<size_t>(j)] = acc;
        if (!std::isfinite(acc)) fail(ErrorKind::config, "non-finite utility; check covariates");
    }
    const double m = std::max({v[0], v[1], v[2]});
    double s = 0.0;
    for (int j = 0; j < 3; ++j) {
        probs[static_cast<size_t>(j)] = std::exp(v[static_cast<size_t>(j)] - m);
        s += probs[static_cast<size_t>(j)];
    }
    for (auto& p : probs) p /= s;
    return v[static_cast<size_t>(o.chosen - 1)] - m - std::log(s);
}

}  // namespace detail

struct LoglikResult {
    double value = 0.0;
    std::vector<double> gradient;
};

// Exact multinomial logit log-likelihood and its analytic gradient.
inline LoglikResult mnl_loglik(const std::vector<double>& beta,
                               const std::vector<const Observation*>& observations) {
    LoglikResult res;
    res.gradient.assign(beta.size(), 0.0);
    std::array<double, 3> probs{};
    for (const Observation* o : observations) {
        res.value += detail::obs_log_prob(*o, beta, probs);
        const auto& xc = o->x[static_cast<size_t>(o->chosen - 1)];
        for (size_t k = 0; k < beta.size(); ++k) {
            double expect = 0.0;
            for (int j = 0; j < 3; ++j)
                expect += probs[static_cast<size_t>(j)] * o->x[static_cast<size_t>(j)][k];
            res.gradient[k] += xc[k] - expect;
        }
    }
    return res;
}

inline std::vector<const Observation*> flatten_panel(const Panel& panel) {
    std::vector<const Observation*> out;
    for (const auto& p : panel.persons)
        for (const auto& o : p.obs) out.push_back(&o);
    return out;
}

// ---- fits ----

struct ChoiceModelFit {
    ModelSpec spec;
    std::vector<std::string> covariate_names;  // K entries
    std::vector<std::string> param_names;      // K + R entries (w_* appended)
    std::vector<double> estimates;             // mixing SDs stored as absolute values
    std::vector<double> std_errors;            // +inf marks an unidentified parameter
    std::vector<double> t_stats;
    double log_likelihood = 0.0;
    bool converged = false;
    int iterations = 0;
    size_t n_persons = 0;
    size_t n_observations = 0;

    size_t n_random() const { return spec.random_coefficients.size(); }

    std::vector<double> beta_mean() const {
        return {estimates.begin(), estimates.begin() + static_cast<long>(covariate_names.size())};
    }

    ojson to_json() const {
        ojson j;
        j["spec"] = spec.to_json();
        j["covariate_names"] = covariate_names;
        j["param_names"] = param_names;
        j["estimates"] = estimates;
        ojson ses = ojson::array();
        for (double se : std_errors) {
            if (std::isfinite(se)) ses.push_back(se);
            else ses.push_back(nullptr);
        }
        j["std_errors"] = std::move(ses);
        j["t_stats"] = t_stats;
        j["log_likelihood"] = log_likelihood;
        j["converged"] = converged;
        j["iterations"] = iterations;
        j["n_persons"] = n_persons;
        j["n_observations"] = n_observations;
        return j;
    }

    static ChoiceModelFit from_json(const ojson& j) {
        ChoiceModelFit f;
        f.spec = ModelSpec::from_json(j.at("spec"));
        for (const auto& n : j.at("covariate_names")) f.covariate_names.push_back(n.get<std::string>());
        for (const auto& n : j.at("param_names")) f.param_names.push_back(n.get<std::string>());
        for (const auto& v : j.at("estimates")) f.estimates.push_back(v.get<double>());
        for (const auto& v : j.at("std_errors"))
            f.std_errors.push_back(v.is_null() ? std::numeric_limits<double>::infinity()
                                               : v.get<double>());
        for (const auto& v : j.at("t_stats")) f.t_stats.push_back(v.get<double>());
        f.log_likelihood = j.value("log_likelihood", 0.0);
        f.converged = j.value("converged", false);
        f.iterations = j.value("iterations", 0);
        f.n_persons = j.value("n_persons", size_t{0});
        f.n_observations = j.value("n_observations", size_t{0});
        return f;
    }

    std::string summary_table() const {
        std::ostringstream out;
        size_t width = 10;
        for (const auto& n : param_names) width = std::max(width, n.size());
        out << std::left << std::setw(static_cast<int>(width) + 2) << "parameter"
            << std::right << std::setw(12) << "estimate" << std::setw(12) << "std.err"
            << std::setw(10) << "t" << '\n';
        for (size_t i = 0; i < param_names.size(); ++i) {
            out << std::left << std::setw(static_cast<int>(width) + 2) << param_names[i]
                << std::right << std::fixed << std::setprecision(4) << std::setw(12)
                << estimates[i];
            if (std::isfinite(std_errors[i]))
                out << std::setw(12) << std_errors[i] << std::setprecision(2) << std::setw(10)
                    << t_stats[i];
            else
                out << std::setw(12) << "inf" << std::setw(10) << "-";
            out << std::setprecision(4) << '\n';
        }
        out << "log-likelihood " << std::setprecision(4) << log_likelihood
            << (converged ? "  (converged in " : "  (NOT converged after ") << iterations
            << " iterations)\n";
        return out.str();
    }
};

namespace detail {

// Standard errors from the inverse of the negative Hessian of the
// log-likelihood. A singular Hessian gets a progressively ridged retry;
// parameters whose variance stays enormous (or negative) are flagged with
// infinite standard errors.
inline std::vector<double> std_errors_from_hessian(std::vector<double> neg_hessian, int n) {
    constexpr double kExplodedVariance = 1e8;
    for (double ridge : {0.0, 1e-10, 1e-8, 1e-6, 1e-4}) {
        std::vector<double> m = neg_hessian;
        for (int i = 0; i < n; ++i) m[static_cast<size_t>(i) * n + i] += ridge;
        std::vector<double> inv = m;
        if (!invert_matrix(inv, n)) continue;
        std::vector<double> ses(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double var = inv[static_cast<size_t>(i) * n + i];
            ses[static_cast<size_t>(i)] = (var > 0.0 && var < kExplodedVariance)
                                              ? std::sqrt(var)
                                              : std::numeric_limits<double>::infinity();
        }
        return ses;
    }
    return std::vector<double>(static_cast<size_t>(n),
                               std::numeric_limits<double>::infinity());
}

inline std::vector<double> t_stats_from(const std::vector<double>& estimates,
                                        const std::vector<double>& ses) {
    std::vector<double> t(estimates.size(), 0.0);
    for (size_t i = 0; i < estimates.size(); ++i)
        if (std::isfinite(ses[i]) && ses[i] > 0.0) t[i] = estimates[i] / ses[i];
    return t;
}

}  // namespace detail

inline ChoiceModelFit estimate_mnl(const ModelSpec& spec, const Dataset& dataset) {
    Panel panel = build_panel(dataset, spec);
    if (panel.persons.empty()) fail(ErrorKind::config, "no usable respondents to estimate on");
    const auto observations = flatten_panel(panel);
    const size_t K = panel.covariate_names.size();

    auto objective = [&](const std::vector<double>& beta, std::vector<double>& grad) {
        LoglikResult ll = mnl_loglik(beta, observations);
        grad.assign(K, 0.0);
        for (size_t k = 0; k < K; ++k) grad[k] = -ll.gradient[k];
        return -ll.value;
    };

    OptimResult opt = minimize_bfgs(objective, std::vector<double>(K, 0.0));

    ChoiceModelFit fit;
    fit.spec = spec;
    fit.spec.random_coefficients.clear();
    fit.covariate_names = panel.covariate_names;
    fit.param_names = panel.covariate_names;
    fit.estimates = opt.x;
    fit.log_likelihood = -opt.value;
    fit.converged = opt.converged;
    fit.iterations = opt.iterations;
    fit.n_persons = panel.persons.size();
    fit.n_observations = observations.size();

    auto loglik_fn = [&](const std::vector<double>& beta, std::vector<double>& grad) {
        LoglikResult ll = mnl_loglik(beta, observations);
        grad = ll.gradient;
        return ll.value;
    };
    std::vector<double> hess = central_difference_hessian(loglik_fn, opt.x);
    for (auto& v : hess) v = -v;
    fit.std_errors = detail::std_errors_from_hessian(std::move(hess), static_cast<int>(K));
    fit.t_stats = detail::t_stats_from(fit.estimates, fit.std_errors);
    return fit;
}

// ---- simulated likelihood ----

namespace detail {

struct MixlContext {
    const Panel* panel = nullptr;
    std::vector<size_t> random_idx;  // positions of random coefficients
    std::vector<double> z;           // normal draws [person][dim][draw]
    int n_draws = 0;

    double z_at(size_t person, size_t dim, int draw) const {
        return z[(person * random_idx.size() + dim) * static_cast<size_t>(n_draws) +
                 static_cast<size_t>(draw)];
    }
};

inline MixlContext make_mixl_context(const Panel& panel, const ModelSpec& spec) {
    MixlContext ctx;
    ctx.panel = &panel;
    ctx.n_draws = spec.n_draws;
    if (spec.n_draws < 1) fail(ErrorKind::config, "n_draws must be >= 1");
    for (const auto& name : spec.random_coefficients) {
        auto it = std::find(panel.covariate_names.begin(), panel.covariate_names.end(), name);
        if (it == panel.covariate_names.end())
            fail(ErrorKind::config, "random coefficient '" + name + "' is not a model covariate");
        ctx.random_idx.push_back(
            static_cast<size_t>(std::distance(panel.covariate_names.begin(), it)));
    }
    if (!ctx.random_idx.empty()) {
        HaltonDraws draws =
            halton_draws(static_cast<int>(panel.persons.size()),
                         static_cast<int>(ctx.random_idx.size()), spec.n_draws, spec.seed);
        ctx.z.resize(draws.values.size());
        for (size_t i = 0; i < draws.values.size(); ++i)
            ctx.z[i] = normal_quantile(draws.values[i]);
    }
    return ctx;
}

// Panel simulated log-likelihood and analytic gradient.
// theta = [b_1..b_K, w_1..w_R]; person contribution is
// log( (1/R) sum_r prod_t P_t(b + w.z_r) ).
inline double simulated_loglik(const std::vector<double>& theta, std::vector<double>& grad,
                               const MixlContext& ctx) {
    const Panel& panel = *ctx.panel;
    const size_t K = panel.covariate_names.size();
    const size_t R = ctx.random_idx.size();
    const int D = R == 0 ? 1 : ctx.n_draws;
    grad.assign(K + R, 0.0);
    double total = 0.0;

    std::vector<double> beta(K);
    std::vector<double> logl(static_cast<size_t>(D));
    std::vector<double> scores(static_cast<size_t>(D) * (K + R));
    std::array<double, 3> probs{};

    for (size_t n = 0; n < panel.persons.size(); ++n) {
        const auto& person = panel.persons[n];
        std::fill(scores.begin(), scores.end(), 0.0);
        for (int r = 0; r < D; ++r) {
            for (size_t k = 0; k < K; ++k) beta[k] = theta[k];
            for (size_t d = 0; d < R; ++d)
                beta[ctx.random_idx[d]] += theta[K + d] * ctx.z_at(n, d, r);
            double ll = 0.0;
            double* score = scores.data() + static_cast<size_t>(r) * (K + R);
            for (const auto& o : person.obs) {
                ll += obs_log_prob(o, beta, probs);
                const auto& xc = o.x[static_cast<size_t>(o.chosen - 1)];
                for (size_t k = 0; k < K; ++k) {
                    double expect = 0.0;
                    for (int j = 0; j < 3; ++j)
                        expect += probs[static_cast<size_t>(j)] * o.x[static_cast<size_t>(j)][k];
                    score[k] += xc[k] - expect;
                }
            }
            for (size_t d = 0; d < R; ++d)
                score[K + d] = score[ctx.random_idx[d]] * ctx.z_at(n, d, r);
            logl[static_cast<size_t>(r)] = ll;
        }
        double m = logl[0];
        for (int r = 1; r < D; ++r) m = std::max(m, logl[static_cast<size_t>(r)]);
        double s = 0.0;
        for (int r = 0; r < D; ++r) s += std::exp(logl[static_cast<size_t>(r)] - m);
        total += m + std::log(s) - std::log(static_cast<double>(D));
        for (int r = 0; r < D; ++r) {
            const double weight = std::exp(logl[static_cast<size_t>(r)] - m) / s;
            const double* score = scores.data() + static_cast<size_t>(r) * (K + R);
            for (size_t k = 0; k < K + R; ++k) grad[k] += weight * score[k];
        }
    }
    return total;
}

}  // namespace detail

// Simulated log-likelihood exposed for the degenerate-mixing check: with all
// w = 0 it equals the exact MNL value for any draw set.
inline double mixl_simulated_loglik(const Panel& panel, const ModelSpec& spec,
                                    const std::vector<double>& theta) {
    detail::MixlContext ctx = detail::make_mixl_context(panel, spec);
    std::vector<double> grad;
    return detail::simulated_loglik(theta, grad, ctx);
}

inline ChoiceModelFit estimate_mixl(const ModelSpec& spec, const Dataset& dataset) {
    if (spec.random_coefficients.empty())
        fail(ErrorKind::config, "estimate_mixl needs at least one random coefficient");
    Panel panel = build_panel(dataset, spec);
    if (panel.persons.empty()) fail(ErrorKind::config, "no usable respondents to estimate on");
    detail::MixlContext ctx = detail::make_mixl_context(panel, spec);
    const size_t K = panel.covariate_names.size();
    const size_t R = ctx.random_idx.size();

    // start from the homogeneous solution, small positive mixing
    ModelSpec mnl_spec = spec;
    mnl_spec.random_coefficients.clear();
    ChoiceModelFit mnl = estimate_mnl(mnl_spec, dataset);
    std::vector<double> theta0 = mnl.estimates;
    theta0.resize(K + R, 0.1);

    auto objective = [&](const std::vector<double>& theta, std::vector<double>& grad) {
        double value = detail::simulated_loglik(theta, grad, ctx);
        for (auto& g : grad) g = -g;
        return -value;
    };
    OptimResult opt = minimize_bfgs(objective, std::move(theta0));

    // the sign of a mixing coefficient is not identified
    for (size_t d = 0; d < R; ++d) opt.x[K + d] = std::fabs(opt.x[K + d]);

    ChoiceModelFit fit;
    fit.spec = spec;
    fit.covariate_names = panel.covariate_names;
    fit.param_names = panel.covariate_names;
    for (const auto& name : spec.random_coefficients) fit.param_names.push_back("w_" + name);
    fit.estimates = opt.x;
    fit.log_likelihood = -opt.value;
    fit.converged = opt.converged;
    fit.iterations = opt.iterations;
    fit.n_persons = panel.persons.size();
    fit.n_observations = panel.persons.size() * 5;

    auto loglik_fn = [&](const std::vector<double>& theta, std::vector<double>& grad) {
        return detail::simulated_loglik(theta, grad, ctx);
    };
    std::vector<double> hess = central_difference_hessian(loglik_fn, opt.x);
    for (auto& v : hess) v = -v;
    fit.std_errors =
        detail::std_errors_from_hessian(std::move(hess), static_cast<int>(K + R));
    fit.t_stats = detail::t_stats_from(fit.estimates, fit.std_errors);
    return fit;
}

// ---- significance filter ----

// Covariates whose mean coefficient passes the two-sided normal test at
// level alpha.
inline std::set<std::string> significant_factors(const ChoiceModelFit& fit, double alpha = 0.05) {
    if (!fit.converged)
        fail(ErrorKind::config, "refusing to read significance off a non-converged fit");
    const double crit = normal_critical_value(alpha);
    std::set<std::string> retained;
    for (size_t i = 0; i < fit.covariate_names.size(); ++i)
        if (std::isfinite(fit.std_errors[i]) && std::fabs(fit.t_stats[i]) >= crit)
            retained.insert(fit.covariate_names[i]);
    return retained;
}

// Prompt factor filter derived from a fit: previous choices and statements
// are kept (the model carries no evidence about them), sociodemographic
// items modelled by a covariate survive only if some covariate of theirs is
// significant, and unmodelled items are kept.
inline std::set<std::string> factor_filter_from_fit(const ChoiceModelFit& fit,
                                                    double alpha = 0.05) {
    const std::set<std::string> significant = significant_factors(fit, alpha);
    static const char* kSdItems[] = {"income",   "household",   "employed", "education",
                                     "property", "inspections", "heating",  "tariff"};
    std::set<std::string> modeled, kept;
    for (const auto& term : fit.spec.sociodem_terms) {
        if (term.prompt_item.empty()) continue;
        modeled.insert(term.prompt_item);
        if (significant.count(term.name)) kept.insert(term.prompt_item);
    }
    std::set<std::string> filter = {"SPC", "ST"};
    for (const char* item : kSdItems) {
        const std::string full = std::string("SD:") + item;
        if (!modeled.count(full) || kept.count(full)) filter.insert(full);
    }
    return filter;
}

// ---- prediction ----

struct ChoicePrediction {
    std::string respondent_id;
    int choice = 0;
    std::array<double, 3> probabilities{0.0, 0.0, 0.0};
};

// Held-out-scenario predictions. Draw weights are conditioned on the
// person's five observed choices (Bayes weighting); with no random
// coefficients this reduces to the plain logit argmax.
inline std::vector<ChoicePrediction> predict_choices(const ChoiceModelFit& fit,
                                                     const Dataset& dataset) {
    Panel panel = build_panel(dataset, fit.spec);
    if (panel.covariate_names != fit.covariate_names)
        fail(ErrorKind::config, "fit covariates do not match this dataset's design");
    detail::MixlContext ctx = detail::make_mixl_context(panel, fit.spec);
    const size_t K = panel.covariate_names.size();
    const size_t R = ctx.random_idx.size();
    const int D = R == 0 ? 1 : ctx.n_draws;

    std::vector<ChoicePrediction> out;
    std::vector<double> beta(K);
    std::array<double, 3> probs{};
    for (size_t n = 0; n < panel.persons.size(); ++n) {
        const auto& person = panel.persons[n];
        if (!person.holdout) continue;
        double weight_sum = 0.0;
        std::array<double, 3> acc{0.0, 0.0, 0.0};
        std::vector<double> logl(static_cast<size_t>(D), 0.0);
        std::vector<std::array<double, 3>> p6(static_cast<size_t>(D));
        for (int r = 0; r < D; ++r) {
            for (size_t k = 0; k < K; ++k) beta[k] = fit.estimates[k];
            for (size_t d = 0; d < R; ++d)
                beta[ctx.random_idx[d]] += fit.estimates[K + d] * ctx.z_at(n, d, r);
            double ll = 0.0;
            for (const auto& o : person.obs) ll += detail::obs_log_prob(o, beta, probs);
            logl[static_cast<size_t>(r)] = ll;
            Observation q = *person.holdout;
            q.chosen = 1;  // probability extraction only
            detail::obs_log_prob(q, beta, probs);
            p6[static_cast<size_t>(r)] = probs;
        }
        double m = logl[0];
        for (int r = 1; r < D; ++r) m = std::max(m, logl[static_cast<size_t>(r)]);
        for (int r = 0; r < D; ++r) {
            const double w = std::exp(logl[static_cast<size_t>(r)] - m);
            weight_sum += w;
            for (int j = 0; j < 3; ++j)
                acc[static_cast<size_t>(j)] += w * p6[static_cast<size_t>(r)][static_cast<size_t>(j)];
        }
        ChoicePrediction pred;
        pred.respondent_id = person.id;
        for (int j = 0; j < 3; ++j) pred.probabilities[static_cast<size_t>(j)] =
            acc[static_cast<size_t>(j)] / weight_sum;
        pred.choice = 1;
        for (int j = 1; j < 3; ++j)
            if (pred.probabilities[static_cast<size_t>(j)] >
                pred.probabilities[static_cast<size_t>(pred.choice - 1)])
                pred.choice = j + 1;
        out.push_back(pred);
    }
    return out;
}

inline ojson predictions_to_json(const ExperimentId experiment,
                                 const std::vector<ChoicePrediction>& predictions) {
    ojson preds = ojson::object();
    for (const auto& p : predictions) {
        preds[p.respondent_id] = {{"choice", p.choice},
                                  {"probabilities", p.probabilities}};
    }
    ojson j;
    j["predictions"] = ojson::object();
    j["predictions"][to_string(experiment)] = std::move(preds);
    return j;
}

}  // namespace spsim
