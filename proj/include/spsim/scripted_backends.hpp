#pragma once

// Deterministic in-process backends. They make desk-scale runs and the
// acceptance suite possible without a live model: every response is a pure
// function of (policy, prompt, sample_key).

#include "spsim/llm_gateway.hpp"
#include "spsim/numeric.hpp"
#include "spsim/response_codec.hpp"

#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>

namespace spsim {

class ScriptedBackend : public ChatBackend {
public:
    const BackendConfig& config() const override { return cfg_; }

    // Replies with the user message verbatim.
    static std::unique_ptr<ScriptedBackend> echo() {
        auto b = make("mock-echo");
        b->respond_ = [](const ScriptedBackend&, const PromptBundle& bundle, uint64_t) {
            return bundle.user_message;
        };
        return b;
    }

    static std::unique_ptr<ScriptedBackend> fixed_choice(int k) {
        if (k < 1 || k > 3) fail(ErrorKind::config, "fixed_choice wants k in 1..3");
        auto b = make("mock-fixed-" + std::to_string(k));
        b->respond_ = [k](const ScriptedBackend&, const PromptBundle&, uint64_t) {
            return ojson{{"Explanation", "Scripted fixed choice."},
                         {"Choice", k},
                         {"Ignored", ojson::array()}}
                .dump();
        };
        return b;
    }

    // Uniform random choice; the usual random-guessing baseline.
    static std::unique_ptr<ScriptedBackend> uniform_random(uint64_t seed) {
        auto b = make("mock-uniform-" + std::to_string(seed));
        b->respond_ = [seed](const ScriptedBackend&, const PromptBundle& bundle,
                             uint64_t sample_key) {
            std::mt19937_64 rng(mix_seed(mix_seed(seed, sample_key),
                                         fnv1a64(bundle.user_message)));
            const int k = static_cast<int>(rng() % 3) + 1;
            return ojson{{"Explanation", "Scripted uniform choice."},
                         {"Choice", k},
                         {"Ignored", ojson::array()}}
                .dump();
        };
        return b;
    }

    // Parses the question JSON out of the user message, encodes it with the
    // matching design, and answers the utility argmax under `betas`. With a
    // noise seed each utility receives an independent Gumbel shock, which
    // turns the policy into a logit sampler. Ties break to the lowest option.
    static std::unique_ptr<ScriptedBackend> utility_argmax(
        std::map<ExperimentId, std::vector<double>> betas,
        std::map<ExperimentId, ExperimentDesign> designs,
        std::optional<uint64_t> noise_seed = std::nullopt) {
        auto b = make("mock-argmax");
        b->betas_ = std::move(betas);
        b->designs_ = std::move(designs);
        b->noise_seed_ = noise_seed;
        b->respond_ = [](const ScriptedBackend& self, const PromptBundle& bundle,
                         uint64_t sample_key) {
            const int k = self.argmax_choice(bundle, sample_key);
            return ojson{{"Explanation", "Scripted utility-based choice."},
                         {"Choice", k},
                         {"Ignored", ojson::array()}}
                .dump();
        };
        return b;
    }

    // Emits unparsable output with the given probability, a valid random
    // choice otherwise.
    static std::unique_ptr<ScriptedBackend> malformed(double rate, uint64_t seed) {
        if (rate < 0.0 || rate > 1.0) fail(ErrorKind::config, "malformed rate must be in [0,1]");
        auto b = make("mock-malformed");
        b->respond_ = [rate, seed](const ScriptedBackend&, const PromptBundle& bundle,
                                   uint64_t sample_key) -> std::string {
            std::mt19937_64 rng(mix_seed(mix_seed(seed, sample_key),
                                         fnv1a64(bundle.user_message)));
            if (uniform_open01(rng) < rate) return "I think the answer is {\"Choice\": ";
            const int k = static_cast<int>(rng() % 3) + 1;
            return ojson{{"Explanation", "Scripted choice."},
                         {"Choice", k},
                         {"Ignored", ojson::array()}}
                .dump();
        };
        return b;
    }

    CompletionResult complete(const PromptBundle& bundle, uint64_t sample_key = 0) override {
        CompletionResult res;
        res.raw_text = respond_(*this, bundle, sample_key);
        res.finish_reason = FinishReason::stop;
        res.attempt_count = 1;
        return res;
    }

private:
    static std::unique_ptr<ScriptedBackend> make(std::string id) {
        auto b = std::unique_ptr<ScriptedBackend>(new ScriptedBackend());
        b->cfg_.backend_id = std::move(id);
        b->cfg_.base_url = "scripted://";
        b->cfg_.model_name = "scripted";
        return b;
    }

    int argmax_choice(const PromptBundle& bundle, uint64_t sample_key) const {
        auto obj = detail::extract_first_json_object(bundle.user_message);
        if (!obj || !obj->contains("options"))
            fail(ErrorKind::config, "utility_argmax: no options JSON in the user message");
        const ExperimentDesign* design = nullptr;
        const std::string first_option = (*obj)["options"].at(0).value("name", "");
        for (const auto& [id, d] : designs_)
            if (d.option_names[0] == first_option) design = &d;
        if (!design)
            fail(ErrorKind::config,
                 "utility_argmax: option '" + first_option + "' matches no known design");
        const ChoiceScenario scenario =
            detail::load_scenario(*design, *obj, "scripted question", 6);
        const EncodedScenario enc = encode_attributes(*design, scenario);
        auto beta_it = betas_.find(design->id);
        if (beta_it == betas_.end())
            fail(ErrorKind::config, std::string("utility_argmax: no parameters for ") +
                                        to_string(design->id));
        const auto& beta = beta_it->second;
        if (beta.size() != enc.covariate_names.size())
            fail(ErrorKind::config, "utility_argmax: parameter vector has " +
                                        std::to_string(beta.size()) + " entries, design needs " +
                                        std::to_string(enc.covariate_names.size()));
        std::array<double, 3> v{};
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (size_t c = 0; c < beta.size(); ++c)
                acc += beta[c] * enc.x[static_cast<size_t>(j)][c];
            v[static_cast<size_t>(j)] = acc;
        }
        if (noise_seed_) {
            std::mt19937_64 rng(mix_seed(mix_seed(*noise_seed_, sample_key),
                                         fnv1a64(bundle.user_message)));
            for (auto& u : v) u += gumbel_from_uniform(uniform_open01(rng));
        }
        int best = 0;
        for (int j = 1; j < 3; ++j)
            if (v[static_cast<size_t>(j)] > v[static_cast<size_t>(best)]) best = j;
        return best + 1;
    }

    using Responder =
        std::function<std::string(const ScriptedBackend&, const PromptBundle&, uint64_t)>;

    BackendConfig cfg_;
    Responder respond_;
    std::map<ExperimentId, std::vector<double>> betas_;
    std::map<ExperimentId, ExperimentDesign> designs_;
    std::optional<uint64_t> noise_seed_;
};

}  // namespace spsim
