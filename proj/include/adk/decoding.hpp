#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adk/backbone.hpp"
#include "adk/heads.hpp"
#include "adk/rng.hpp"

namespace adk {

enum class DecodeMode { greedy, default_sampling, static_params, autodeco };

std::string to_string(DecodeMode mode);
DecodeMode decode_mode_from_string(const std::string& name);

struct DecodingParams {
    float t_hat{1.0f};
    float p_hat{1.0f};
    enum class Source { predicted, static_override, greedy, default_sampling } source{
        Source::default_sampling};
};

std::string to_string(DecodingParams::Source source);
DecodingParams::Source source_from_string(const std::string& name);

struct StepResult {
    int token{0};
    DecodingParams params;
    float logprob{0.0f};  // log-probability under the step's final distribution
};

// One sampling step over precomputed (hidden, logits).
//   greedy   -> argmax; params record the (0, 1) sentinel
//   default  -> sample softmax(logits); (T, P) = (1, 1)
//   static   -> hard top-p at caller-supplied (T, P)
//   autodeco -> heads predict (T, P), then hard top-p at the prediction
StepResult decode_step(const Tensor& hidden, const Tensor& logits, const HeadParams* heads,
                       DecodeMode mode, float static_t, float static_p, CounterRng& rng);

struct GenerationTrace {
    std::vector<int> prompt;
    std::vector<int> tokens;
    std::vector<DecodingParams> params;
    std::vector<float> logprobs;
    std::uint64_t seed{0};
    DecodeMode mode{DecodeMode::default_sampling};

    void validate() const;  // the three per-step lists must share their length
    double mean_t() const;
    double mean_p() const;
};

// Iterates backbone forward + decode_step until stop_token, max_len generated
// tokens, or the positional table is exhausted. Fully reproducible from
// (inputs, seed).
GenerationTrace generate(std::span<const int> prompt, const BackboneParams& backbone,
                         const HeadParams* heads, DecodeMode mode, int max_len, int stop_token,
                         std::uint64_t seed, float static_t = 1.0f, float static_p = 1.0f);

// JSON with exact decimal round-trip of every f32 value.
void export_trace(const GenerationTrace& trace, const std::string& path);
GenerationTrace import_trace(const std::string& path);

}  // namespace adk
