#pragma once

#include <cstdint>
#include <string>

#include "adk/tape.hpp"
#include "adk/tensor.hpp"

namespace adk {

// Output-squashing ranges. Bounded sigmoids keep T away from zero (Eq. 1
// division) and P inside (0,1] (non-empty nucleus), so downstream code never
// clamps.
struct SquashRange {
    float t_min{0.05f};
    float t_max{2.0f};
    float p_min{0.1f};
    float p_max{1.0f};

    void validate() const;
};

struct Mlp2 {
    Tensor w1;  // [hidden, in]
    Tensor b1;  // [hidden]
    Tensor w2;  // [1, hidden]
    Tensor b2;  // [1]

    std::int64_t param_count() const {
        return w1.numel() + b1.numel() + w2.numel() + b2.numel();
    }
};

// Temperature head reads the hidden state; the top-p head reads the hidden
// state concatenated with the just-predicted temperature.
struct HeadParams {
    int d_model{0};
    int d_head{0};
    Mlp2 temp_mlp;  // input d_model
    Mlp2 topp_mlp;  // input d_model + 1
    SquashRange squash;

    std::int64_t param_count() const {
        return temp_mlp.param_count() + topp_mlp.param_count();
    }
};

// Weights ~ uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) from the seeded counter
// RNG; hidden biases zero; output biases solve the squash inverse so a zero
// hidden state predicts T ≈ 1.0 and P ≈ 1.0 (default sampling) before any
// training.
HeadParams init_heads(int d_model, int d_head, SquashRange squash, std::uint64_t rng_seed);

float temp_head_forward(const Tensor& hidden, const HeadParams& params);
float topp_head_forward(const Tensor& hidden, float t_hat, const HeadParams& params);

// recorded variants; parameters lifted as leaves so training can read their
// adjoints after backward
struct HeadVars {
    Var temp_w1, temp_b1, temp_w2, temp_b2;
    Var topp_w1, topp_b1, topp_w2, topp_b2;
};

HeadVars lift_heads(Tape& tape, const HeadParams& params);
Var temp_head_forward(Var hidden, const HeadVars& vars, const SquashRange& squash);
Var topp_head_forward(Var hidden, Var t_hat, const HeadVars& vars, const SquashRange& squash);

// "ADK1" container plus a JSON sidecar (<path>.json) naming each tensor, its
// shape, the dims and the squash constants. Bit-exact round-trip.
void save_heads(const std::string& path, const HeadParams& params);
HeadParams load_heads(const std::string& path);

}  // namespace adk
