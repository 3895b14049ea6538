#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "adk/backbone.hpp"
#include "adk/heads.hpp"
#include "adk/optim.hpp"
#include "adk/rng.hpp"
#include "adk/softpipe.hpp"

namespace adk {

struct TrainConfig {
    float lr{1e-3f};  // toy-scale default; full-scale runs want far smaller
    float beta1{0.9f};
    float beta2{0.999f};
    float weight_decay{0.0f};
    int steps{400};
    int batch_size{32};
    float easy_mask_fraction{0.6f};
    bool dft_enabled{true};
    float alpha{30.0f};
    float epsilon{1e-8f};
    std::uint64_t seed{0};

    void validate() const;
};

// -log(p_tilde[target] + 1e-12)
double ce_loss(const Tensor& p_tilde, int target);
Var ce_loss(Var p_tilde, int target);

// Keep flags per record. Records whose greedy prediction already matches the
// target are dropped independently with probability `fraction`; hard records
// are always kept. Fresh draws every call (masking is resampled per epoch).
std::vector<char> easy_token_mask(std::span<const TraceRecord> records, float fraction,
                                  CounterRng& rng);

// Detached probability of the target under the final distribution; scales the
// per-example loss without contributing gradient of its own.
double dft_weight(const Tensor& p_tilde, int target);

// Hinge sum for one predicted-parameter series:
//   sum_pos max(0, margin - (high - base)) + max(0, margin - (base - low)).
double ranking_hinge_series(std::span<const float> base, std::span<const float> high,
                            std::span<const float> low, float margin);
Var ranking_hinge_series(std::span<const Var> base, std::span<const Var> high,
                         std::span<const Var> low, float margin);

// Ranking loss over both parameters; each entry pairs (T_hat, P_hat).
struct ParamSeries {
    std::vector<float> t_hat;
    std::vector<float> p_hat;
};
double control_ranking_loss(const ParamSeries& base, const ParamSeries& high,
                            const ParamSeries& low, float margin);

struct TrainCurvePoint {
    int step;
    double loss;
    double mean_t;
    double mean_p;
};

struct TrainResult {
    HeadParams heads;
    std::vector<TrainCurvePoint> curve;
};

// End-to-end head optimization through the soft pipeline: per batch forward
// heads -> soft pipeline -> masked, DFT-weighted mean CE -> backward -> AdamW
// on head parameters only. Epoch order and easy-token draws come from
// cfg.seed; a non-finite loss aborts naming the step and batch record.
TrainResult train_heads(const std::vector<TraceRecord>& dataset, const HeadParams& init,
                        const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// instruction-based decoding control
// ---------------------------------------------------------------------------

// Three teacher-forced hidden-state sequences over the same underlying
// positions; the conditions differ only in the leading command token.
struct ControlTriple {
    Tensor base_hiddens;  // [n, d]
    Tensor high_hiddens;
    Tensor low_hiddens;
};

// Command markers occupy the two top vocabulary ids.
int control_high_token(int vocab);
int control_low_token(int vocab);

std::vector<ControlTriple> make_control_triples(const BackboneParams& backbone,
                                                const std::vector<std::vector<int>>& sequences);

struct ControlTrainConfig {
    int steps{250};
    int batch_triples{4};
    float lr{2e-3f};
    float margin{0.05f};
    std::uint64_t seed{0};
};

struct ControlTrainResult {
    HeadParams heads;
    std::vector<CurvePoint> curve;
};

ControlTrainResult control_train(const std::vector<ControlTriple>& triples,
                                 const HeadParams& init, const ControlTrainConfig& cfg);

}  // namespace adk
