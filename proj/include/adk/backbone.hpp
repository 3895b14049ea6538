#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adk/tape.hpp"
#include "adk/tensor.hpp"

namespace adk {

// ---------------------------------------------------------------------------
// synthetic task
// ---------------------------------------------------------------------------

// Deterministic positions carry one fixed token; stochastic positions draw
// uniformly from a per-position answer set of size s. The two sets partition
// [0, L). The default task alternates the two kinds (even = deterministic),
// which gives the backbone a built-in entropy contrast for the heads to read.
struct SynthTaskSpec {
    int vocab{128};
    int seq_len{64};
    std::vector<int> det_token;              // size L; -1 marks a stochastic position
    std::vector<std::vector<int>> answers;   // size L; empty at deterministic positions
    std::uint64_t rng_seed{0};

    bool is_deterministic(int pos) const { return det_token[static_cast<std::size_t>(pos)] >= 0; }
    void validate() const;
};

// Alternating layout with answer-set size s, drawn from `seed`. Token ids are
// confined to [0, vocab - 8); the top 8 ids stay reserved for control markers.
SynthTaskSpec make_alternating_task(int vocab, int seq_len, int answer_set_size,
                                    std::uint64_t seed);

std::vector<std::vector<int>> generate_synth_dataset(const SynthTaskSpec& spec, int n_sequences,
                                                     std::uint64_t seed);

// ---------------------------------------------------------------------------
// toy transformer
// ---------------------------------------------------------------------------

struct BackboneConfig {
    int vocab{128};
    int seq_len{64};     // positional table size == maximum context
    int d_model{64};
    int n_heads{4};
    int n_layers{2};
    int mlp_hidden{256};

    void validate() const;
};

struct BackboneParams {
    BackboneConfig cfg;
    Tensor tok_emb;  // [V, d]
    Tensor pos_emb;  // [L, d]
    struct Layer {
        Tensor wq, wk, wv, wo;  // [d, d]
        Tensor w1, b1;          // [mlp_hidden, d], [mlp_hidden]
        Tensor w2, b2;          // [d, mlp_hidden], [d]
    };
    std::vector<Layer> layers;
    Tensor lm_head;  // [V, d]
    bool frozen{false};

    std::vector<Tensor*> tensors();
    std::vector<const Tensor*> tensors() const;
    std::uint64_t checksum() const;
};

BackboneParams init_backbone(const BackboneConfig& cfg, std::uint64_t seed);

// Pure forward pass: final-rmsnorm hidden states [n, d] and logits [n, V] for
// every position of `tokens`. Causal by construction.
void backbone_forward(const BackboneParams& params, std::span<const int> tokens, Tensor& hiddens,
                      Tensor& logits);

// Recorded forward used by pretraining; returns the logits node [n, V].
struct BackboneVars {
    Var tok_emb, pos_emb, lm_head;
    struct Layer {
        Var wq, wk, wv, wo, w1, b1, w2, b2;
    };
    std::vector<Layer> layers;
};
BackboneVars lift_backbone(Tape& tape, const BackboneParams& params);
Var backbone_forward(const BackboneVars& vars, const BackboneConfig& cfg,
                     std::span<const int> tokens);

// ---------------------------------------------------------------------------
// pretraining
// ---------------------------------------------------------------------------

struct PretrainConfig {
    int steps{300};
    int batch_size{8};
    float lr{3e-3f};
    float weight_decay{0.0f};
    std::uint64_t seed{0};
};

struct CurvePoint {
    int step;
    double loss;
};

struct PretrainResult {
    BackboneParams params;  // returned frozen
    std::vector<CurvePoint> curve;
};

// AdamW on next-token cross entropy over `sequences`. Zero steps returns the
// initialization unchanged. A non-finite loss aborts with the step index.
PretrainResult pretrain_backbone(const BackboneConfig& cfg,
                                 const std::vector<std::vector<int>>& sequences,
                                 const PretrainConfig& train);

// ---------------------------------------------------------------------------
// trace records
// ---------------------------------------------------------------------------

struct TraceRecord {
    Tensor hidden;      // [d_model]
    Tensor logits;      // [V]
    int target{0};
    bool greedy_match{false};
    int position{0};    // position of the target within its sequence
    int sequence_id{0};
};

// One record per predicted position: hidden/logits at position t, target
// x_{t+1}, position t+1.
std::vector<TraceRecord> build_traces(const BackboneParams& params,
                                      const std::vector<std::vector<int>>& sequences,
                                      int first_sequence_id = 0);

// "ADK1" container plus JSON sidecar (<path>.json) carrying the architecture,
// the frozen flag and, when given, the synthetic task the backbone was
// pretrained on. Bit-exact round-trip.
void save_backbone(const std::string& path, const BackboneParams& params,
                   const SynthTaskSpec* task = nullptr);
BackboneParams load_backbone(const std::string& path, SynthTaskSpec* task_out = nullptr);

struct TraceLoadReport {
    // records whose stored greedy_match disagrees with argmax(logits)==target
    std::vector<int> flagged_records;
    std::vector<std::int64_t> flagged_offsets;
};

// "ADKT" container: magic, u32 record count, u32 d_model, u32 V, then per
// record u32 sequence_id, u32 position, u32 target, u8 greedy_match,
// f32[d_model] hidden, f32[V] logits. Little-endian, bit-exact round-trip.
void save_trace_dataset(const std::string& path, const std::vector<TraceRecord>& records,
                        int d_model, int vocab);
std::vector<TraceRecord> load_trace_dataset(const std::string& path,
                                            TraceLoadReport* report = nullptr);

}  // namespace adk
