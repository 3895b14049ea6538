#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "adk/backbone.hpp"
#include "adk/decoding.hpp"
#include "adk/heads.hpp"

namespace adk {

// ---------------------------------------------------------------------------
// pass@1 / pass@k
// ---------------------------------------------------------------------------

struct SampleOutcome {
    int problem{0};
    int seed{0};
    int sample{0};
    bool correct{false};
    bool checker_error{false};  // diagnostic; such samples count as incorrect
};

struct PassAt1 {
    double mean{0.0};
    double stddev{0.0};  // population std over per-seed accuracies
    std::vector<double> per_seed;
};

// Per-seed accuracy over problems and samples, reported mean ± population std
// over seeds. Every (problem, seed) pair must carry the same sample count.
PassAt1 pass_at_1(std::span<const SampleOutcome> outcomes);

// Unbiased estimator 1 - C(n-c,k)/C(n,k), overflow-safe products.
double pass_at_k(int n, int c, int k);

// ---------------------------------------------------------------------------
// two-stage grid search (temperature first at P = 1.0)
// ---------------------------------------------------------------------------

struct GridPoint {
    double value{0.0};
    double score{0.0};
};

struct GridSearchResult {
    std::vector<GridPoint> stage1;  // (T, score) at P = 1.0
    std::vector<GridPoint> stage2;  // (P, score) at the chosen T
    double chosen_t{0.0};
    double chosen_p{0.0};
    double best_score{0.0};
};

// Ties break toward the smaller T and the larger P. With a deterministic
// eval_fn and 1.0 present in p_grid, best_score equals the max over every
// call made.
GridSearchResult grid_search(const std::function<double(double, double)>& eval_fn,
                             std::span<const double> t_grid, std::span<const double> p_grid);

// ---------------------------------------------------------------------------
// control consistency
// ---------------------------------------------------------------------------

enum class ControlDirection { low, high };

struct ControlStats {
    double delta_t{0.0};
    double delta_p{0.0};
    double consistency_t{0.0};  // percent of prompts moving in the commanded direction
    double consistency_p{0.0};
};

// Traces paired per prompt by index; per-prompt means over generated tokens.
ControlStats control_consistency(std::span<const GenerationTrace> base_traces,
                                 std::span<const GenerationTrace> cmd_traces,
                                 ControlDirection direction);

// ---------------------------------------------------------------------------
// efficiency accounting
// ---------------------------------------------------------------------------

struct ArchConfig {
    int n_layers{2};
    int d_model{64};
    int mlp_hidden{256};
    int vocab{128};
    int head_hidden{64};  // hidden width of the two decoding heads
};

// Extra FLOPs both heads add per generated token (2·MAC convention plus the
// squash evaluations); independent of context length.
double head_flops_per_token(int d_model, int head_hidden);

// Analytic count for generating `seq_len` tokens from an empty context:
// backbone + lm-head per token, plus the head term when enabled.
double flops_estimate(const ArchConfig& arch, int seq_len, bool heads_enabled);

struct LatencyReport {
    double run_seconds{0.0};
    double baseline_seconds{0.0};
    double overhead{0.0};  // (run - baseline) / baseline, signed
};

// Wall-clock mean over `repetitions` runs after one warm-up of each closure.
LatencyReport latency_measure(const std::function<void()>& run,
                              const std::function<void()>& baseline, int repetitions);

// ---------------------------------------------------------------------------
// toy benchmark
// ---------------------------------------------------------------------------

// A problem is a prompt prefix of a held-out task sequence. A sample counts
// as correct when every generated deterministic position carries its unique
// token (the designated answer span); stochastic positions are free.
struct BenchTask {
    std::string name;
    SynthTaskSpec spec;
    int prompt_len{16};
    std::vector<std::vector<int>> prompts;
};

BenchTask make_bench_task(const std::string& name, const SynthTaskSpec& spec, int prompt_len,
                          int n_problems, std::uint64_t seed);
void save_bench_task(const BenchTask& task, const std::string& path);
BenchTask load_bench_task(const std::string& path);

bool check_answer(const BenchTask& task, std::span<const int> generated, int first_position);

struct ModeSpec {
    std::string label;
    DecodeMode mode{DecodeMode::default_sampling};
    float static_t{1.0f};
    float static_p{1.0f};
    const HeadParams* heads{nullptr};
};

struct BenchmarkConfig {
    int n_seeds{8};
    int samples_per_seed{16};
    std::uint64_t base_seed{0};
    int threads{0};  // 0 = hardware concurrency
};

struct BenchmarkResult {
    std::string task;
    std::string label;
    std::vector<SampleOutcome> outcomes;
    PassAt1 summary;
};

// Parallel over (problem, seed, sample); per-sample RNG streams are derived
// from base_seed, so results do not depend on scheduling.
std::vector<BenchmarkResult> run_benchmark(const BenchTask& task, const BackboneParams& backbone,
                                           std::span<const ModeSpec> modes,
                                           const BenchmarkConfig& cfg);

}  // namespace adk
