#include "adk/evalkit.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <thread>

#include <nlohmann/json.hpp>

namespace adk {

namespace {

using nlohmann::json;

}  // namespace

// ---------------------------------------------------------------------------
// pass@1 / pass@k
// ---------------------------------------------------------------------------

PassAt1 pass_at_1(std::span<const SampleOutcome> outcomes) {
    if (outcomes.empty()) throw UsageError("pass_at_1: no outcomes");
    std::map<std::pair<int, int>, int> counts;  // (problem, seed) -> samples
    std::map<int, std::pair<long, long>> per_seed;  // seed -> (correct, total)
    for (const SampleOutcome& o : outcomes) {
        counts[{o.problem, o.seed}] += 1;
        auto& agg = per_seed[o.seed];
        agg.first += o.correct ? 1 : 0;
        agg.second += 1;
    }
    const int expected = counts.begin()->second;
    for (const auto& [key, n] : counts) {
        if (n != expected) {
            throw UsageError("pass_at_1: ragged sample counts (problem " +
                             std::to_string(key.first) + ", seed " + std::to_string(key.second) +
                             " has " + std::to_string(n) + ", expected " +
                             std::to_string(expected) + ")");
        }
    }
    PassAt1 result;
    for (const auto& [seed, agg] : per_seed) {
        result.per_seed.push_back(static_cast<double>(agg.first) / static_cast<double>(agg.second));
    }
    double mean = 0.0;
    for (double a : result.per_seed) mean += a;
    mean /= static_cast<double>(result.per_seed.size());
    double var = 0.0;
    for (double a : result.per_seed) var += (a - mean) * (a - mean);
    var /= static_cast<double>(result.per_seed.size());
    result.mean = mean;
    result.stddev = std::sqrt(var);
    return result;
}

double pass_at_k(int n, int c, int k) {
    if (c < 0 || c > n) throw UsageError("pass_at_k: need 0 <= c <= n");
    if (k < 1 || k > n) throw UsageError("pass_at_k: need 1 <= k <= n");
    if (c == 0) return 0.0;
    if (n - c < k) return 1.0;  // every k-subset hits a correct sample
    double prod = 1.0;
    for (int i = 0; i < k; ++i) {
        prod *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
    }
    return 1.0 - prod;
}

// ---------------------------------------------------------------------------
// grid search
// ---------------------------------------------------------------------------

GridSearchResult grid_search(const std::function<double(double, double)>& eval_fn,
                             std::span<const double> t_grid, std::span<const double> p_grid) {
    if (t_grid.empty() || p_grid.empty()) throw UsageError("grid_search: empty grid");
    GridSearchResult result;
    bool have_best = false;
    for (double t : t_grid) {
        const double score = eval_fn(t, 1.0);
        result.stage1.push_back({t, score});
        if (!have_best || score > result.best_score ||
            (score == result.best_score && t < result.chosen_t)) {
            result.best_score = score;
            result.chosen_t = t;
            have_best = true;
        }
    }
    have_best = false;
    for (double p : p_grid) {
        const double score = eval_fn(result.chosen_t, p);
        result.stage2.push_back({p, score});
        if (!have_best || score > result.best_score ||
            (score == result.best_score && p > result.chosen_p)) {
            result.best_score = score;
            result.chosen_p = p;
            have_best = true;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// control consistency
// ---------------------------------------------------------------------------

ControlStats control_consistency(std::span<const GenerationTrace> base_traces,
                                 std::span<const GenerationTrace> cmd_traces,
                                 ControlDirection direction) {
    if (base_traces.size() != cmd_traces.size() || base_traces.empty()) {
        throw UsageError("control_consistency: traces must pair up per prompt");
    }
    const double sign = direction == ControlDirection::high ? 1.0 : -1.0;
    double sum_dt = 0.0, sum_dp = 0.0;
    int hits_t = 0, hits_p = 0;
    for (std::size_t i = 0; i < base_traces.size(); ++i) {
        if (base_traces[i].tokens.empty() || cmd_traces[i].tokens.empty()) {
            throw UsageError("control_consistency: empty trace at prompt " + std::to_string(i));
        }
        const double dt = cmd_traces[i].mean_t() - base_traces[i].mean_t();
        const double dp = cmd_traces[i].mean_p() - base_traces[i].mean_p();
        sum_dt += dt;
        sum_dp += dp;
        if (sign * dt > 0.0) ++hits_t;
        if (sign * dp > 0.0) ++hits_p;
    }
    const double n = static_cast<double>(base_traces.size());
    return {sum_dt / n, sum_dp / n, 100.0 * hits_t / n, 100.0 * hits_p / n};
}

// ---------------------------------------------------------------------------
// efficiency accounting
// ---------------------------------------------------------------------------

namespace {
constexpr double kSquashFlops = 12.0;  // two bounded sigmoids plus scale/shift
}

double head_flops_per_token(int d_model, int head_hidden) {
    const double d = d_model, h = head_hidden;
    const double macs = (d * h + h) + ((d + 1.0) * h + h);
    return 2.0 * macs + kSquashFlops;
}

double flops_estimate(const ArchConfig& arch, int seq_len, bool heads_enabled) {
    if (seq_len < 1) throw UsageError("flops_estimate: seq_len must be >= 1");
    const double d = arch.d_model;
    const double hidden = arch.mlp_hidden;
    const double v = arch.vocab;
    double total = 0.0;
    for (int i = 1; i <= seq_len; ++i) {
        const double ctx = i;
        double per_layer = 0.0;
        per_layer += 2.0 * 4.0 * d;            // two rmsnorms
        per_layer += 2.0 * 4.0 * d * d;        // Q,K,V,O projections
        per_layer += 4.0 * ctx * d + 5.0 * ctx;  // score row + mix row + softmax
        per_layer += 2.0 * 2.0 * d * hidden;   // MLP
        total += arch.n_layers * per_layer;
        total += 4.0 * d;        // final rmsnorm
        total += 2.0 * d * v;    // lm head
        if (heads_enabled) total += head_flops_per_token(arch.d_model, arch.head_hidden);
    }
    return total;
}

LatencyReport latency_measure(const std::function<void()>& run,
                              const std::function<void()>& baseline, int repetitions) {
    if (repetitions < 3) throw UsageError("latency_measure: need at least 3 repetitions");
    using Clock = std::chrono::steady_clock;
    auto time_closure = [repetitions](const std::function<void()>& fn) {
        fn();  // warm-up
        const auto start = Clock::now();
        for (int i = 0; i < repetitions; ++i) fn();
        const std::chrono::duration<double> elapsed = Clock::now() - start;
        return elapsed.count() / repetitions;
    };
    LatencyReport report;
    report.baseline_seconds = time_closure(baseline);
    report.run_seconds = time_closure(run);
    report.overhead =
        (report.run_seconds - report.baseline_seconds) / report.baseline_seconds;
    return report;
}

// ---------------------------------------------------------------------------
// toy benchmark
// ---------------------------------------------------------------------------

BenchTask make_bench_task(const std::string& name, const SynthTaskSpec& spec, int prompt_len,
                          int n_problems, std::uint64_t seed) {
    if (prompt_len < 1 || prompt_len >= spec.seq_len) {
        throw UsageError("make_bench_task: prompt_len must lie in [1, seq_len)");
    }
    BenchTask task;
    task.name = name;
    task.spec = spec;
    task.prompt_len = prompt_len;
    const auto sequences = generate_synth_dataset(spec, n_problems, seed);
    for (const auto& seq : sequences) {
        task.prompts.emplace_back(seq.begin(), seq.begin() + prompt_len);
    }
    return task;
}

void save_bench_task(const BenchTask& task, const std::string& path) {
    json doc;
    doc["schema"] = "adk.task.v1";
    doc["name"] = task.name;
    doc["vocab"] = task.spec.vocab;
    doc["seq_len"] = task.spec.seq_len;
    doc["rng_seed"] = task.spec.rng_seed;
    doc["det_token"] = task.spec.det_token;
    doc["answers"] = task.spec.answers;
    doc["prompt_len"] = task.prompt_len;
    doc["prompts"] = task.prompts;
    std::ofstream os(path);
    if (!os) throw FormatError("cannot open for writing: " + path);
    os << doc.dump(2) << "\n";
}

BenchTask load_bench_task(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open: " + path);
    json doc;
    try {
        is >> doc;
    } catch (const json::parse_error& e) {
        throw FormatError("task parse error: " + std::string(e.what()));
    }
    try {
        if (doc.at("schema").get<std::string>() != "adk.task.v1") {
            throw FormatError("unexpected task schema tag");
        }
        BenchTask task;
        task.name = doc.at("name").get<std::string>();
        task.spec.vocab = doc.at("vocab").get<int>();
        task.spec.seq_len = doc.at("seq_len").get<int>();
        task.spec.rng_seed = doc.at("rng_seed").get<std::uint64_t>();
        task.spec.det_token = doc.at("det_token").get<std::vector<int>>();
        task.spec.answers = doc.at("answers").get<std::vector<std::vector<int>>>();
        task.prompt_len = doc.at("prompt_len").get<int>();
        task.prompts = doc.at("prompts").get<std::vector<std::vector<int>>>();
        task.spec.validate();
        return task;
    } catch (const json::exception& e) {
        throw FormatError("task field error: " + std::string(e.what()));
    }
}

bool check_answer(const BenchTask& task, std::span<const int> generated, int first_position) {
    for (std::size_t i = 0; i < generated.size(); ++i) {
        const int pos = first_position + static_cast<int>(i);
        if (pos >= task.spec.seq_len) break;
        if (task.spec.is_deterministic(pos) &&
            generated[i] != task.spec.det_token[static_cast<std::size_t>(pos)]) {
            return false;
        }
    }
    return true;
}

std::vector<BenchmarkResult> run_benchmark(const BenchTask& task, const BackboneParams& backbone,
                                           std::span<const ModeSpec> modes,
                                           const BenchmarkConfig& cfg) {
    std::vector<BenchmarkResult> results;
    if (task.prompts.empty()) {
        for (const ModeSpec& m : modes) results.push_back({task.name, m.label, {}, {}});
        return results;
    }
    const int max_len = task.spec.seq_len - task.prompt_len;
    const CounterRng seed_root(cfg.base_seed);

    for (std::size_t mi = 0; mi < modes.size(); ++mi) {
        const ModeSpec& mode = modes[mi];
        BenchmarkResult res;
        res.task = task.name;
        res.label = mode.label;
        const int per_problem = cfg.n_seeds * cfg.samples_per_seed;
        res.outcomes.assign(task.prompts.size() * static_cast<std::size_t>(per_problem), {});

        std::atomic<std::size_t> next{0};
        const std::size_t total = res.outcomes.size();
        auto worker = [&]() {
            while (true) {
                const std::size_t idx = next.fetch_add(1);
                if (idx >= total) break;
                const int problem = static_cast<int>(idx / static_cast<std::size_t>(per_problem));
                const int within = static_cast<int>(idx % static_cast<std::size_t>(per_problem));
                const int seed_idx = within / cfg.samples_per_seed;
                const int sample_idx = within % cfg.samples_per_seed;
                SampleOutcome& slot = res.outcomes[idx];
                slot.problem = problem;
                slot.seed = seed_idx;
                slot.sample = sample_idx;
                const std::uint64_t gen_seed = seed_root.derive(mi)
                                                   .derive(static_cast<std::uint64_t>(problem))
                                                   .derive(static_cast<std::uint64_t>(seed_idx))
                                                   .derive(static_cast<std::uint64_t>(sample_idx))
                                                   .seed();
                try {
                    const GenerationTrace trace =
                        generate(task.prompts[static_cast<std::size_t>(problem)], backbone,
                                 mode.heads, mode.mode, max_len, /*stop_token=*/-1, gen_seed,
                                 mode.static_t, mode.static_p);
                    slot.correct = check_answer(task, trace.tokens, task.prompt_len);
                } catch (const std::exception&) {
                    slot.correct = false;
                    slot.checker_error = true;
                }
            }
        };

        int n_threads = cfg.threads > 0 ? cfg.threads
                                        : static_cast<int>(std::thread::hardware_concurrency());
        if (n_threads < 1) n_threads = 1;
        if (n_threads == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }
        res.summary = pass_at_1(res.outcomes);
        results.push_back(std::move(res));
    }
    return results;
}

}  // namespace adk
