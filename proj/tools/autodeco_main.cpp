// Command-line driver: pretrain | train | control-train | sample | eval |
// grid | export. A JSON config file is the source of truth; the flags
// --seed/--mode/--temp/--top-p/--out override single keys. Every run writes a
// resolved-config snapshot beside its outputs so it can be replayed exactly.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "adk/backbone.hpp"
#include "adk/decoding.hpp"
#include "adk/evalkit.hpp"
#include "adk/heads.hpp"
#include "adk/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct FlagOverrides {
    std::optional<std::int64_t> seed;
    std::optional<std::string> mode;
    std::optional<double> temp;
    std::optional<double> top_p;
    std::optional<std::string> out;
};

class Config {
  public:
    Config(const std::string& path, const FlagOverrides& flags, const std::string& command) {
        if (!path.empty()) {
            std::ifstream is(path);
            if (!is) throw adk::UsageError("cannot open config file: " + path);
            try {
                is >> data_;
            } catch (const json::parse_error& e) {
                throw adk::FormatError("config parse error: " + std::string(e.what()));
            }
            if (!data_.is_object()) throw adk::FormatError("config root must be a JSON object");
        } else {
            data_ = json::object();
        }
        if (flags.seed) data_["seed"] = *flags.seed;
        if (flags.mode) data_["mode"] = *flags.mode;
        if (flags.temp) data_["temp"] = *flags.temp;
        if (flags.top_p) data_["top_p"] = *flags.top_p;
        if (flags.out) data_["out"] = *flags.out;
        if (data_.contains("_command")) {
            const std::string recorded = data_["_command"].get<std::string>();
            if (recorded != command) {
                throw adk::UsageError("config snapshot was recorded for subcommand '" + recorded +
                                      "', not '" + command + "'");
            }
        }
        data_["_command"] = command;
    }

    void require_known(const std::set<std::string>& allowed) const {
        for (const auto& [key, value] : data_.items()) {
            (void)value;
            if (key != "_command" && allowed.find(key) == allowed.end()) {
                throw adk::UsageError("unknown config key '" + key + "'");
            }
        }
    }

    bool has(const std::string& key) const { return data_.contains(key); }

    template <typename T>
    T get(const std::string& key, T fallback) {
        if (!data_.contains(key)) {
            data_[key] = fallback;  // resolved defaults land in the snapshot
            return fallback;
        }
        try {
            return data_[key].get<T>();
        } catch (const json::exception&) {
            throw adk::UsageError("config key '" + key + "' has the wrong type");
        }
    }

    template <typename T>
    T require(const std::string& key) {
        if (!data_.contains(key)) {
            throw adk::UsageError("missing required config key '" + key + "'");
        }
        try {
            return data_[key].get<T>();
        } catch (const json::exception&) {
            throw adk::UsageError("config key '" + key + "' has the wrong type");
        }
    }

    std::string out_dir() {
        const std::string out = require<std::string>("out");
        fs::create_directories(out);
        return out;
    }

    void write_snapshot(const std::string& dir) const {
        std::ofstream os(fs::path(dir) / "resolved_config.json");
        if (!os) throw adk::FormatError("cannot write resolved-config snapshot in " + dir);
        os << data_.dump(2) << "\n";
    }

  private:
    json data_;
};

void write_jsonl(const std::string& path, const std::vector<json>& rows) {
    std::ofstream os(path);
    if (!os) throw adk::FormatError("cannot open for writing: " + path);
    for (const json& row : rows) os << row.dump() << "\n";
}

adk::SquashRange squash_from(Config& cfg) {
    adk::SquashRange squash;
    squash.t_min = static_cast<float>(cfg.get<double>("t_min", squash.t_min));
    squash.t_max = static_cast<float>(cfg.get<double>("t_max", squash.t_max));
    squash.p_min = static_cast<float>(cfg.get<double>("p_min", squash.p_min));
    squash.p_max = static_cast<float>(cfg.get<double>("p_max", squash.p_max));
    squash.validate();
    return squash;
}

// ---------------------------------------------------------------------------
// pretrain: synthesize the task, pretrain + freeze the backbone, emit traces
// and the benchmark task file
// ---------------------------------------------------------------------------

int cmd_pretrain(Config& cfg) {
    cfg.require_known({"vocab", "seq_len", "d_model", "n_heads", "n_layers", "mlp_hidden",
                       "answer_set_size", "task_seed", "steps", "batch_size", "lr",
                       "weight_decay", "train_sequences", "val_sequences", "bench_problems",
                       "prompt_len", "seed", "out"});
    adk::BackboneConfig arch;
    arch.vocab = cfg.get<int>("vocab", 128);
    arch.seq_len = cfg.get<int>("seq_len", 64);
    arch.d_model = cfg.get<int>("d_model", 64);
    arch.n_heads = cfg.get<int>("n_heads", 4);
    arch.n_layers = cfg.get<int>("n_layers", 2);
    arch.mlp_hidden = cfg.get<int>("mlp_hidden", 256);

    const int answer_set_size = cfg.get<int>("answer_set_size", 4);
    const std::uint64_t task_seed = cfg.get<std::uint64_t>("task_seed", 1);
    adk::PretrainConfig train;
    train.steps = cfg.get<int>("steps", 300);
    train.batch_size = cfg.get<int>("batch_size", 8);
    train.lr = static_cast<float>(cfg.get<double>("lr", 3e-3));
    train.weight_decay = static_cast<float>(cfg.get<double>("weight_decay", 0.0));
    train.seed = cfg.get<std::uint64_t>("seed", 0);
    const int n_train = cfg.get<int>("train_sequences", 256);
    const int n_val = cfg.get<int>("val_sequences", 64);
    const int bench_problems = cfg.get<int>("bench_problems", 12);
    const int prompt_len = cfg.get<int>("prompt_len", 16);

    const std::string out = cfg.out_dir();
    cfg.write_snapshot(out);

    const adk::SynthTaskSpec task =
        adk::make_alternating_task(arch.vocab, arch.seq_len, answer_set_size, task_seed);
    const auto train_seqs = adk::generate_synth_dataset(task, n_train, train.seed + 11);
    const auto val_seqs = adk::generate_synth_dataset(task, n_val, train.seed + 13);

    adk::PretrainResult result = adk::pretrain_backbone(arch, train_seqs, train);
    adk::save_backbone((fs::path(out) / "backbone.adk1").string(), result.params, &task);

    std::vector<json> curve;
    for (const adk::CurvePoint& p : result.curve) {
        curve.push_back({{"step", p.step}, {"loss", p.loss}});
    }
    write_jsonl((fs::path(out) / "pretrain_loss.jsonl").string(), curve);

    const auto train_records = adk::build_traces(result.params, train_seqs, 0);
    const auto val_records = adk::build_traces(result.params, val_seqs, n_train);
    adk::save_trace_dataset((fs::path(out) / "traces_train.adkt").string(), train_records,
                            arch.d_model, arch.vocab);
    adk::save_trace_dataset((fs::path(out) / "traces_val.adkt").string(), val_records,
                            arch.d_model, arch.vocab);

    const adk::BenchTask bench =
        adk::make_bench_task("synth", task, prompt_len, bench_problems, train.seed + 17);
    adk::save_bench_task(bench, (fs::path(out) / "task.json").string());

    std::cout << "pretrain: " << result.curve.size() << " steps, final loss "
              << (result.curve.empty() ? 0.0 : result.curve.back().loss) << ", "
              << train_records.size() << " train traces, " << val_records.size()
              << " val traces\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train: optimize the heads end-to-end through the soft pipeline
// ---------------------------------------------------------------------------

int cmd_train(Config& cfg) {
    cfg.require_known({"traces", "heads_init", "heads_seed", "d_head", "t_min", "t_max", "p_min",
                       "p_max", "steps", "batch_size", "lr", "weight_decay",
                       "easy_mask_fraction", "dft_enabled", "alpha", "epsilon", "seed", "out"});
    const std::string traces_path = cfg.require<std::string>("traces");
    const auto records = adk::load_trace_dataset(traces_path);
    if (records.empty()) throw adk::UsageError("trace dataset is empty: " + traces_path);
    const int d_model = static_cast<int>(records.front().hidden.numel());

    adk::TrainConfig train;
    train.steps = cfg.get<int>("steps", 400);
    train.batch_size = cfg.get<int>("batch_size", 32);
    train.lr = static_cast<float>(cfg.get<double>("lr", 1e-3));
    train.weight_decay = static_cast<float>(cfg.get<double>("weight_decay", 0.0));
    train.easy_mask_fraction = static_cast<float>(cfg.get<double>("easy_mask_fraction", 0.6));
    train.dft_enabled = cfg.get<bool>("dft_enabled", true);
    train.alpha = static_cast<float>(cfg.get<double>("alpha", 30.0));
    train.epsilon = static_cast<float>(cfg.get<double>("epsilon", 1e-8));
    train.seed = cfg.get<std::uint64_t>("seed", 0);

    adk::HeadParams init;
    if (cfg.has("heads_init")) {
        init = adk::load_heads(cfg.require<std::string>("heads_init"));
        squash_from(cfg);  // resolve defaults into the snapshot
    } else {
        const int d_head = cfg.get<int>("d_head", d_model);
        init = adk::init_heads(d_model, d_head, squash_from(cfg),
                               cfg.get<std::uint64_t>("heads_seed", 0));
    }

    const std::string out = cfg.out_dir();
    cfg.write_snapshot(out);

    adk::TrainResult result = adk::train_heads(records, init, train);
    adk::save_heads((fs::path(out) / "heads.adk1").string(), result.heads);

    std::vector<json> curve;
    for (const adk::TrainCurvePoint& p : result.curve) {
        curve.push_back(
            {{"step", p.step}, {"loss", p.loss}, {"mean_T", p.mean_t}, {"mean_P", p.mean_p}});
    }
    write_jsonl((fs::path(out) / "train_loss.jsonl").string(), curve);

    std::cout << "train: " << result.curve.size() << " steps, final loss "
              << (result.curve.empty() ? 0.0 : result.curve.back().loss) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// control-train: ranking-loss fine-tuning for decoding-control commands
// ---------------------------------------------------------------------------

int cmd_control_train(Config& cfg) {
    cfg.require_known({"backbone", "heads", "n_triples", "steps", "batch_triples", "lr", "margin",
                       "seed", "out"});
    adk::SynthTaskSpec task;
    const adk::BackboneParams backbone =
        adk::load_backbone(cfg.require<std::string>("backbone"), &task);
    if (task.det_token.empty()) {
        throw adk::UsageError("backbone file carries no task; control-train needs it");
    }
    adk::HeadParams heads = adk::load_heads(cfg.require<std::string>("heads"));

    adk::ControlTrainConfig ctrl;
    ctrl.steps = cfg.get<int>("steps", 250);
    ctrl.batch_triples = cfg.get<int>("batch_triples", 4);
    ctrl.lr = static_cast<float>(cfg.get<double>("lr", 2e-3));
    ctrl.margin = static_cast<float>(cfg.get<double>("margin", 0.05));
    ctrl.seed = cfg.get<std::uint64_t>("seed", 0);
    const int n_triples = cfg.get<int>("n_triples", 100);

    const std::string out = cfg.out_dir();
    cfg.write_snapshot(out);

    const auto sequences = adk::generate_synth_dataset(task, n_triples, ctrl.seed + 29);
    const auto triples = adk::make_control_triples(backbone, sequences);
    adk::ControlTrainResult result = adk::control_train(triples, heads, ctrl);
    adk::save_heads((fs::path(out) / "heads_control.adk1").string(), result.heads);

    std::vector<json> curve;
    for (const adk::CurvePoint& p : result.curve) {
        curve.push_back({{"step", p.step}, {"loss", p.loss}});
    }
    write_jsonl((fs::path(out) / "control_loss.jsonl").string(), curve);
    std::cout << "control-train: " << result.curve.size() << " steps, final loss "
              << (result.curve.empty() ? 0.0 : result.curve.back().loss) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// sample: n generations, seeds derived as base + index
// ---------------------------------------------------------------------------

int cmd_sample(Config& cfg) {
    cfg.require_known({"backbone", "heads", "mode", "prompt", "max_len", "stop_token", "n",
                       "temp", "top_p", "seed", "out"});
    const adk::BackboneParams backbone = adk::load_backbone(cfg.require<std::string>("backbone"));
    const adk::DecodeMode mode =
        adk::decode_mode_from_string(cfg.get<std::string>("mode", "default"));

    adk::HeadParams heads;
    bool have_heads = false;
    if (cfg.has("heads")) {
        heads = adk::load_heads(cfg.require<std::string>("heads"));
        have_heads = true;
    }
    if (mode == adk::DecodeMode::autodeco && !have_heads) {
        throw adk::UsageError("mode=autodeco requires the 'heads' key or flag");
    }
    float static_t = 1.0f, static_p = 1.0f;
    if (mode == adk::DecodeMode::static_params) {
        if (!cfg.has("temp") || !cfg.has("top_p")) {
            throw adk::UsageError("mode=static requires --temp and --top-p");
        }
        static_t = static_cast<float>(cfg.require<double>("temp"));
        static_p = static_cast<float>(cfg.require<double>("top_p"));
    }

    const std::vector<int> prompt = cfg.require<std::vector<int>>("prompt");
    const int max_len =
        cfg.get<int>("max_len", backbone.cfg.seq_len - static_cast<int>(prompt.size()));
    const int stop_token = cfg.get<int>("stop_token", -1);
    const int n = cfg.get<int>("n", 1);
    const std::uint64_t base_seed = cfg.get<std::uint64_t>("seed", 0);

    const std::string out = cfg.out_dir();
    cfg.write_snapshot(out);

    for (int i = 0; i < n; ++i) {
        const adk::GenerationTrace trace =
            adk::generate(prompt, backbone, have_heads ? &heads : nullptr, mode, max_len,
                          stop_token, base_seed + static_cast<std::uint64_t>(i), static_t,
                          static_p);
        char name[32];
        std::snprintf(name, sizeof(name), "trace_%03d.json", i);
        adk::export_trace(trace, (fs::path(out) / name).string());
        std::cout << name << " tokens=" << trace.tokens.size() << " mean_T=" << trace.mean_t()
                  << " mean_P=" << trace.mean_p() << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// eval: pass@1 protocol over the benchmark task
// ---------------------------------------------------------------------------

int cmd_eval(Config& cfg) {
    cfg.require_known({"backbone", "task", "heads", "modes", "seeds", "samples_per_seed", "temp",
                       "top_p", "threads", "seed", "out"});
    const adk::BackboneParams backbone = adk::load_backbone(cfg.require<std::string>("backbone"));
    const adk::BenchTask task = adk::load_bench_task(cfg.require<std::string>("task"));

    adk::HeadParams heads;
    bool have_heads = false;
    if (cfg.has("heads")) {
        heads = adk::load_heads(cfg.require<std::string>("heads"));
        have_heads = true;
    }

    std::vector<std::string> mode_names =
        cfg.get<std::vector<std::string>>("modes", {"greedy", "default"});
    adk::BenchmarkConfig bench_cfg;
    bench_cfg.n_seeds = cfg.get<int>("seeds", 8);
    bench_cfg.samples_per_seed = cfg.get<int>("samples_per_seed", 16);
    bench_cfg.base_seed = cfg.get<std::uint64_t>("seed", 0);
    bench_cfg.threads = cfg.get<int>("threads", 0);

    std::vector<adk::ModeSpec> modes;
    for (const std::string& name : mode_names) {
        adk::ModeSpec spec;
        spec.label = name;
        spec.mode = adk::decode_mode_from_string(name);
        if (spec.mode == adk::DecodeMode::autodeco) {
            if (!have_heads) throw adk::UsageError("mode=autodeco requires the 'heads' key");
            spec.heads = &heads;
        }
        if (spec.mode == adk::DecodeMode::static_params) {
            if (!cfg.has("temp") || !cfg.has("top_p")) {
                throw adk::UsageError("mode=static requires --temp and --top-p");
            }
            spec.static_t = static_cast<float>(cfg.require<double>("temp"));
            spec.static_p = static_cast<float>(cfg.require<double>("top_p"));
        }
        modes.push_back(spec);
    }

    const std::string out = cfg.out_dir();
    cfg.write_snapshot(out);

    if (task.prompts.empty()) {
        std::cerr << "warning: task has no problems; writing empty tables\n";
        write_jsonl((fs::path(out) / "results.jsonl").string(), {});
        return 0;
    }

    const auto results = adk::run_benchmark(task, backbone, modes, bench_cfg);
    std::vector<json> rows;
    for (const adk::BenchmarkResult& r : results) {
        for (std::size_t s = 0; s < r.summary.per_seed.size(); ++s) {
            rows.push_back({{"task", r.task},
                            {"mode", r.label},
                            {"seed", static_cast<int>(s)},
                            {"accuracy", r.summary.per_seed[s]}});
        }
        rows.push_back({{"task", r.task},
                        {"mode", r.label},
                        {"type", "summary"},
                        {"mean", r.summary.mean},
                        {"std", r.summary.stddev}});
        std::cout << r.task << " " << r.label << " pass@1 = " << r.summary.mean << " +/- "
                  << r.summary.stddev << "\n";
    }
    write_jsonl((fs::path(out) / "results.jsonl").string(), rows);
    return 0;
}

// ---------------------------------------------------------------------------
// grid: two-stage expert search, temperature first at P = 1.0
// ---------------------------------------------------------------------------

int cmd_grid(Config& cfg) {
    cfg.require_known({"backbone", "task", "t_grid", "p_grid", "samples_per_point", "threads",
                       "seed", "out"});
    const adk::BackboneParams backbone = adk::load_backbone(cfg.require<std::string>("backbone"));
    const adk::BenchTask task = adk::load_bench_task(cfg.require<std::string>("task"));

    std::vector<double> default_grid;
    for (int i = 1; i <= 10; ++i) default_grid.push_back(0.1 * i);
    const std::vector<double> t_grid = cfg.get<std::vector<double>>("t_grid", default_grid);
    const std::vector<double> p_grid = cfg.get<std::vector<double>>("p_grid", default_grid);
    const int samples_per_point = cfg.get<int>("samples_per_point", 8);
    const std::uint64_t seed = cfg.get<std::uint64_t>("seed", 0);
    const int threads = cfg.get<int>("threads", 0);

    const std::string out = cfg.out_dir();
    cfg.write_snapshot(out);

    auto eval_fn = [&](double t, double p) -> double {
        adk::ModeSpec spec;
        spec.label = "static";
        spec.mode = adk::DecodeMode::static_params;
        spec.static_t = static_cast<float>(t);
        spec.static_p = static_cast<float>(p);
        adk::BenchmarkConfig bench_cfg;
        bench_cfg.n_seeds = 1;
        bench_cfg.samples_per_seed = samples_per_point;
        bench_cfg.base_seed = seed;  // shared stream keeps scores comparable across points
        bench_cfg.threads = threads;
        const auto results = adk::run_benchmark(task, backbone, {&spec, 1}, bench_cfg);
        return results.front().summary.mean;
    };

    const adk::GridSearchResult result = adk::grid_search(eval_fn, t_grid, p_grid);

    json doc;
    doc["stage1"] = json::array();
    for (const adk::GridPoint& p : result.stage1) {
        doc["stage1"].push_back({{"t", p.value}, {"score", p.score}});
    }
    doc["stage2"] = json::array();
    for (const adk::GridPoint& p : result.stage2) {
        doc["stage2"].push_back({{"p", p.value}, {"score", p.score}});
    }
    doc["chosen_t"] = result.chosen_t;
    doc["chosen_p"] = result.chosen_p;
    doc["best_score"] = result.best_score;
    std::ofstream os(fs::path(out) / "grid.json");
    if (!os) throw adk::FormatError("cannot write grid.json in " + out);
    os << doc.dump(2) << "\n";

    std::cout << "stage 1 (P = 1.0):\n";
    for (const adk::GridPoint& p : result.stage1) {
        std::cout << "  T=" << p.value << " score=" << p.score << "\n";
    }
    std::cout << "stage 2 (T = " << result.chosen_t << "):\n";
    for (const adk::GridPoint& p : result.stage2) {
        std::cout << "  P=" << p.value << " score=" << p.score << "\n";
    }
    std::cout << "chosen (T*, P*) = (" << result.chosen_t << ", " << result.chosen_p
              << "), best score " << result.best_score << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// export: flatten traces into JSON lines for offline plotting
// ---------------------------------------------------------------------------

int cmd_export(Config& cfg) {
    cfg.require_known({"input", "seed", "out"});
    const std::string input = cfg.require<std::string>("input");
    const std::string out = cfg.out_dir();
    cfg.write_snapshot(out);

    std::ifstream probe(input, std::ios::binary);
    if (!probe) throw adk::FormatError("cannot open: " + input);
    char magic[4] = {0, 0, 0, 0};
    probe.read(magic, 4);
    probe.close();

    std::vector<json> rows;
    if (std::string(magic, 4) == "ADKT") {
        const auto records = adk::load_trace_dataset(input);
        for (const adk::TraceRecord& r : records) {
            rows.push_back({{"sequence_id", r.sequence_id},
                            {"position", r.position},
                            {"target", r.target},
                            {"greedy_match", r.greedy_match}});
        }
    } else {
        const adk::GenerationTrace trace = adk::import_trace(input);
        for (std::size_t i = 0; i < trace.tokens.size(); ++i) {
            rows.push_back({{"step", static_cast<int>(i)},
                            {"token", trace.tokens[i]},
                            {"t_hat", static_cast<double>(trace.params[i].t_hat)},
                            {"p_hat", static_cast<double>(trace.params[i].p_hat)},
                            {"source", adk::to_string(trace.params[i].source)},
                            {"logprob", static_cast<double>(trace.logprobs[i])}});
        }
    }
    write_jsonl((fs::path(out) / "exported.jsonl").string(), rows);
    std::cout << "export: " << rows.size() << " rows\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"learned per-token temperature / top-p decoding toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    FlagOverrides flags;
    std::int64_t seed_flag = 0;
    std::string mode_flag, out_flag;
    double temp_flag = 0.0, top_p_flag = 0.0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--seed", seed_flag, "base RNG seed");
        sub->add_option("--mode", mode_flag, "greedy|default|static|autodeco");
        sub->add_option("--temp", temp_flag, "static temperature");
        sub->add_option("--top-p", top_p_flag, "static top-p");
        sub->add_option("--out", out_flag, "output directory");
    };

    CLI::App* pretrain = app.add_subcommand("pretrain", "pretrain and freeze the toy backbone");
    CLI::App* train = app.add_subcommand("train", "train the decoding heads on traces");
    CLI::App* control =
        app.add_subcommand("control-train", "ranking-loss fine-tuning for control commands");
    CLI::App* sample = app.add_subcommand("sample", "generate traces");
    CLI::App* eval = app.add_subcommand("eval", "run the pass@1 protocol");
    CLI::App* grid = app.add_subcommand("grid", "two-stage static (T, P) search");
    CLI::App* exp = app.add_subcommand("export", "flatten traces to JSON lines");
    for (CLI::App* sub : {pretrain, train, control, sample, eval, grid, exp}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        if (sub->count("--seed") > 0) flags.seed = seed_flag;
        if (sub->count("--mode") > 0) flags.mode = mode_flag;
        if (sub->count("--temp") > 0) flags.temp = temp_flag;
        if (sub->count("--top-p") > 0) flags.top_p = top_p_flag;
        if (sub->count("--out") > 0) flags.out = out_flag;
        Config cfg(config_path, flags, sub->get_name());
        if (sub == pretrain) return cmd_pretrain(cfg);
        if (sub == train) return cmd_train(cfg);
        if (sub == control) return cmd_control_train(cfg);
        if (sub == sample) return cmd_sample(cfg);
        if (sub == eval) return cmd_eval(cfg);
        if (sub == grid) return cmd_grid(cfg);
        if (sub == exp) return cmd_export(cfg);
        throw adk::UsageError("unhandled subcommand");
    } catch (const adk::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const adk::DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return 1;
    } catch (const adk::FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 2;
    } catch (const adk::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
