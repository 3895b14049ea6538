#include "adk/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "adk/ops.hpp"
#include "adk/optim.hpp"
#include "adk/rng.hpp"

namespace adk {

namespace {

constexpr double kRmsEps = 1e-5;
constexpr int kReservedIds = 8;  // top vocabulary ids, used as control markers

Tensor uniform_tensor(std::vector<int> shape, double bound, CounterRng& rng) {
    Tensor t(std::move(shape));
    for (std::int64_t i = 0; i < t.numel(); ++i) {
        t[i] = static_cast<float>(rng.next_uniform(-bound, bound));
    }
    return t;
}

void rmsnorm_rows_plain(const Tensor& x, Tensor& out) {
    const int n = x.rows(), d = x.cols();
    for (int r = 0; r < n; ++r) {
        double ms = 0.0;
        for (int c = 0; c < d; ++c) ms += static_cast<double>(x.at(r, c)) * x.at(r, c);
        const double inv = 1.0 / std::sqrt(ms / d + kRmsEps);
        for (int c = 0; c < d; ++c) out.at(r, c) = static_cast<float>(x.at(r, c) * inv);
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// synthetic task
// ---------------------------------------------------------------------------

void SynthTaskSpec::validate() const {
    if (vocab < 2) throw UsageError("SynthTaskSpec: vocab must be >= 2");
    if (seq_len < 2) throw UsageError("SynthTaskSpec: seq_len must be >= 2");
    if (static_cast<int>(det_token.size()) != seq_len ||
        static_cast<int>(answers.size()) != seq_len) {
        throw UsageError("SynthTaskSpec: position tables must cover [0, seq_len)");
    }
    for (int p = 0; p < seq_len; ++p) {
        const bool det = det_token[static_cast<std::size_t>(p)] >= 0;
        const bool stoch = !answers[static_cast<std::size_t>(p)].empty();
        if (det == stoch) {
            throw UsageError("SynthTaskSpec: position " + std::to_string(p) +
                             " must be exactly one of deterministic or stochastic");
        }
        if (det && det_token[static_cast<std::size_t>(p)] >= vocab) {
            throw UsageError("SynthTaskSpec: deterministic token out of vocabulary");
        }
        if (stoch) {
            const auto& set = answers[static_cast<std::size_t>(p)];
            if (static_cast<int>(set.size()) < 2 || static_cast<int>(set.size()) > vocab) {
                throw UsageError("SynthTaskSpec: answer set size must be in [2, vocab]");
            }
            for (int a : set) {
                if (a < 0 || a >= vocab) throw UsageError("SynthTaskSpec: answer out of vocabulary");
            }
        }
    }
}

SynthTaskSpec make_alternating_task(int vocab, int seq_len, int answer_set_size,
                                    std::uint64_t seed) {
    if (vocab <= kReservedIds + answer_set_size) {
        throw UsageError("make_alternating_task: vocabulary too small");
    }
    SynthTaskSpec spec;
    spec.vocab = vocab;
    spec.seq_len = seq_len;
    spec.rng_seed = seed;
    spec.det_token.assign(static_cast<std::size_t>(seq_len), -1);
    spec.answers.assign(static_cast<std::size_t>(seq_len), {});
    const int usable = vocab - kReservedIds;
    CounterRng rng(CounterRng::mix(seed ^ 0xA5A5A5A5ULL));
    for (int p = 0; p < seq_len; ++p) {
        if (p % 2 == 0) {
            spec.det_token[static_cast<std::size_t>(p)] =
                static_cast<int>(rng.next_below(static_cast<std::uint64_t>(usable)));
        } else {
            std::set<int> chosen;
            while (static_cast<int>(chosen.size()) < answer_set_size) {
                chosen.insert(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(usable))));
            }
            spec.answers[static_cast<std::size_t>(p)].assign(chosen.begin(), chosen.end());
        }
    }
    spec.validate();
    return spec;
}

std::vector<std::vector<int>> generate_synth_dataset(const SynthTaskSpec& spec, int n_sequences,
                                                     std::uint64_t seed) {
    spec.validate();
    std::vector<std::vector<int>> out;
    out.reserve(static_cast<std::size_t>(n_sequences));
    CounterRng base(seed);
    for (int s = 0; s < n_sequences; ++s) {
        CounterRng rng = base.derive(static_cast<std::uint64_t>(s));
        std::vector<int> seq(static_cast<std::size_t>(spec.seq_len));
        for (int p = 0; p < spec.seq_len; ++p) {
            if (spec.is_deterministic(p)) {
                seq[static_cast<std::size_t>(p)] = spec.det_token[static_cast<std::size_t>(p)];
            } else {
                const auto& set = spec.answers[static_cast<std::size_t>(p)];
                seq[static_cast<std::size_t>(p)] =
                    set[rng.next_below(static_cast<std::uint64_t>(set.size()))];
            }
        }
        out.push_back(std::move(seq));
    }
    return out;
}

// ---------------------------------------------------------------------------
// parameters
// ---------------------------------------------------------------------------

void BackboneConfig::validate() const {
    if (vocab < 2 || seq_len < 2 || d_model < 1 || n_heads < 1 || n_layers < 1 || mlp_hidden < 1) {
        throw UsageError("BackboneConfig: all dims must be positive");
    }
    if (d_model % n_heads != 0) throw UsageError("BackboneConfig: d_model must divide by n_heads");
}

std::vector<Tensor*> BackboneParams::tensors() {
    std::vector<Tensor*> out{&tok_emb, &pos_emb};
    for (Layer& l : layers) {
        out.insert(out.end(), {&l.wq, &l.wk, &l.wv, &l.wo, &l.w1, &l.b1, &l.w2, &l.b2});
    }
    out.push_back(&lm_head);
    return out;
}

std::vector<const Tensor*> BackboneParams::tensors() const {
    auto mutable_list = const_cast<BackboneParams*>(this)->tensors();
    return {mutable_list.begin(), mutable_list.end()};
}

std::uint64_t BackboneParams::checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const Tensor* t : tensors()) h = bytes_checksum(*t, h);
    return h;
}

BackboneParams init_backbone(const BackboneConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    CounterRng rng(CounterRng::mix(seed ^ 0xBACB0423ULL));
    BackboneParams p;
    p.cfg = cfg;
    p.tok_emb = uniform_tensor({cfg.vocab, cfg.d_model}, 0.08, rng);
    p.pos_emb = uniform_tensor({cfg.seq_len, cfg.d_model}, 0.08, rng);
    const double wb = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));
    const double hb = 1.0 / std::sqrt(static_cast<double>(cfg.mlp_hidden));
    for (int l = 0; l < cfg.n_layers; ++l) {
        BackboneParams::Layer layer;
        layer.wq = uniform_tensor({cfg.d_model, cfg.d_model}, wb, rng);
        layer.wk = uniform_tensor({cfg.d_model, cfg.d_model}, wb, rng);
        layer.wv = uniform_tensor({cfg.d_model, cfg.d_model}, wb, rng);
        layer.wo = uniform_tensor({cfg.d_model, cfg.d_model}, wb, rng);
        layer.w1 = uniform_tensor({cfg.mlp_hidden, cfg.d_model}, wb, rng);
        layer.b1 = Tensor({cfg.mlp_hidden});
        layer.w2 = uniform_tensor({cfg.d_model, cfg.mlp_hidden}, hb, rng);
        layer.b2 = Tensor({cfg.d_model});
        p.layers.push_back(std::move(layer));
    }
    p.lm_head = uniform_tensor({cfg.vocab, cfg.d_model}, wb, rng);
    return p;
}

// ---------------------------------------------------------------------------
// plain forward
// ---------------------------------------------------------------------------

void backbone_forward(const BackboneParams& params, std::span<const int> tokens, Tensor& hiddens,
                      Tensor& logits) {
    const BackboneConfig& cfg = params.cfg;
    const int n = static_cast<int>(tokens.size());
    if (n < 1) throw UsageError("backbone_forward: empty token sequence");
    if (n > cfg.seq_len) throw UsageError("backbone_forward: sequence exceeds positional table");
    for (int t : tokens) {
        if (t < 0 || t >= cfg.vocab) {
            throw UsageError("backbone_forward: token id " + std::to_string(t) +
                             " out of range [0, " + std::to_string(cfg.vocab) + ")");
        }
    }
    const int d = cfg.d_model;
    const int dh = d / cfg.n_heads;

    Tensor x({n, d});
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < d; ++c) {
            x.at(r, c) = params.tok_emb.at(tokens[static_cast<std::size_t>(r)], c) +
                         params.pos_emb.at(r, c);
        }
    }

    Tensor xn({n, d});
    for (const BackboneParams::Layer& layer : params.layers) {
        rmsnorm_rows_plain(x, xn);
        Tensor q({n, d}), k({n, d}), v({n, d});
        q.mat().noalias() = xn.mat() * layer.wq.mat().transpose();
        k.mat().noalias() = xn.mat() * layer.wk.mat().transpose();
        v.mat().noalias() = xn.mat() * layer.wv.mat().transpose();

        Tensor mix({n, d});
        const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
        std::vector<double> weights(static_cast<std::size_t>(n));
        for (int h = 0; h < cfg.n_heads; ++h) {
            const int off = h * dh;
            for (int r = 0; r < n; ++r) {
                double mx = -std::numeric_limits<double>::infinity();
                for (int c = 0; c <= r; ++c) {
                    double s = 0.0;
                    for (int e = 0; e < dh; ++e) {
                        s += static_cast<double>(q.at(r, off + e)) * k.at(c, off + e);
                    }
                    weights[static_cast<std::size_t>(c)] = s * inv_scale;
                    mx = std::max(mx, weights[static_cast<std::size_t>(c)]);
                }
                double denom = 0.0;
                for (int c = 0; c <= r; ++c) {
                    weights[static_cast<std::size_t>(c)] =
                        std::exp(weights[static_cast<std::size_t>(c)] - mx);
                    denom += weights[static_cast<std::size_t>(c)];
                }
                for (int e = 0; e < dh; ++e) {
                    double acc = 0.0;
                    for (int c = 0; c <= r; ++c) {
                        acc += weights[static_cast<std::size_t>(c)] / denom *
                               static_cast<double>(v.at(c, off + e));
                    }
                    mix.at(r, off + e) = static_cast<float>(acc);
                }
            }
        }
        x.mat().noalias() += mix.mat() * layer.wo.mat().transpose();

        rmsnorm_rows_plain(x, xn);
        Tensor z({n, cfg.mlp_hidden});
        z.mat().noalias() = xn.mat() * layer.w1.mat().transpose();
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < cfg.mlp_hidden; ++c) {
                z.at(r, c) = std::max(0.0f, z.at(r, c) + layer.b1[c]);
            }
        }
        Tensor mlp_out({n, d});
        mlp_out.mat().noalias() = z.mat() * layer.w2.mat().transpose();
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < d; ++c) x.at(r, c) += mlp_out.at(r, c) + layer.b2[c];
        }
    }

    hiddens = Tensor({n, d});
    rmsnorm_rows_plain(x, hiddens);
    logits = Tensor({n, cfg.vocab});
    logits.mat().noalias() = hiddens.mat() * params.lm_head.mat().transpose();
}

// ---------------------------------------------------------------------------
// recorded forward
// ---------------------------------------------------------------------------

BackboneVars lift_backbone(Tape& tape, const BackboneParams& params) {
    BackboneVars v;
    v.tok_emb = tape.leaf(params.tok_emb);
    v.pos_emb = tape.leaf(params.pos_emb);
    for (const BackboneParams::Layer& l : params.layers) {
        BackboneVars::Layer lv;
        lv.wq = tape.leaf(l.wq);
        lv.wk = tape.leaf(l.wk);
        lv.wv = tape.leaf(l.wv);
        lv.wo = tape.leaf(l.wo);
        lv.w1 = tape.leaf(l.w1);
        lv.b1 = tape.leaf(l.b1);
        lv.w2 = tape.leaf(l.w2);
        lv.b2 = tape.leaf(l.b2);
        v.layers.push_back(lv);
    }
    v.lm_head = tape.leaf(params.lm_head);
    return v;
}

Var backbone_forward(const BackboneVars& vars, const BackboneConfig& cfg,
                     std::span<const int> tokens) {
    const int n = static_cast<int>(tokens.size());
    if (n < 1 || n > cfg.seq_len) throw UsageError("backbone_forward: bad sequence length");
    std::vector<int> tok_ids(tokens.begin(), tokens.end());
    std::vector<int> pos_ids(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pos_ids[static_cast<std::size_t>(i)] = i;

    Var x = add(rows_embed(vars.tok_emb, tok_ids), rows_embed(vars.pos_emb, pos_ids));
    const int dh = cfg.d_model / cfg.n_heads;

    for (const BackboneVars::Layer& l : vars.layers) {
        Var xn = rmsnorm_rows(x, kRmsEps);
        Var q = matmul(xn, transpose(l.wq));
        Var k = matmul(xn, transpose(l.wk));
        Var v = matmul(xn, transpose(l.wv));
        std::vector<Var> heads;
        for (int h = 0; h < cfg.n_heads; ++h) {
            Var qh = slice_cols(q, h * dh, dh);
            Var kh = slice_cols(k, h * dh, dh);
            Var vh = slice_cols(v, h * dh, dh);
            Var att = causal_softmax_rows(scale(matmul(qh, transpose(kh)),
                                                1.0 / std::sqrt(static_cast<double>(dh))));
            heads.push_back(matmul(att, vh));
        }
        x = add(x, matmul(concat_cols(heads), transpose(l.wo)));

        Var xn2 = rmsnorm_rows(x, kRmsEps);
        Var z = relu(add_row_bias(matmul(xn2, transpose(l.w1)), l.b1));
        x = add(x, add_row_bias(matmul(z, transpose(l.w2)), l.b2));
    }
    Var hidden = rmsnorm_rows(x, kRmsEps);
    return matmul(hidden, transpose(vars.lm_head));
}

// ---------------------------------------------------------------------------
// pretraining
// ---------------------------------------------------------------------------

PretrainResult pretrain_backbone(const BackboneConfig& cfg,
                                 const std::vector<std::vector<int>>& sequences,
                                 const PretrainConfig& train) {
    cfg.validate();
    if (sequences.empty()) throw UsageError("pretrain_backbone: empty dataset");
    for (const auto& s : sequences) {
        if (static_cast<int>(s.size()) < 2 || static_cast<int>(s.size()) > cfg.seq_len) {
            throw UsageError("pretrain_backbone: sequence length out of range");
        }
    }

    PretrainResult result;
    result.params = init_backbone(cfg, train.seed);
    AdamWConfig opt_cfg;
    opt_cfg.lr = train.lr;
    opt_cfg.weight_decay = train.weight_decay;
    AdamW opt(opt_cfg, result.params.tensors());

    CounterRng rng(CounterRng::mix(train.seed ^ 0x9E1409ULL));
    for (int step = 0; step < train.steps; ++step) {
        try {
            Tape tape;
            BackboneVars vars = lift_backbone(tape, result.params);
            Var total{};
            for (int b = 0; b < train.batch_size; ++b) {
                const auto& seq =
                    sequences[rng.next_below(static_cast<std::uint64_t>(sequences.size()))];
                std::span<const int> input(seq.data(), seq.size() - 1);
                std::vector<int> targets(seq.begin() + 1, seq.end());
                Var loss = softmax_ce_mean(backbone_forward(vars, cfg, input),
                                           std::move(targets));
                total = b == 0 ? loss : add(total, loss);
            }
            Var batch_loss = scale(total, 1.0 / train.batch_size);
            tape.backward(batch_loss);

            std::vector<const std::vector<double>*> grads;
            const Var* leaves[] = {&vars.tok_emb, &vars.pos_emb};
            for (const Var* v : leaves) grads.push_back(&v->grad());
            for (const auto& l : vars.layers) {
                for (const Var* v : {&l.wq, &l.wk, &l.wv, &l.wo, &l.w1, &l.b1, &l.w2, &l.b2}) {
                    grads.push_back(&v->grad());
                }
            }
            grads.push_back(&vars.lm_head.grad());
            opt.step(grads);
            result.curve.push_back({step, static_cast<double>(batch_loss.value()[0])});
        } catch (const NumericalError& e) {
            throw NumericalError("pretrain_backbone diverged at step " + std::to_string(step) +
                                 ": " + e.what());
        }
    }
    result.params.frozen = true;
    return result;
}

// ---------------------------------------------------------------------------
// trace records
// ---------------------------------------------------------------------------

std::vector<TraceRecord> build_traces(const BackboneParams& params,
                                      const std::vector<std::vector<int>>& sequences,
                                      int first_sequence_id) {
    std::vector<TraceRecord> records;
    Tensor hiddens, logits;
    for (std::size_t s = 0; s < sequences.size(); ++s) {
        const auto& seq = sequences[s];
        if (seq.size() < 2) continue;
        std::span<const int> input(seq.data(), seq.size() - 1);
        backbone_forward(params, input, hiddens, logits);
        const int n = hiddens.rows();
        for (int t = 0; t < n; ++t) {
            TraceRecord rec;
            rec.hidden = Tensor({hiddens.cols()});
            std::copy_n(hiddens.data() + static_cast<std::size_t>(t) * hiddens.cols(),
                        hiddens.cols(), rec.hidden.data());
            rec.logits = Tensor({logits.cols()});
            std::copy_n(logits.data() + static_cast<std::size_t>(t) * logits.cols(), logits.cols(),
                        rec.logits.data());
            rec.target = seq[static_cast<std::size_t>(t) + 1];
            rec.greedy_match = argmax(rec.logits) == rec.target;
            rec.position = t + 1;
            rec.sequence_id = first_sequence_id + static_cast<int>(s);
            records.push_back(std::move(rec));
        }
    }
    return records;
}

void save_backbone(const std::string& path, const BackboneParams& params,
                   const SynthTaskSpec* task) {
    std::vector<Tensor> list;
    for (const Tensor* t : params.tensors()) list.push_back(*t);
    save_tensor_container(path, list);

    nlohmann::json sidecar;
    sidecar["format"] = "adk.backbone.v1";
    sidecar["cfg"] = {{"vocab", params.cfg.vocab},         {"seq_len", params.cfg.seq_len},
                      {"d_model", params.cfg.d_model},     {"n_heads", params.cfg.n_heads},
                      {"n_layers", params.cfg.n_layers},   {"mlp_hidden", params.cfg.mlp_hidden}};
    sidecar["frozen"] = params.frozen;
    sidecar["checksum"] = params.checksum();
    if (task != nullptr) {
        sidecar["task"] = {{"vocab", task->vocab},
                           {"seq_len", task->seq_len},
                           {"rng_seed", task->rng_seed},
                           {"det_token", task->det_token},
                           {"answers", task->answers}};
    }
    std::ofstream os(path + ".json");
    if (!os) throw FormatError("cannot open for writing: " + path + ".json");
    os << sidecar.dump(2) << "\n";
}

BackboneParams load_backbone(const std::string& path, SynthTaskSpec* task_out) {
    std::ifstream is(path + ".json");
    if (!is) throw FormatError("missing backbone sidecar: " + path + ".json");
    nlohmann::json sidecar;
    try {
        is >> sidecar;
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("backbone sidecar parse error: " + std::string(e.what()));
    }
    if (sidecar.value("format", "") != "adk.backbone.v1") {
        throw FormatError("backbone sidecar has unexpected format tag");
    }
    BackboneConfig cfg;
    const auto& jc = sidecar.at("cfg");
    cfg.vocab = jc.at("vocab").get<int>();
    cfg.seq_len = jc.at("seq_len").get<int>();
    cfg.d_model = jc.at("d_model").get<int>();
    cfg.n_heads = jc.at("n_heads").get<int>();
    cfg.n_layers = jc.at("n_layers").get<int>();
    cfg.mlp_hidden = jc.at("mlp_hidden").get<int>();
    cfg.validate();

    BackboneParams params = init_backbone(cfg, 0);
    std::vector<Tensor> list = load_tensor_container(path);
    std::vector<Tensor*> slots = params.tensors();
    if (list.size() != slots.size()) {
        throw FormatError("backbone container holds " + std::to_string(list.size()) +
                          " tensors, expected " + std::to_string(slots.size()));
    }
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (!slots[i]->same_shape(list[i])) {
            throw FormatError("backbone tensor " + std::to_string(i) + " has shape " +
                              shape_to_string(list[i].shape()) + ", expected " +
                              shape_to_string(slots[i]->shape()));
        }
        *slots[i] = std::move(list[i]);
    }
    params.frozen = sidecar.value("frozen", false);
    const std::uint64_t want = sidecar.value("checksum", params.checksum());
    if (want != params.checksum()) {
        throw FormatError("backbone checksum mismatch; file corrupted?");
    }
    if (task_out != nullptr && sidecar.contains("task")) {
        const auto& jt = sidecar.at("task");
        task_out->vocab = jt.at("vocab").get<int>();
        task_out->seq_len = jt.at("seq_len").get<int>();
        task_out->rng_seed = jt.at("rng_seed").get<std::uint64_t>();
        task_out->det_token = jt.at("det_token").get<std::vector<int>>();
        task_out->answers = jt.at("answers").get<std::vector<std::vector<int>>>();
        task_out->validate();
    }
    return params;
}

namespace {

constexpr char kTraceMagic[4] = {'A', 'D', 'K', 'T'};

void put_u32le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32le(std::istream& is, std::int64_t& offset) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (is.gcount() != 4) throw FormatError("trace dataset: truncated u32", offset);
    offset += 4;
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_trace_dataset(const std::string& path, const std::vector<TraceRecord>& records,
                        int d_model, int vocab) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open for writing: " + path);
    os.write(kTraceMagic, 4);
    put_u32le(os, static_cast<std::uint32_t>(records.size()));
    put_u32le(os, static_cast<std::uint32_t>(d_model));
    put_u32le(os, static_cast<std::uint32_t>(vocab));
    for (const TraceRecord& r : records) {
        if (static_cast<int>(r.hidden.numel()) != d_model ||
            static_cast<int>(r.logits.numel()) != vocab) {
            throw UsageError("save_trace_dataset: record dims disagree with header");
        }
        put_u32le(os, static_cast<std::uint32_t>(r.sequence_id));
        put_u32le(os, static_cast<std::uint32_t>(r.position));
        put_u32le(os, static_cast<std::uint32_t>(r.target));
        const unsigned char flag = r.greedy_match ? 1 : 0;
        os.write(reinterpret_cast<const char*>(&flag), 1);
        os.write(reinterpret_cast<const char*>(r.hidden.data()),
                 static_cast<std::streamsize>(d_model) * 4);
        os.write(reinterpret_cast<const char*>(r.logits.data()),
                 static_cast<std::streamsize>(vocab) * 4);
    }
    if (!os) throw FormatError("write failed: " + path);
}

std::vector<TraceRecord> load_trace_dataset(const std::string& path, TraceLoadReport* report) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open: " + path);
    is.seekg(0, std::ios::end);
    const std::int64_t file_size = is.tellg();
    is.seekg(0, std::ios::beg);
    if (file_size == 0) return {};  // empty file, empty dataset

    std::int64_t offset = 0;
    char magic[4];
    is.read(magic, 4);
    if (is.gcount() != 4 || std::memcmp(magic, kTraceMagic, 4) != 0) {
        throw FormatError("trace dataset: bad magic bytes, expected ADKT", 0);
    }
    offset += 4;
    const std::uint32_t count = read_u32le(is, offset);
    const std::uint32_t d_model = read_u32le(is, offset);
    const std::uint32_t vocab = read_u32le(is, offset);
    if (d_model == 0 || vocab == 0 || d_model > (1u << 20) || vocab > (1u << 24)) {
        throw FormatError("trace dataset: implausible dims", 8);
    }

    std::vector<TraceRecord> records;
    records.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::int64_t record_offset = offset;
        TraceRecord r;
        r.sequence_id = static_cast<int>(read_u32le(is, offset));
        r.position = static_cast<int>(read_u32le(is, offset));
        r.target = static_cast<int>(read_u32le(is, offset));
        unsigned char flag = 0;
        is.read(reinterpret_cast<char*>(&flag), 1);
        if (is.gcount() != 1) throw FormatError("trace dataset: truncated record", offset);
        offset += 1;
        r.greedy_match = flag != 0;
        r.hidden = Tensor({static_cast<int>(d_model)});
        is.read(reinterpret_cast<char*>(r.hidden.data()),
                static_cast<std::streamsize>(d_model) * 4);
        if (is.gcount() != static_cast<std::streamsize>(d_model) * 4) {
            throw FormatError("trace dataset: truncated hidden payload", offset);
        }
        offset += static_cast<std::int64_t>(d_model) * 4;
        r.logits = Tensor({static_cast<int>(vocab)});
        is.read(reinterpret_cast<char*>(r.logits.data()), static_cast<std::streamsize>(vocab) * 4);
        if (is.gcount() != static_cast<std::streamsize>(vocab) * 4) {
            throw FormatError("trace dataset: truncated logits payload", offset);
        }
        offset += static_cast<std::int64_t>(vocab) * 4;

        if (static_cast<std::uint32_t>(r.target) >= vocab) {
            throw FormatError("trace dataset: target out of vocabulary", record_offset);
        }
        // Corruption inside the float payload is reported, never fatal.
        bool suspicious = !r.hidden.all_finite() || !r.logits.all_finite();
        if (!suspicious && (argmax(r.logits) == r.target) != r.greedy_match) suspicious = true;
        if (suspicious && report != nullptr) {
            report->flagged_records.push_back(static_cast<int>(i));
            report->flagged_offsets.push_back(record_offset);
        }
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace adk
