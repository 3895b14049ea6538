#include "adk/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace adk {

namespace {

std::vector<Tensor*> head_tensor_list(HeadParams& p) {
    return {&p.temp_mlp.w1, &p.temp_mlp.b1, &p.temp_mlp.w2, &p.temp_mlp.b2,
            &p.topp_mlp.w1, &p.topp_mlp.b1, &p.topp_mlp.w2, &p.topp_mlp.b2};
}

std::vector<const std::vector<double>*> head_grad_list(const HeadVars& v) {
    return {&v.temp_w1.grad(), &v.temp_b1.grad(), &v.temp_w2.grad(), &v.temp_b2.grad(),
            &v.topp_w1.grad(), &v.topp_b1.grad(), &v.topp_w2.grad(), &v.topp_b2.grad()};
}

}  // namespace

void TrainConfig::validate() const {
    if (!(lr > 0.0f)) throw UsageError("TrainConfig: lr must be > 0");
    if (steps < 0 || batch_size < 1) throw UsageError("TrainConfig: bad steps/batch_size");
    if (!(easy_mask_fraction >= 0.0f && easy_mask_fraction < 1.0f)) {
        throw UsageError("TrainConfig: easy_mask_fraction must lie in [0,1)");
    }
    SoftMaskConfig{alpha, epsilon}.validate();
}

double ce_loss(const Tensor& p_tilde, int target) {
    if (target < 0 || target >= p_tilde.numel()) {
        throw UsageError("ce_loss: target " + std::to_string(target) + " out of range");
    }
    return -std::log(static_cast<double>(p_tilde[target]) + 1e-12);
}

Var ce_loss(Var p_tilde, int target) {
    return scale(log_op(add_scalar(pick(p_tilde, target), 1e-12)), -1.0);
}

std::vector<char> easy_token_mask(std::span<const TraceRecord> records, float fraction,
                                  CounterRng& rng) {
    if (!(fraction >= 0.0f && fraction < 1.0f)) {
        throw UsageError("easy_token_mask: fraction must lie in [0,1)");
    }
    std::vector<char> keep(records.size(), 1);
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].greedy_match && rng.next_uniform() < static_cast<double>(fraction)) {
            keep[i] = 0;
        }
    }
    return keep;
}

double dft_weight(const Tensor& p_tilde, int target) {
    if (target < 0 || target >= p_tilde.numel()) {
        throw UsageError("dft_weight: target " + std::to_string(target) + " out of range");
    }
    return static_cast<double>(p_tilde[target]);
}

double ranking_hinge_series(std::span<const float> base, std::span<const float> high,
                            std::span<const float> low, float margin) {
    if (base.size() != high.size() || base.size() != low.size()) {
        throw UsageError("ranking_hinge_series: length mismatch");
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i) {
        loss += std::max(0.0, static_cast<double>(margin) -
                                  (static_cast<double>(high[i]) - static_cast<double>(base[i])));
        loss += std::max(0.0, static_cast<double>(margin) -
                                  (static_cast<double>(base[i]) - static_cast<double>(low[i])));
    }
    return loss;
}

Var ranking_hinge_series(std::span<const Var> base, std::span<const Var> high,
                         std::span<const Var> low, float margin) {
    if (base.size() != high.size() || base.size() != low.size()) {
        throw UsageError("ranking_hinge_series: length mismatch");
    }
    if (base.empty()) throw UsageError("ranking_hinge_series: empty series");
    Var total{};
    for (std::size_t i = 0; i < base.size(); ++i) {
        Var up = relu(add_scalar(sub(base[i], high[i]), static_cast<double>(margin)));
        Var down = relu(add_scalar(sub(low[i], base[i]), static_cast<double>(margin)));
        Var term = add(up, down);
        total = (i == 0) ? term : add(total, term);
    }
    return total;
}

double control_ranking_loss(const ParamSeries& base, const ParamSeries& high,
                            const ParamSeries& low, float margin) {
    return ranking_hinge_series(base.t_hat, high.t_hat, low.t_hat, margin) +
           ranking_hinge_series(base.p_hat, high.p_hat, low.p_hat, margin);
}

// ---------------------------------------------------------------------------
// head training
// ---------------------------------------------------------------------------

TrainResult train_heads(const std::vector<TraceRecord>& dataset, const HeadParams& init,
                        const TrainConfig& cfg) {
    cfg.validate();
    if (dataset.empty()) throw UsageError("train_heads: empty dataset");
    for (const TraceRecord& r : dataset) {
        if (static_cast<int>(r.hidden.numel()) != init.d_model) {
            throw UsageError("train_heads: record hidden size does not match heads");
        }
    }

    TrainResult result;
    result.heads = init;
    if (cfg.steps == 0) return result;

    AdamWConfig opt_cfg;
    opt_cfg.lr = cfg.lr;
    opt_cfg.beta1 = cfg.beta1;
    opt_cfg.beta2 = cfg.beta2;
    opt_cfg.weight_decay = cfg.weight_decay;
    AdamW opt(opt_cfg, head_tensor_list(result.heads));

    const SoftMaskConfig mask_cfg{cfg.alpha, cfg.epsilon};
    CounterRng shuffle_rng(CounterRng::mix(cfg.seed ^ 0x50FFULL));
    CounterRng mask_rng(CounterRng::mix(cfg.seed ^ 0xEA57ULL));

    std::vector<int> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<char> keep;

    std::size_t cursor = dataset.size();  // force an epoch boundary on the first step
    int step = 0;
    while (step < cfg.steps) {
        if (cursor >= dataset.size()) {
            // new epoch: reshuffle and redraw the easy-token keep flags
            for (std::size_t i = order.size(); i > 1; --i) {
                std::swap(order[i - 1], order[shuffle_rng.next_below(i)]);
            }
            keep = easy_token_mask(dataset, cfg.easy_mask_fraction, mask_rng);
            cursor = 0;
        }

        std::vector<int> batch;
        while (static_cast<int>(batch.size()) < cfg.batch_size && cursor < dataset.size()) {
            const int idx = order[cursor++];
            if (keep[static_cast<std::size_t>(idx)]) batch.push_back(idx);
        }
        if (batch.empty()) continue;  // the whole chunk was masked out

        int batch_anchor = batch.front();
        try {
            Tape tape;
            HeadVars vars = lift_heads(tape, result.heads);
            Var total{};
            double sum_t = 0.0, sum_p = 0.0;
            for (std::size_t bi = 0; bi < batch.size(); ++bi) {
                const TraceRecord& rec = dataset[static_cast<std::size_t>(batch[bi])];
                batch_anchor = batch[bi];
                Var h = tape.leaf(rec.hidden);
                Var logits = tape.leaf(rec.logits);
                Var t_hat = temp_head_forward(h, vars, result.heads.squash);
                Var p_hat = topp_head_forward(h, t_hat, vars, result.heads.squash);
                Var p_tilde = soft_pipeline(logits, t_hat, p_hat, mask_cfg);
                Var ce = ce_loss(p_tilde, rec.target);
                const double w = cfg.dft_enabled ? dft_weight(p_tilde.value(), rec.target) : 1.0;
                Var contrib = scale(ce, w);
                total = (bi == 0) ? contrib : add(total, contrib);
                sum_t += static_cast<double>(t_hat.value()[0]);
                sum_p += static_cast<double>(p_hat.value()[0]);
            }
            // mean over kept positions, so masking does not rescale the step size
            Var loss = scale(total, 1.0 / static_cast<double>(batch.size()));
            tape.backward(loss);
            opt.step(head_grad_list(vars));
            result.curve.push_back({step, static_cast<double>(loss.value()[0]),
                                    sum_t / static_cast<double>(batch.size()),
                                    sum_p / static_cast<double>(batch.size())});
        } catch (const NumericalError& e) {
            throw NumericalError("train_heads aborted at step " + std::to_string(step) +
                                 " (record " + std::to_string(batch_anchor) + "): " + e.what());
        }
        ++step;
    }
    return result;
}

// ---------------------------------------------------------------------------
// control training
// ---------------------------------------------------------------------------

int control_high_token(int vocab) { return vocab - 2; }
int control_low_token(int vocab) { return vocab - 1; }

std::vector<ControlTriple> make_control_triples(const BackboneParams& backbone,
                                                const std::vector<std::vector<int>>& sequences) {
    std::vector<ControlTriple> triples;
    triples.reserve(sequences.size());
    Tensor hiddens, logits;
    for (const auto& seq : sequences) {
        if (seq.size() < 3) throw UsageError("make_control_triples: sequence too short");
        ControlTriple triple;
        std::vector<int> variant = seq;
        std::span<const int> input(variant.data(), variant.size() - 1);

        backbone_forward(backbone, input, hiddens, logits);
        triple.base_hiddens = hiddens;
        variant[0] = control_high_token(backbone.cfg.vocab);
        backbone_forward(backbone, input, hiddens, logits);
        triple.high_hiddens = hiddens;
        variant[0] = control_low_token(backbone.cfg.vocab);
        backbone_forward(backbone, input, hiddens, logits);
        triple.low_hiddens = hiddens;
        triples.push_back(std::move(triple));
    }
    return triples;
}

ControlTrainResult control_train(const std::vector<ControlTriple>& triples,
                                 const HeadParams& init, const ControlTrainConfig& cfg) {
    if (triples.empty()) throw UsageError("control_train: no triples");
    if (cfg.batch_triples < 1 || cfg.steps < 0) throw UsageError("control_train: bad config");

    ControlTrainResult result;
    result.heads = init;
    if (cfg.steps == 0) return result;

    AdamWConfig opt_cfg;
    opt_cfg.lr = cfg.lr;
    AdamW opt(opt_cfg, head_tensor_list(result.heads));
    CounterRng rng(CounterRng::mix(cfg.seed ^ 0xC0117201ULL));

    const int d = result.heads.d_model;
    auto predict = [&](Tape& tape, const HeadVars& vars, const Tensor& hiddens, int row,
                       Var& t_hat, Var& p_hat) {
        Tensor h({d});
        std::copy_n(hiddens.data() + static_cast<std::size_t>(row) * d, d, h.data());
        Var hv = tape.leaf(std::move(h));
        t_hat = temp_head_forward(hv, vars, result.heads.squash);
        p_hat = topp_head_forward(hv, t_hat, vars, result.heads.squash);
    };

    for (int step = 0; step < cfg.steps; ++step) {
        Tape tape;
        HeadVars vars = lift_heads(tape, result.heads);
        Var total{};
        bool first = true;
        for (int b = 0; b < cfg.batch_triples; ++b) {
            const ControlTriple& triple =
                triples[rng.next_below(static_cast<std::uint64_t>(triples.size()))];
            const int n = triple.base_hiddens.rows();
            std::vector<Var> t_base, t_high, t_low, p_base, p_high, p_low;
            // position 0 carries the command token itself; the heads are
            // trained on every later position
            for (int r = 1; r < n; ++r) {
                Var tb, pb, th, ph, tl, pl;
                predict(tape, vars, triple.base_hiddens, r, tb, pb);
                predict(tape, vars, triple.high_hiddens, r, th, ph);
                predict(tape, vars, triple.low_hiddens, r, tl, pl);
                t_base.push_back(tb);
                t_high.push_back(th);
                t_low.push_back(tl);
                p_base.push_back(pb);
                p_high.push_back(ph);
                p_low.push_back(pl);
            }
            Var loss = add(ranking_hinge_series(t_base, t_high, t_low, cfg.margin),
                           ranking_hinge_series(p_base, p_high, p_low, cfg.margin));
            total = first ? loss : add(total, loss);
            first = false;
        }
        Var batch_loss = scale(total, 1.0 / static_cast<double>(cfg.batch_triples));
        tape.backward(batch_loss);
        opt.step(head_grad_list(vars));
        result.curve.push_back({step, static_cast<double>(batch_loss.value()[0])});
    }
    return result;
}

}  // namespace adk
