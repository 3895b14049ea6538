#include "adk/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "adk/ops.hpp"
#include "adk/softpipe.hpp"

namespace adk {

namespace {

using nlohmann::json;

int sample_from(const Tensor& dist, CounterRng& rng) {
    const double u = rng.next_uniform();
    double cum = 0.0;
    int last_positive = -1;
    for (std::int64_t i = 0; i < dist.numel(); ++i) {
        const double p = static_cast<double>(dist[i]);
        if (p <= 0.0) continue;
        last_positive = static_cast<int>(i);
        cum += p;
        if (u < cum) return static_cast<int>(i);
    }
    if (last_positive < 0) throw NumericalError("sample_from: no positive mass");
    return last_positive;  // u landed in the f32 rounding slack at the top
}

}  // namespace

std::string to_string(DecodeMode mode) {
    switch (mode) {
        case DecodeMode::greedy: return "greedy";
        case DecodeMode::default_sampling: return "default";
        case DecodeMode::static_params: return "static";
        case DecodeMode::autodeco: return "autodeco";
    }
    throw UsageError("unknown decode mode");
}

DecodeMode decode_mode_from_string(const std::string& name) {
    if (name == "greedy") return DecodeMode::greedy;
    if (name == "default") return DecodeMode::default_sampling;
    if (name == "static") return DecodeMode::static_params;
    if (name == "autodeco") return DecodeMode::autodeco;
    throw UsageError("unknown decode mode '" + name + "'");
}

std::string to_string(DecodingParams::Source source) {
    switch (source) {
        case DecodingParams::Source::predicted: return "predicted";
        case DecodingParams::Source::static_override: return "static";
        case DecodingParams::Source::greedy: return "greedy";
        case DecodingParams::Source::default_sampling: return "default";
    }
    throw UsageError("unknown decoding-params source");
}

DecodingParams::Source source_from_string(const std::string& name) {
    if (name == "predicted") return DecodingParams::Source::predicted;
    if (name == "static") return DecodingParams::Source::static_override;
    if (name == "greedy") return DecodingParams::Source::greedy;
    if (name == "default") return DecodingParams::Source::default_sampling;
    throw UsageError("unknown decoding-params source '" + name + "'");
}

StepResult decode_step(const Tensor& hidden, const Tensor& logits, const HeadParams* heads,
                       DecodeMode mode, float static_t, float static_p, CounterRng& rng) {
    if (logits.numel() < 1) throw UsageError("decode_step: empty logits");
    StepResult out;
    switch (mode) {
        case DecodeMode::greedy: {
            out.token = argmax(logits);
            out.params = {0.0f, 1.0f, DecodingParams::Source::greedy};
            out.logprob = 0.0f;  // the realized distribution is one-hot
            return out;
        }
        case DecodeMode::default_sampling: {
            const Tensor dist = stable_softmax(logits);
            out.token = sample_from(dist, rng);
            out.params = {1.0f, 1.0f, DecodingParams::Source::default_sampling};
            out.logprob = static_cast<float>(std::log(static_cast<double>(dist[out.token])));
            return out;
        }
        case DecodeMode::static_params: {
            const Tensor dist = hard_topp(temperature_scale(logits, static_t), static_p);
            out.token = sample_from(dist, rng);
            out.params = {static_t, static_p, DecodingParams::Source::static_override};
            out.logprob = static_cast<float>(std::log(static_cast<double>(dist[out.token])));
            return out;
        }
        case DecodeMode::autodeco: {
            if (heads == nullptr) throw UsageError("decode_step: autodeco mode requires heads");
            const float t_hat = temp_head_forward(hidden, *heads);
            const float p_hat = topp_head_forward(hidden, t_hat, *heads);
            const Tensor dist = hard_topp(temperature_scale(logits, t_hat), p_hat);
            out.token = sample_from(dist, rng);
            out.params = {t_hat, p_hat, DecodingParams::Source::predicted};
            out.logprob = static_cast<float>(std::log(static_cast<double>(dist[out.token])));
            return out;
        }
    }
    throw UsageError("decode_step: invalid mode");
}

void GenerationTrace::validate() const {
    if (tokens.size() != params.size() || tokens.size() != logprobs.size()) {
        throw UsageError("GenerationTrace: per-step lists have mismatched lengths");
    }
}

double GenerationTrace::mean_t() const {
    if (params.empty()) return 0.0;
    double s = 0.0;
    for (const DecodingParams& p : params) s += static_cast<double>(p.t_hat);
    return s / static_cast<double>(params.size());
}

double GenerationTrace::mean_p() const {
    if (params.empty()) return 0.0;
    double s = 0.0;
    for (const DecodingParams& p : params) s += static_cast<double>(p.p_hat);
    return s / static_cast<double>(params.size());
}

GenerationTrace generate(std::span<const int> prompt, const BackboneParams& backbone,
                         const HeadParams* heads, DecodeMode mode, int max_len, int stop_token,
                         std::uint64_t seed, float static_t, float static_p) {
    if (prompt.empty()) throw UsageError("generate: prompt must be nonempty");
    if (max_len < 1) throw UsageError("generate: max_len must be >= 1");
    if (mode == DecodeMode::autodeco) {
        if (heads == nullptr) throw UsageError("generate: autodeco mode requires heads");
        if (heads->d_model != backbone.cfg.d_model) {
            throw UsageError("generate: head d_model does not match backbone");
        }
    }

    GenerationTrace trace;
    trace.prompt.assign(prompt.begin(), prompt.end());
    trace.seed = seed;
    trace.mode = mode;

    CounterRng rng(seed);
    std::vector<int> context(prompt.begin(), prompt.end());
    Tensor hiddens, logits;
    const int d = backbone.cfg.d_model;
    const int v = backbone.cfg.vocab;
    for (int step = 0; step < max_len; ++step) {
        if (static_cast<int>(context.size()) >= backbone.cfg.seq_len) break;
        backbone_forward(backbone, context, hiddens, logits);
        const int last = hiddens.rows() - 1;
        Tensor h({d});
        std::copy_n(hiddens.data() + static_cast<std::size_t>(last) * d, d, h.data());
        Tensor l({v});
        std::copy_n(logits.data() + static_cast<std::size_t>(last) * v, v, l.data());
        const StepResult r = decode_step(h, l, heads, mode, static_t, static_p, rng);
        context.push_back(r.token);
        trace.tokens.push_back(r.token);
        trace.params.push_back(r.params);
        trace.logprobs.push_back(r.logprob);
        if (r.token == stop_token) break;
    }
    trace.validate();
    return trace;
}

// ---------------------------------------------------------------------------
// trace JSON
// ---------------------------------------------------------------------------

void export_trace(const GenerationTrace& trace, const std::string& path) {
    trace.validate();  // refuse to write inconsistent traces
    json steps = json::array();
    for (std::size_t i = 0; i < trace.tokens.size(); ++i) {
        // f32 widened to f64 serializes with an exact decimal round-trip
        steps.push_back({{"token", trace.tokens[i]},
                         {"t_hat", static_cast<double>(trace.params[i].t_hat)},
                         {"p_hat", static_cast<double>(trace.params[i].p_hat)},
                         {"source", to_string(trace.params[i].source)},
                         {"logprob", static_cast<double>(trace.logprobs[i])}});
    }
    json doc;
    doc["schema"] = "adk.trace.v1";
    doc["mode"] = to_string(trace.mode);
    doc["seed"] = trace.seed;
    doc["prompt"] = trace.prompt;
    doc["steps"] = steps;
    std::ofstream os(path);
    if (!os) throw FormatError("cannot open for writing: " + path);
    os << doc.dump(2) << "\n";
    if (!os) throw FormatError("write failed: " + path);
}

GenerationTrace import_trace(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open: " + path);
    std::stringstream buffer;
    buffer << is.rdbuf();
    const std::string text = buffer.str();
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t upto = std::min(text.size(), e.byte);
        const long line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
        throw FormatError("trace parse error at line " + std::to_string(line) + ": " + e.what());
    }
    try {
        if (doc.at("schema").get<std::string>() != "adk.trace.v1") {
            throw FormatError("unexpected trace schema tag");
        }
        GenerationTrace trace;
        trace.mode = decode_mode_from_string(doc.at("mode").get<std::string>());
        trace.seed = doc.at("seed").get<std::uint64_t>();
        trace.prompt = doc.at("prompt").get<std::vector<int>>();
        for (const json& s : doc.at("steps")) {
            trace.tokens.push_back(s.at("token").get<int>());
            DecodingParams p;
            p.t_hat = static_cast<float>(s.at("t_hat").get<double>());
            p.p_hat = static_cast<float>(s.at("p_hat").get<double>());
            p.source = source_from_string(s.at("source").get<std::string>());
            trace.params.push_back(p);
            trace.logprobs.push_back(static_cast<float>(s.at("logprob").get<double>()));
        }
        trace.validate();
        return trace;
    } catch (const json::exception& e) {
        throw FormatError("trace field error: " + std::string(e.what()));
    }
}

}  // namespace adk
