#include "adk/heads.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "adk/rng.hpp"

namespace adk {

namespace {

using nlohmann::json;

double logit(double y) { return std::log(y / (1.0 - y)); }

double squash_apply(double z, double lo, double hi) {
    const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    return lo + (hi - lo) * s;
}

Tensor uniform_tensor(std::vector<int> shape, double bound, CounterRng& rng) {
    Tensor t(std::move(shape));
    for (std::int64_t i = 0; i < t.numel(); ++i) {
        t[i] = static_cast<float>(rng.next_uniform(-bound, bound));
    }
    return t;
}

Mlp2 init_mlp(int in, int hidden, double out_bias, CounterRng& rng) {
    Mlp2 mlp;
    mlp.w1 = uniform_tensor({hidden, in}, 1.0 / std::sqrt(static_cast<double>(in)), rng);
    mlp.b1 = Tensor({hidden});
    mlp.w2 = uniform_tensor({1, hidden}, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
    mlp.b2 = Tensor({1}, {static_cast<float>(out_bias)});
    return mlp;
}

float mlp_forward(const Tensor& input, const Mlp2& mlp) {
    if (static_cast<int>(input.numel()) != mlp.w1.cols()) {
        throw UsageError("head forward: input length " + std::to_string(input.numel()) +
                         " does not match weight columns " + std::to_string(mlp.w1.cols()));
    }
    const int hidden = mlp.w1.rows();
    double z = static_cast<double>(mlp.b2[0]);
    for (int h = 0; h < hidden; ++h) {
        double acc = static_cast<double>(mlp.b1[h]);
        for (int c = 0; c < mlp.w1.cols(); ++c) {
            acc += static_cast<double>(mlp.w1.at(h, c)) * static_cast<double>(input[c]);
        }
        if (acc > 0.0) z += static_cast<double>(mlp.w2.at(0, h)) * acc;
    }
    return static_cast<float>(z);
}

Var mlp_forward(Var input, Var w1, Var b1, Var w2, Var b2) {
    Var hidden = relu(add(matvec(w1, input), b1));
    return add(matvec(w2, hidden), b2);  // shape {1}
}

Var squash_apply(Var z, double lo, double hi) {
    return add_scalar(scale(sigmoid(z), hi - lo), lo);
}

}  // namespace

void SquashRange::validate() const {
    if (!(0.0f < t_min && t_min < t_max)) throw DomainError("SquashRange: need 0 < T_min < T_max");
    if (!(0.0f < p_min && p_min < p_max && p_max <= 1.0f)) {
        throw DomainError("SquashRange: need 0 < P_min < P_max <= 1");
    }
}

HeadParams init_heads(int d_model, int d_head, SquashRange squash, std::uint64_t rng_seed) {
    if (d_model < 1 || d_head < 1) throw UsageError("init_heads: dims must be >= 1");
    squash.validate();

    // Output biases put the untrained prediction at T = 1.0 and P = 0.99 for a
    // zero hidden state. P_max is an open bound, so 0.99 stands in for 1.0.
    const double t_target = std::min(std::max(1.0, squash.t_min + 1e-3), squash.t_max - 1e-3);
    const double p_target = std::max(std::min(0.99, squash.p_max - 1e-4), squash.p_min + 1e-4);
    const double bias_t = logit((t_target - squash.t_min) / (squash.t_max - squash.t_min));
    const double bias_p = logit((p_target - squash.p_min) / (squash.p_max - squash.p_min));

    CounterRng rng(rng_seed);
    HeadParams params;
    params.d_model = d_model;
    params.d_head = d_head;
    params.squash = squash;
    params.temp_mlp = init_mlp(d_model, d_head, bias_t, rng);
    params.topp_mlp = init_mlp(d_model + 1, d_head, bias_p, rng);
    return params;
}

float temp_head_forward(const Tensor& hidden, const HeadParams& params) {
    if (static_cast<int>(hidden.numel()) != params.d_model) {
        throw UsageError("temp_head_forward: hidden size mismatch");
    }
    const float z = mlp_forward(hidden, params.temp_mlp);
    return static_cast<float>(squash_apply(z, params.squash.t_min, params.squash.t_max));
}

float topp_head_forward(const Tensor& hidden, float t_hat, const HeadParams& params) {
    if (static_cast<int>(hidden.numel()) != params.d_model) {
        throw UsageError("topp_head_forward: hidden size mismatch");
    }
    if (!std::isfinite(t_hat)) throw DomainError("topp_head_forward: non-finite temperature");
    Tensor input({params.d_model + 1});
    std::copy_n(hidden.data(), params.d_model, input.data());
    input[params.d_model] = t_hat;
    const float z = mlp_forward(input, params.topp_mlp);
    return static_cast<float>(squash_apply(z, params.squash.p_min, params.squash.p_max));
}

HeadVars lift_heads(Tape& tape, const HeadParams& params) {
    HeadVars v;
    v.temp_w1 = tape.leaf(params.temp_mlp.w1);
    v.temp_b1 = tape.leaf(params.temp_mlp.b1);
    v.temp_w2 = tape.leaf(params.temp_mlp.w2);
    v.temp_b2 = tape.leaf(params.temp_mlp.b2);
    v.topp_w1 = tape.leaf(params.topp_mlp.w1);
    v.topp_b1 = tape.leaf(params.topp_mlp.b1);
    v.topp_w2 = tape.leaf(params.topp_mlp.w2);
    v.topp_b2 = tape.leaf(params.topp_mlp.b2);
    return v;
}

Var temp_head_forward(Var hidden, const HeadVars& vars, const SquashRange& squash) {
    Var z = mlp_forward(hidden, vars.temp_w1, vars.temp_b1, vars.temp_w2, vars.temp_b2);
    return squash_apply(z, squash.t_min, squash.t_max);
}

Var topp_head_forward(Var hidden, Var t_hat, const HeadVars& vars, const SquashRange& squash) {
    Var input = concat(hidden, t_hat);  // gradient reaches t_hat through this edge
    Var z = mlp_forward(input, vars.topp_w1, vars.topp_b1, vars.topp_w2, vars.topp_b2);
    return squash_apply(z, squash.p_min, squash.p_max);
}

void save_heads(const std::string& path, const HeadParams& params) {
    save_tensor_container(path, {params.temp_mlp.w1, params.temp_mlp.b1, params.temp_mlp.w2,
                                 params.temp_mlp.b2, params.topp_mlp.w1, params.topp_mlp.b1,
                                 params.topp_mlp.w2, params.topp_mlp.b2});
    json sidecar;
    sidecar["format"] = "adk.heads.v1";
    sidecar["d_model"] = params.d_model;
    sidecar["d_head"] = params.d_head;
    sidecar["squash"] = {{"t_min", params.squash.t_min},
                         {"t_max", params.squash.t_max},
                         {"p_min", params.squash.p_min},
                         {"p_max", params.squash.p_max}};
    const char* names[] = {"temp.w1", "temp.b1", "temp.w2", "temp.b2",
                           "topp.w1", "topp.b1", "topp.w2", "topp.b2"};
    const Tensor* tensors[] = {&params.temp_mlp.w1, &params.temp_mlp.b1, &params.temp_mlp.w2,
                               &params.temp_mlp.b2, &params.topp_mlp.w1, &params.topp_mlp.b1,
                               &params.topp_mlp.w2, &params.topp_mlp.b2};
    json list = json::array();
    for (int i = 0; i < 8; ++i) {
        list.push_back({{"name", names[i]}, {"index", i}, {"shape", tensors[i]->shape()}});
    }
    sidecar["tensors"] = list;
    std::ofstream os(path + ".json");
    if (!os) throw FormatError("cannot open for writing: " + path + ".json");
    os << sidecar.dump(2) << "\n";
}

HeadParams load_heads(const std::string& path) {
    std::ifstream is(path + ".json");
    if (!is) throw FormatError("missing heads sidecar: " + path + ".json");
    json sidecar;
    try {
        is >> sidecar;
    } catch (const json::parse_error& e) {
        throw FormatError("heads sidecar parse error: " + std::string(e.what()));
    }
    if (sidecar.value("format", "") != "adk.heads.v1") {
        throw FormatError("heads sidecar has unexpected format tag");
    }
    std::vector<Tensor> tensors = load_tensor_container(path);
    if (tensors.size() != 8) {
        throw FormatError("heads container holds " + std::to_string(tensors.size()) +
                          " tensors, expected 8");
    }
    HeadParams params;
    params.d_model = sidecar.at("d_model").get<int>();
    params.d_head = sidecar.at("d_head").get<int>();
    params.squash.t_min = sidecar.at("squash").at("t_min").get<float>();
    params.squash.t_max = sidecar.at("squash").at("t_max").get<float>();
    params.squash.p_min = sidecar.at("squash").at("p_min").get<float>();
    params.squash.p_max = sidecar.at("squash").at("p_max").get<float>();
    params.squash.validate();
    params.temp_mlp = {tensors[0], tensors[1], tensors[2], tensors[3]};
    params.topp_mlp = {tensors[4], tensors[5], tensors[6], tensors[7]};
    if (params.temp_mlp.w1.cols() != params.d_model ||
        params.topp_mlp.w1.cols() != params.d_model + 1) {
        throw FormatError("heads container shapes do not match sidecar dims");
    }
    return params;
}

}  // namespace adk
