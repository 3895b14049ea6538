#include "adk/softpipe.hpp"

#include <cmath>

namespace adk {

namespace {

void require_prob_vector(const Tensor& probs, const char* op) {
    if (probs.numel() < 1) throw UsageError(std::string(op) + ": empty distribution");
    const std::int64_t bad = probs.first_non_finite();
    if (bad >= 0) {
        throw DomainError(std::string(op) + ": non-finite probability at index " +
                          std::to_string(bad));
    }
}

void require_top_p(float top_p, const char* op) {
    if (!(top_p > 0.0f) || top_p > 1.0f) {
        throw DomainError(std::string(op) + ": top-p must lie in (0,1], got " +
                          std::to_string(top_p));
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// plain forward
// ---------------------------------------------------------------------------

Tensor temperature_scale(const Tensor& logits, float temperature) {
    if (!(temperature > 0.0f)) {
        throw DomainError("temperature_scale: temperature must be > 0, got " +
                          std::to_string(temperature));
    }
    Tensor scaled(logits.shape());
    for (std::int64_t i = 0; i < logits.numel(); ++i) {
        scaled[i] = static_cast<float>(static_cast<double>(logits[i]) /
                                       static_cast<double>(temperature));
    }
    return stable_softmax(scaled);
}

Tensor soft_topp_mask(const Tensor& probs, float top_p, const SoftMaskConfig& cfg) {
    cfg.validate();
    require_prob_vector(probs, "soft_topp_mask");
    require_top_p(top_p, "soft_topp_mask");

    Tensor sorted;
    std::vector<int> perm;
    sort_descending(probs, sorted, perm);
    const Tensor cum = exclusive_cumsum(sorted);

    Tensor mask(probs.shape());
    for (std::int64_t i = 0; i < cum.numel(); ++i) {
        const double over = std::max(0.0, static_cast<double>(cum[i]) - static_cast<double>(top_p));
        mask[perm[static_cast<std::size_t>(i)]] =
            static_cast<float>(std::exp(-static_cast<double>(cfg.alpha) * over));
    }
    return mask;
}

Tensor renormalize(const Tensor& probs, const Tensor& mask, float epsilon) {
    require_prob_vector(probs, "renormalize");
    if (!probs.same_shape(mask)) throw UsageError("renormalize: mask shape mismatch");
    double denom = 0.0;
    bool any_positive = false;
    Tensor weighted(probs.shape());
    for (std::int64_t i = 0; i < probs.numel(); ++i) {
        const double w = static_cast<double>(probs[i]) * static_cast<double>(mask[i]);
        weighted[i] = static_cast<float>(w);
        denom += w;
        if (mask[i] > 0.0f) any_positive = true;
    }
    if (!any_positive) throw DomainError("renormalize: all-zero mask yields a degenerate distribution");
    denom += static_cast<double>(epsilon);
    for (std::int64_t i = 0; i < weighted.numel(); ++i) {
        weighted[i] = static_cast<float>(static_cast<double>(weighted[i]) / denom);
    }
    return weighted;
}

Tensor soft_pipeline(const Tensor& logits, float temperature, float top_p,
                     const SoftMaskConfig& cfg) {
    const Tensor probs = temperature_scale(logits, temperature);
    const Tensor mask = soft_topp_mask(probs, top_p, cfg);
    return renormalize(probs, mask, cfg.epsilon);
}

Tensor hard_topp(const Tensor& probs, float top_p) {
    require_prob_vector(probs, "hard_topp");
    require_top_p(top_p, "hard_topp");

    Tensor sorted;
    std::vector<int> perm;
    sort_descending(probs, sorted, perm);

    Tensor out(probs.shape());
    double kept = 0.0;
    std::size_t i = 0;
    for (; i < perm.size(); ++i) {
        kept += static_cast<double>(sorted[static_cast<std::int64_t>(i)]);
        out[perm[i]] = sorted[static_cast<std::int64_t>(i)];
        if (kept >= static_cast<double>(top_p)) {
            ++i;
            break;
        }
    }
    // everything after the boundary token stays zero
    if (kept <= 0.0) throw DomainError("hard_topp: distribution has no positive mass");
    for (std::int64_t j = 0; j < out.numel(); ++j) {
        out[j] = static_cast<float>(static_cast<double>(out[j]) / kept);
    }
    return out;
}

// ---------------------------------------------------------------------------
// recorded forward
// ---------------------------------------------------------------------------

Var temperature_scale(Var logits, Var temperature) {
    if (!(temperature.value()[0] > 0.0f)) {
        throw DomainError("temperature_scale: temperature must be > 0");
    }
    return softmax(div_scalar_var(logits, temperature));
}

Var soft_topp_mask(Var probs, Var top_p, const SoftMaskConfig& cfg) {
    cfg.validate();
    const float p = top_p.value()[0];
    require_top_p(p, "soft_topp_mask");
    SortVar sorted = sort_descending(probs);
    Var cum = exclusive_cumsum(sorted.values);
    Var decay = exp_op(scale(relu(sub_scalar_var(cum, top_p)), -static_cast<double>(cfg.alpha)));
    return unsort(decay, sorted.perm);
}

Var renormalize(Var probs, Var mask, float epsilon) {
    Var weighted = mul(probs, mask);
    Var denom = add_scalar(sum(weighted), static_cast<double>(epsilon));
    if (!(denom.value()[0] > 0.0f)) {
        throw DomainError("renormalize: all-zero mask yields a degenerate distribution");
    }
    return div_scalar_var(weighted, denom);
}

Var soft_pipeline(Var logits, Var temperature, Var top_p, const SoftMaskConfig& cfg) {
    Var probs = temperature_scale(logits, temperature);
    Var mask = soft_topp_mask(probs, top_p, cfg);
    return renormalize(probs, mask, cfg.epsilon);
}

}  // namespace adk
