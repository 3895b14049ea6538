#pragma once

#include "adk/ops.hpp"
#include "adk/tape.hpp"
#include "adk/tensor.hpp"

namespace adk {

struct SoftMaskConfig {
    float alpha{30.0f};     // decay steepness outside the nucleus
    float epsilon{1e-8f};   // renormalization stabilizer

    void validate() const {
        if (!(alpha > 0.0f)) throw DomainError("SoftMaskConfig: alpha must be > 0");
        if (!(epsilon > 0.0f)) throw DomainError("SoftMaskConfig: epsilon must be > 0");
    }
};

// ---------------------------------------------------------------------------
// inference path (plain tensors, forward only)
// ---------------------------------------------------------------------------

// softmax(logits / T)
Tensor temperature_scale(const Tensor& logits, float temperature);

// exp(-alpha * relu(c - P)) where c is the exclusive cumulative sum of the
// probabilities sorted descending, returned in original vocabulary order.
// The top-probability token always gets mask exactly 1.
Tensor soft_topp_mask(const Tensor& probs, float top_p, const SoftMaskConfig& cfg);

// (probs ⊙ mask) / (sum(probs ⊙ mask) + epsilon)
Tensor renormalize(const Tensor& probs, const Tensor& mask, float epsilon);

// temperature_scale → soft_topp_mask → renormalize
Tensor soft_pipeline(const Tensor& logits, float temperature, float top_p,
                     const SoftMaskConfig& cfg);

// Standard nucleus truncation: keep the smallest descending-order prefix whose
// inclusive cumulative probability reaches top_p (boundary token retained),
// zero the rest, renormalize.
Tensor hard_topp(const Tensor& probs, float top_p);

// ---------------------------------------------------------------------------
// training path (recorded on a tape; differentiable wrt logits, T and P)
// ---------------------------------------------------------------------------

Var temperature_scale(Var logits, Var temperature);
Var soft_topp_mask(Var probs, Var top_p, const SoftMaskConfig& cfg);
Var renormalize(Var probs, Var mask, float epsilon);
Var soft_pipeline(Var logits, Var temperature, Var top_p, const SoftMaskConfig& cfg);

}  // namespace adk
