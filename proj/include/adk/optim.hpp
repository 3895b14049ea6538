#pragma once

#include <vector>

#include "adk/tensor.hpp"

namespace adk {

struct AdamWConfig {
    double lr{1e-3};
    double beta1{0.9};
    double beta2{0.999};
    double eps{1e-8};
    double weight_decay{0.0};
};

// One decoupled-weight-decay adaptive-moment update with bias correction.
// `t` is the 1-based step count after this update. Moments are f64; the
// parameter stays f32.
void optimizer_step(Tensor& param, const std::vector<double>& grad, std::vector<double>& m,
                    std::vector<double>& v, int t, const AdamWConfig& cfg);

// Convenience wrapper owning the moment state for a fixed parameter list.
class AdamW {
  public:
    AdamW(AdamWConfig cfg, std::vector<Tensor*> params);

    // grads[i] pairs with params[i]; shapes must agree
    void step(const std::vector<const std::vector<double>*>& grads);

    int steps_taken() const { return t_; }

  private:
    AdamWConfig cfg_;
    std::vector<Tensor*> params_;
    std::vector<std::vector<double>> m_, v_;
    int t_{0};
};

}  // namespace adk
