#include "adk/optim.hpp"

#include <cmath>

namespace adk {

void optimizer_step(Tensor& param, const std::vector<double>& grad, std::vector<double>& m,
                    std::vector<double>& v, int t, const AdamWConfig& cfg) {
    const std::size_t n = static_cast<std::size_t>(param.numel());
    if (grad.size() != n || m.size() != n || v.size() != n) {
        throw UsageError("optimizer_step: shape mismatch between param, grad and state");
    }
    if (t < 1) throw UsageError("optimizer_step: step count must be >= 1");
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        const double p = static_cast<double>(param[static_cast<std::int64_t>(i)]);
        param[static_cast<std::int64_t>(i)] = static_cast<float>(
            p - cfg.lr * (mhat / (std::sqrt(vhat) + cfg.eps) + cfg.weight_decay * p));
    }
}

AdamW::AdamW(AdamWConfig cfg, std::vector<Tensor*> params)
    : cfg_(cfg), params_(std::move(params)) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        m_[i].assign(static_cast<std::size_t>(params_[i]->numel()), 0.0);
        v_[i].assign(static_cast<std::size_t>(params_[i]->numel()), 0.0);
    }
}

void AdamW::step(const std::vector<const std::vector<double>*>& grads) {
    if (grads.size() != params_.size()) throw UsageError("AdamW::step: gradient count mismatch");
    ++t_;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        optimizer_step(*params_[i], *grads[i], m_[i], v_[i], t_, cfg_);
    }
}

}  // namespace adk
