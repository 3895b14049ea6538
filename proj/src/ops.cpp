#include "adk/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace adk {

Tensor stable_softmax(const Tensor& logits) {
    if (logits.numel() < 1) throw UsageError("stable_softmax: empty input");
    const std::int64_t bad = logits.first_non_finite();
    if (bad >= 0) {
        throw DomainError("stable_softmax: non-finite logit at index " + std::to_string(bad));
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < logits.numel(); ++i) mx = std::max(mx, static_cast<double>(logits[i]));
    std::vector<double> e(static_cast<std::size_t>(logits.numel()));
    double s = 0.0;
    for (std::int64_t i = 0; i < logits.numel(); ++i) {
        e[static_cast<std::size_t>(i)] = std::exp(static_cast<double>(logits[i]) - mx);
        s += e[static_cast<std::size_t>(i)];
    }
    Tensor out(logits.shape());
    for (std::int64_t i = 0; i < logits.numel(); ++i) {
        out[i] = static_cast<float>(e[static_cast<std::size_t>(i)] / s);
    }
    return out;
}

void sort_descending(const Tensor& v, Tensor& sorted, std::vector<int>& perm) {
    const std::int64_t bad = v.first_non_finite();
    if (bad >= 0) throw DomainError("sort_descending: non-finite value at index " + std::to_string(bad));
    perm.assign(static_cast<std::size_t>(v.numel()), 0);
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(), [&v](int i, int j) { return v[i] > v[j]; });
    sorted = Tensor(v.shape());
    for (std::size_t i = 0; i < perm.size(); ++i) sorted[static_cast<std::int64_t>(i)] = v[perm[i]];
}

Tensor exclusive_cumsum(const Tensor& v) {
    Tensor out(v.shape());
    double acc = 0.0;
    for (std::int64_t i = 0; i < v.numel(); ++i) {
        out[i] = static_cast<float>(acc);
        acc += static_cast<double>(v[i]);
    }
    return out;
}

int argmax(const Tensor& v) {
    if (v.numel() < 1) throw UsageError("argmax: empty input");
    int best = 0;
    for (std::int64_t i = 1; i < v.numel(); ++i) {
        if (v[i] > v[best]) best = static_cast<int>(i);
    }
    return best;
}

double entropy(const Tensor& probs) {
    double h = 0.0;
    for (std::int64_t i = 0; i < probs.numel(); ++i) {
        const double p = static_cast<double>(probs[i]);
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

double total_variation(const Tensor& p, const Tensor& q) {
    if (!p.same_shape(q)) throw UsageError("total_variation: shape mismatch");
    double s = 0.0;
    for (std::int64_t i = 0; i < p.numel(); ++i) {
        s += std::abs(static_cast<double>(p[i]) - static_cast<double>(q[i]));
    }
    return 0.5 * s;
}

}  // namespace adk
