#pragma once

#include <vector>

#include "adk/tensor.hpp"

namespace adk {

// Forward-only counterparts of the recorded ops; same kernels, no graph.

Tensor stable_softmax(const Tensor& logits);
void sort_descending(const Tensor& v, Tensor& sorted, std::vector<int>& perm);
Tensor exclusive_cumsum(const Tensor& v);
int argmax(const Tensor& v);
// Shannon entropy in nats of a probability vector
double entropy(const Tensor& probs);
// 0.5 * sum |p - q|
double total_variation(const Tensor& p, const Tensor& q);

}  // namespace adk
