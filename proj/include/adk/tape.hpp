#pragma once

#include <functional>
#include <string>
#include <vector>

#include "adk/tensor.hpp"

namespace adk {

class Tape;

// Handle into a Tape node. Cheap to copy; never outlives its tape.
struct Var {
    Tape* tape{nullptr};
    int id{-1};

    bool valid() const { return tape != nullptr && id >= 0; }
    const Tensor& value() const;
    // adjoints, valid after Tape::backward; f64 accumulators over f32 values
    const std::vector<double>& grad() const;
};

// Eager Wengert list: every forward op appends a node with a pull-style
// backward closure. One graph per forward pass, discarded after backward.
// Single-threaded by contract; distinct tapes may live on distinct threads.
class Tape {
  public:
    struct Node {
        Tensor value;
        std::vector<double> grad;
        std::vector<int> parents;
        std::function<void(Tape&, const Node&)> backprop;
    };

    Var leaf(Tensor value) { return emplace("leaf", std::move(value), {}, nullptr); }

    Var emplace(const char* op_name, Tensor value, std::vector<int> parents,
                std::function<void(Tape&, const Node&)> backprop);

    Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    int size() const { return static_cast<int>(nodes_.size()); }

    // Reverse-mode sweep from a scalar root. Every node reachable from the
    // root receives its accumulated adjoint; unreachable leaves keep zeros.
    void backward(Var root);

  private:
    std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape->node(id).value; }
inline const std::vector<double>& Var::grad() const { return tape->node(id).grad; }

// ---------------------------------------------------------------------------
// recorded ops (free functions; overloads on Var record, overloads on Tensor
// in ops.hpp evaluate without a graph)
// ---------------------------------------------------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var add_scalar(Var a, double c);
Var scale(Var a, double c);
Var sub_scalar_var(Var a, Var s);  // a_i - s, s a 1-element tensor
Var div_scalar_var(Var a, Var s);  // a_i / s
Var relu(Var a);
Var exp_op(Var a);
Var log_op(Var a);
Var sigmoid(Var a);
Var sum(Var a);
Var mean(Var a);
Var pick(Var a, int index);
Var concat(Var a, Var b);
Var softmax(Var logits);  // rank-1, max-subtracted

struct SortVar {
    Var values;             // non-increasing
    std::vector<int> perm;  // sorted position -> original index (forward constant)
};
// Stable descending sort; gradients flow through values along the fixed
// permutation of the forward pass.
SortVar sort_descending(Var v);
Var exclusive_cumsum(Var v);
Var unsort(Var sorted_vals, const std::vector<int>& perm);

Var matvec(Var w, Var x);  // [m,n]·[n] -> [m]
Var matmul(Var a, Var b);  // [m,k]·[k,n] -> [m,n]
Var add_row_bias(Var x, Var bias);  // [n,m] + broadcast [m]
Var transpose(Var a);
Var rows_embed(Var table, std::vector<int> ids);  // [V,d] gather -> [n,d]
Var rmsnorm_rows(Var x, double eps);
Var causal_softmax_rows(Var scores);  // row r softmaxed over columns 0..r
Var slice_cols(Var x, int c0, int w);
Var concat_cols(const std::vector<Var>& parts);
// mean over rows of (logsumexp(row) - row[target]); [n,V] -> {1}
Var softmax_ce_mean(Var logits, std::vector<int> targets);
Var stop_gradient(Var a);

}  // namespace adk
