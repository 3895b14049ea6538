#include "adk/tape.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace adk {

namespace {

void require_same_tape(Var a, Var b) {
    if (a.tape != b.tape) throw UsageError("operands live on different tapes");
}

void require_same_shape(Var a, Var b, const char* op) {
    if (!a.value().same_shape(b.value())) {
        throw UsageError(std::string(op) + ": shape mismatch " +
                         shape_to_string(a.value().shape()) + " vs " +
                         shape_to_string(b.value().shape()));
    }
}

double scalar_of(Var s, const char* op) {
    if (s.value().numel() != 1) {
        throw UsageError(std::string(op) + ": expected a 1-element tensor");
    }
    return static_cast<double>(s.value()[0]);
}

}  // namespace

Var Tape::emplace(const char* op_name, Tensor value, std::vector<int> parents,
                  std::function<void(Tape&, const Node&)> backprop) {
    const std::int64_t bad = value.first_non_finite();
    if (bad >= 0) {
        throw NumericalError(std::string(op_name) + " produced a non-finite value at index " +
                             std::to_string(bad));
    }
    Node n;
    n.value = std::move(value);
    n.parents = std::move(parents);
    n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::backward(Var root) {
    if (root.tape != this) throw UsageError("backward: root from another tape");
    if (root.value().numel() != 1) throw UsageError("backward: root must be scalar");

    std::vector<char> reachable(nodes_.size(), 0);
    reachable[static_cast<std::size_t>(root.id)] = 1;
    for (int id = root.id; id >= 0; --id) {
        if (!reachable[static_cast<std::size_t>(id)]) continue;
        for (int p : nodes_[static_cast<std::size_t>(id)].parents) {
            reachable[static_cast<std::size_t>(p)] = 1;
        }
    }
    for (auto& n : nodes_) n.grad.assign(static_cast<std::size_t>(n.value.numel()), 0.0);

    nodes_[static_cast<std::size_t>(root.id)].grad[0] = 1.0;
    for (int id = root.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!reachable[static_cast<std::size_t>(id)] || !n.backprop) continue;
        n.backprop(*this, n);
    }
}

// ---------------------------------------------------------------------------
// elementwise & scalar broadcast
// ---------------------------------------------------------------------------

Var add(Var a, Var b) {
    require_same_tape(a, b);
    require_same_shape(a, b, "add");
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] += b.value()[i];
    const int pa = a.id, pb = b.id;
    return a.tape->emplace("add", std::move(out), {pa, pb},
                           [pa, pb](Tape& t, const Tape::Node& self) {
                               auto& ga = t.node(pa).grad;
                               auto& gb = t.node(pb).grad;
                               for (std::size_t i = 0; i < self.grad.size(); ++i) {
                                   ga[i] += self.grad[i];
                                   gb[i] += self.grad[i];
                               }
                           });
}

Var sub(Var a, Var b) {
    require_same_tape(a, b);
    require_same_shape(a, b, "sub");
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] -= b.value()[i];
    const int pa = a.id, pb = b.id;
    return a.tape->emplace("sub", std::move(out), {pa, pb},
                           [pa, pb](Tape& t, const Tape::Node& self) {
                               auto& ga = t.node(pa).grad;
                               auto& gb = t.node(pb).grad;
                               for (std::size_t i = 0; i < self.grad.size(); ++i) {
                                   ga[i] += self.grad[i];
                                   gb[i] -= self.grad[i];
                               }
                           });
}

Var mul(Var a, Var b) {
    require_same_tape(a, b);
    require_same_shape(a, b, "mul");
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= b.value()[i];
    const int pa = a.id, pb = b.id;
    return a.tape->emplace("mul", std::move(out), {pa, pb},
                           [pa, pb](Tape& t, const Tape::Node& self) {
                               const Tensor& av = t.node(pa).value;
                               const Tensor& bv = t.node(pb).value;
                               auto& ga = t.node(pa).grad;
                               auto& gb = t.node(pb).grad;
                               for (std::size_t i = 0; i < self.grad.size(); ++i) {
                                   ga[i] += self.grad[i] * bv[static_cast<std::int64_t>(i)];
                                   gb[i] += self.grad[i] * av[static_cast<std::int64_t>(i)];
                               }
                           });
}

Var add_scalar(Var a, double c) {
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) {
        out[i] = static_cast<float>(static_cast<double>(out[i]) + c);
    }
    const int pa = a.id;
    return a.tape->emplace("add_scalar", std::move(out), {pa},
                           [pa](Tape& t, const Tape::Node& self) {
                               auto& ga = t.node(pa).grad;
                               for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i];
                           });
}

Var scale(Var a, double c) {
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) {
        out[i] = static_cast<float>(static_cast<double>(out[i]) * c);
    }
    const int pa = a.id;
    return a.tape->emplace("scale", std::move(out), {pa},
                           [pa, c](Tape& t, const Tape::Node& self) {
                               auto& ga = t.node(pa).grad;
                               for (std::size_t i = 0; i < self.grad.size(); ++i) {
                                   ga[i] += self.grad[i] * c;
                               }
                           });
}

Var sub_scalar_var(Var a, Var s) {
    require_same_tape(a, s);
    const double sv = scalar_of(s, "sub_scalar_var");
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) {
        out[i] = static_cast<float>(static_cast<double>(out[i]) - sv);
    }
    const int pa = a.id, ps = s.id;
    return a.tape->emplace("sub_scalar_var", std::move(out), {pa, ps},
                           [pa, ps](Tape& t, const Tape::Node& self) {
                               auto& ga = t.node(pa).grad;
                               double acc = 0.0;
                               for (std::size_t i = 0; i < self.grad.size(); ++i) {
                                   ga[i] += self.grad[i];
                                   acc += self.grad[i];
                               }
                               t.node(ps).grad[0] -= acc;
                           });
}

Var div_scalar_var(Var a, Var s) {
    require_same_tape(a, s);
    const double sv = scalar_of(s, "div_scalar_var");
    if (sv == 0.0) throw NumericalError("div_scalar_var: division by zero");
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) {
        out[i] = static_cast<float>(static_cast<double>(out[i]) / sv);
    }
    const int pa = a.id, ps = s.id;
    return a.tape->emplace("div_scalar_var", std::move(out), {pa, ps},
                           [pa, ps, sv](Tape& t, const Tape::Node& self) {
                               const Tensor& av = t.node(pa).value;
                               auto& ga = t.node(pa).grad;
                               double acc = 0.0;
                               for (std::size_t i = 0; i < self.grad.size(); ++i) {
                                   ga[i] += self.grad[i] / sv;
                                   acc += self.grad[i] * static_cast<double>(av[static_cast<std::int64_t>(i)]);
                               }
                               t.node(ps).grad[0] -= acc / (sv * sv);
                           });
}

// ---------------------------------------------------------------------------
// unary
// ---------------------------------------------------------------------------

Var relu(Var a) {
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = out[i] > 0.0f ? out[i] : 0.0f;
    const int pa = a.id;
    return a.tape->emplace("relu", std::move(out), {pa},
                           [pa](Tape& t, const Tape::Node& self) {
                               const Tensor& av = t.node(pa).value;
                               auto& ga = t.node(pa).grad;
                               for (std::size_t i = 0; i < self.grad.size(); ++i) {
                                   if (av[static_cast<std::int64_t>(i)] > 0.0f) ga[i] += self.grad[i];
                               }
                           });
}

Var exp_op(Var a) {
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) {
        out[i] = static_cast<float>(std::exp(static_cast<double>(out[i])));
    }
    const int pa = a.id;
    return a.tape->emplace("exp", std::move(out), {pa},
                           [pa](Tape& t, const Tape::Node& self) {
                               auto& ga = t.node(pa).grad;
                               for (std::size_t i = 0; i < self.grad.size(); ++i) {
                                   ga[i] += self.grad[i] *
                                            static_cast<double>(self.value[static_cast<std::int64_t>(i)]);
                               }
                           });
}

Var log_op(Var a) {
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) {
        if (out[i] <= 0.0f) throw NumericalError("log of non-positive value");
        out[i] = static_cast<float>(std::log(static_cast<double>(out[i])));
    }
    const int pa = a.id;
    return a.tape->emplace("log", std::move(out), {pa},
                           [pa](Tape& t, const Tape::Node& self) {
                               const Tensor& av = t.node(pa).value;
                               auto& ga = t.node(pa).grad;
                               for (std::size_t i = 0; i < self.grad.size(); ++i) {
                                   ga[i] += self.grad[i] / static_cast<double>(av[static_cast<std::int64_t>(i)]);
                               }
                           });
}

Var sigmoid(Var a) {
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) {
        const double x = static_cast<double>(out[i]);
        out[i] = static_cast<float>(x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                                             : std::exp(x) / (1.0 + std::exp(x)));
    }
    const int pa = a.id;
    return a.tape->emplace("sigmoid", std::move(out), {pa},
                           [pa](Tape& t, const Tape::Node& self) {
                               auto& ga = t.node(pa).grad;
                               for (std::size_t i = 0; i < self.grad.size(); ++i) {
                                   const double y = static_cast<double>(self.value[static_cast<std::int64_t>(i)]);
                                   ga[i] += self.grad[i] * y * (1.0 - y);
                               }
                           });
}

// ---------------------------------------------------------------------------
// reductions & indexing
// ---------------------------------------------------------------------------

Var sum(Var a) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < a.value().numel(); ++i) acc += static_cast<double>(a.value()[i]);
    const int pa = a.id;
    return a.tape->emplace("sum", Tensor::scalar(static_cast<float>(acc)), {pa},
                           [pa](Tape& t, const Tape::Node& self) {
                               auto& ga = t.node(pa).grad;
                               for (auto& g : ga) g += self.grad[0];
                           });
}

Var mean(Var a) {
    const std::int64_t n = a.value().numel();
    if (n == 0) throw UsageError("mean of empty tensor");
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) acc += static_cast<double>(a.value()[i]);
    const int pa = a.id;
    const double inv = 1.0 / static_cast<double>(n);
    return a.tape->emplace("mean", Tensor::scalar(static_cast<float>(acc * inv)), {pa},
                           [pa, inv](Tape& t, const Tape::Node& self) {
                               auto& ga = t.node(pa).grad;
                               for (auto& g : ga) g += self.grad[0] * inv;
                           });
}

Var pick(Var a, int index) {
    if (index < 0 || index >= a.value().numel()) {
        throw UsageError("pick: index " + std::to_string(index) + " out of range");
    }
    const int pa = a.id;
    return a.tape->emplace("pick", Tensor::scalar(a.value()[index]), {pa},
                           [pa, index](Tape& t, const Tape::Node& self) {
                               t.node(pa).grad[static_cast<std::size_t>(index)] += self.grad[0];
                           });
}

Var concat(Var a, Var b) {
    require_same_tape(a, b);
    const std::int64_t na = a.value().numel(), nb = b.value().numel();
    std::vector<float> data;
    data.reserve(static_cast<std::size_t>(na + nb));
    data.insert(data.end(), a.value().storage().begin(), a.value().storage().end());
    data.insert(data.end(), b.value().storage().begin(), b.value().storage().end());
    const int pa = a.id, pb = b.id;
    return a.tape->emplace("concat", Tensor({static_cast<int>(na + nb)}, std::move(data)), {pa, pb},
                           [pa, pb, na](Tape& t, const Tape::Node& self) {
                               auto& ga = t.node(pa).grad;
                               auto& gb = t.node(pb).grad;
                               for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
                               for (std::size_t i = 0; i < gb.size(); ++i) {
                                   gb[i] += self.grad[static_cast<std::size_t>(na) + i];
                               }
                           });
}

// ---------------------------------------------------------------------------
// softmax / sorting / cumulative sums
// ---------------------------------------------------------------------------

Var softmax(Var logits) {
    const Tensor& l = logits.value();
    if (l.numel() < 1) throw UsageError("softmax: empty input");
    double mx = -std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < l.numel(); ++i) mx = std::max(mx, static_cast<double>(l[i]));
    std::vector<double> e(static_cast<std::size_t>(l.numel()));
    double s = 0.0;
    for (std::int64_t i = 0; i < l.numel(); ++i) {
        e[static_cast<std::size_t>(i)] = std::exp(static_cast<double>(l[i]) - mx);
        s += e[static_cast<std::size_t>(i)];
    }
    Tensor out(l.shape());
    for (std::int64_t i = 0; i < l.numel(); ++i) {
        out[i] = static_cast<float>(e[static_cast<std::size_t>(i)] / s);
    }
    const int pa = logits.id;
    return logits.tape->emplace("softmax", std::move(out), {pa},
                                [pa](Tape& t, const Tape::Node& self) {
                                    auto& ga = t.node(pa).grad;
                                    double dot = 0.0;
                                    for (std::size_t i = 0; i < self.grad.size(); ++i) {
                                        dot += self.grad[i] *
                                               static_cast<double>(self.value[static_cast<std::int64_t>(i)]);
                                    }
                                    for (std::size_t i = 0; i < self.grad.size(); ++i) {
                                        const double p = static_cast<double>(self.value[static_cast<std::int64_t>(i)]);
                                        ga[i] += p * (self.grad[i] - dot);
                                    }
                                });
}

SortVar sort_descending(Var v) {
    const Tensor& x = v.value();
    std::vector<int> perm(static_cast<std::size_t>(x.numel()));
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(), [&x](int i, int j) { return x[i] > x[j]; });
    Tensor out(x.shape());
    for (std::size_t i = 0; i < perm.size(); ++i) out[static_cast<std::int64_t>(i)] = x[perm[i]];
    const int pa = v.id;
    std::vector<int> perm_copy = perm;
    Var sorted = v.tape->emplace(
        "sort_descending", std::move(out), {pa},
        [pa, perm_copy](Tape& t, const Tape::Node& self) {
            auto& ga = t.node(pa).grad;
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                ga[static_cast<std::size_t>(perm_copy[i])] += self.grad[i];
            }
        });
    return {sorted, std::move(perm)};
}

Var exclusive_cumsum(Var v) {
    const Tensor& x = v.value();
    Tensor out(x.shape());
    double acc = 0.0;
    for (std::int64_t i = 0; i < x.numel(); ++i) {
        out[i] = static_cast<float>(acc);
        acc += static_cast<double>(x[i]);
    }
    const int pa = v.id;
    return v.tape->emplace("exclusive_cumsum", std::move(out), {pa},
                           [pa](Tape& t, const Tape::Node& self) {
                               auto& ga = t.node(pa).grad;
                               double acc2 = 0.0;
                               for (std::size_t i = self.grad.size(); i-- > 1;) {
                                   acc2 += self.grad[i];
                                   ga[i - 1] += acc2;
                               }
                           });
}

Var unsort(Var sorted_vals, const std::vector<int>& perm) {
    const Tensor& x = sorted_vals.value();
    if (static_cast<std::int64_t>(perm.size()) != x.numel()) {
        throw UsageError("unsort: permutation length mismatch");
    }
    Tensor out(x.shape());
    for (std::size_t i = 0; i < perm.size(); ++i) out[perm[i]] = x[static_cast<std::int64_t>(i)];
    const int pa = sorted_vals.id;
    std::vector<int> perm_copy = perm;
    return sorted_vals.tape->emplace(
        "unsort", std::move(out), {pa},
        [pa, perm_copy](Tape& t, const Tape::Node& self) {
            auto& ga = t.node(pa).grad;
            for (std::size_t i = 0; i < perm_copy.size(); ++i) {
                ga[i] += self.grad[static_cast<std::size_t>(perm_copy[i])];
            }
        });
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

Var matvec(Var w, Var x) {
    require_same_tape(w, x);
    const Tensor& wv = w.value();
    const Tensor& xv = x.value();
    if (wv.rank() != 2 || wv.cols() != static_cast<int>(xv.numel())) {
        throw UsageError("matvec: shape mismatch " + shape_to_string(wv.shape()) + " · " +
                         shape_to_string(xv.shape()));
    }
    Tensor out({wv.rows()});
    out.vec() = wv.mat() * xv.vec();
    const int pw = w.id, px = x.id;
    return w.tape->emplace(
        "matvec", std::move(out), {pw, px}, [pw, px](Tape& t, const Tape::Node& self) {
            const Tensor& wv2 = t.node(pw).value;
            const Tensor& xv2 = t.node(px).value;
            auto& gw = t.node(pw).grad;
            auto& gx = t.node(px).grad;
            const int m = wv2.rows(), n = wv2.cols();
            for (int r = 0; r < m; ++r) {
                const double g = self.grad[static_cast<std::size_t>(r)];
                if (g == 0.0) continue;
                for (int c = 0; c < n; ++c) {
                    gw[static_cast<std::size_t>(r) * n + c] += g * static_cast<double>(xv2[c]);
                    gx[static_cast<std::size_t>(c)] += g * static_cast<double>(wv2.at(r, c));
                }
            }
        });
}

Var matmul(Var a, Var b) {
    require_same_tape(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) {
        throw UsageError("matmul: shape mismatch " + shape_to_string(av.shape()) + " · " +
                         shape_to_string(bv.shape()));
    }
    Tensor out({av.rows(), bv.cols()});
    out.mat() = av.mat() * bv.mat();
    const int pa = a.id, pb = b.id;
    return a.tape->emplace(
        "matmul", std::move(out), {pa, pb}, [pa, pb](Tape& t, const Tape::Node& self) {
            const Tensor& av2 = t.node(pa).value;
            const Tensor& bv2 = t.node(pb).value;
            auto& ga = t.node(pa).grad;
            auto& gb = t.node(pb).grad;
            const int m = av2.rows(), k = av2.cols(), n = bv2.cols();
            using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
            Eigen::Map<const RowMatrixXd> g(self.grad.data(), m, n);
            Eigen::Map<RowMatrixXd> gam(ga.data(), m, k);
            Eigen::Map<RowMatrixXd> gbm(gb.data(), k, n);
            gam.noalias() += g * bv2.mat().cast<double>().transpose();
            gbm.noalias() += av2.mat().cast<double>().transpose() * g;
        });
}

Var add_row_bias(Var x, Var bias) {
    require_same_tape(x, bias);
    const Tensor& xv = x.value();
    const Tensor& bv = bias.value();
    if (xv.rank() != 2 || static_cast<std::int64_t>(xv.cols()) != bv.numel()) {
        throw UsageError("add_row_bias: shape mismatch");
    }
    Tensor out = xv;
    const int n = xv.rows(), m = xv.cols();
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < m; ++c) out.at(r, c) += bv[c];
    }
    const int px = x.id, pb = bias.id;
    return x.tape->emplace("add_row_bias", std::move(out), {px, pb},
                           [px, pb](Tape& t, const Tape::Node& self) {
                               auto& gx = t.node(px).grad;
                               auto& gb = t.node(pb).grad;
                               const int n2 = self.value.rows(), m2 = self.value.cols();
                               for (int r = 0; r < n2; ++r) {
                                   for (int c = 0; c < m2; ++c) {
                                       const double g = self.grad[static_cast<std::size_t>(r) * m2 + c];
                                       gx[static_cast<std::size_t>(r) * m2 + c] += g;
                                       gb[static_cast<std::size_t>(c)] += g;
                                   }
                               }
                           });
}

Var transpose(Var a) {
    const Tensor& av = a.value();
    if (av.rank() != 2) throw UsageError("transpose: rank-2 required");
    Tensor out({av.cols(), av.rows()});
    out.mat() = av.mat().transpose();
    const int pa = a.id;
    const int m = av.rows(), n = av.cols();
    return a.tape->emplace("transpose", std::move(out), {pa},
                           [pa, m, n](Tape& t, const Tape::Node& self) {
                               auto& ga = t.node(pa).grad;
                               for (int r = 0; r < n; ++r) {
                                   for (int c = 0; c < m; ++c) {
                                       ga[static_cast<std::size_t>(c) * n + r] +=
                                           self.grad[static_cast<std::size_t>(r) * m + c];
                                   }
                               }
                           });
}

Var rows_embed(Var table, std::vector<int> ids) {
    const Tensor& tv = table.value();
    if (tv.rank() != 2) throw UsageError("rows_embed: table must be rank-2");
    const int d = tv.cols();
    Tensor out({static_cast<int>(ids.size()), d});
    for (std::size_t r = 0; r < ids.size(); ++r) {
        if (ids[r] < 0 || ids[r] >= tv.rows()) {
            throw UsageError("rows_embed: id " + std::to_string(ids[r]) + " out of range");
        }
        std::copy_n(tv.data() + static_cast<std::size_t>(ids[r]) * d, d,
                    out.data() + r * static_cast<std::size_t>(d));
    }
    const int pt = table.id;
    return table.tape->emplace("rows_embed", std::move(out), {pt},
                               [pt, ids, d](Tape& t, const Tape::Node& self) {
                                   auto& gt = t.node(pt).grad;
                                   for (std::size_t r = 0; r < ids.size(); ++r) {
                                       for (int c = 0; c < d; ++c) {
                                           gt[static_cast<std::size_t>(ids[r]) * d + c] +=
                                               self.grad[r * static_cast<std::size_t>(d) + c];
                                       }
                                   }
                               });
}

Var rmsnorm_rows(Var x, double eps) {
    const Tensor& xv = x.value();
    if (xv.rank() != 2) throw UsageError("rmsnorm_rows: rank-2 required");
    const int n = xv.rows(), d = xv.cols();
    Tensor out({n, d});
    for (int r = 0; r < n; ++r) {
        double ms = 0.0;
        for (int c = 0; c < d; ++c) ms += static_cast<double>(xv.at(r, c)) * xv.at(r, c);
        const double inv = 1.0 / std::sqrt(ms / d + eps);
        for (int c = 0; c < d; ++c) out.at(r, c) = static_cast<float>(xv.at(r, c) * inv);
    }
    const int pa = x.id;
    return x.tape->emplace(
        "rmsnorm_rows", std::move(out), {pa}, [pa, eps](Tape& t, const Tape::Node& self) {
            const Tensor& xv2 = t.node(pa).value;
            auto& gx = t.node(pa).grad;
            const int n2 = xv2.rows(), d2 = xv2.cols();
            for (int r = 0; r < n2; ++r) {
                double ms = 0.0, gdotx = 0.0;
                for (int c = 0; c < d2; ++c) {
                    const double xc = static_cast<double>(xv2.at(r, c));
                    ms += xc * xc;
                    gdotx += self.grad[static_cast<std::size_t>(r) * d2 + c] * xc;
                }
                const double m2 = ms / d2 + eps;
                const double inv = 1.0 / std::sqrt(m2);
                const double k = gdotx * inv / (m2 * d2);
                for (int c = 0; c < d2; ++c) {
                    gx[static_cast<std::size_t>(r) * d2 + c] +=
                        self.grad[static_cast<std::size_t>(r) * d2 + c] * inv -
                        k * static_cast<double>(xv2.at(r, c));
                }
            }
        });
}

Var causal_softmax_rows(Var scores) {
    const Tensor& sv = scores.value();
    if (sv.rank() != 2 || sv.rows() != sv.cols()) {
        throw UsageError("causal_softmax_rows: square rank-2 required");
    }
    const int n = sv.rows();
    Tensor out({n, n});
    for (int r = 0; r < n; ++r) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int c = 0; c <= r; ++c) mx = std::max(mx, static_cast<double>(sv.at(r, c)));
        double s = 0.0;
        for (int c = 0; c <= r; ++c) s += std::exp(static_cast<double>(sv.at(r, c)) - mx);
        for (int c = 0; c <= r; ++c) {
            out.at(r, c) = static_cast<float>(std::exp(static_cast<double>(sv.at(r, c)) - mx) / s);
        }
    }
    const int pa = scores.id;
    return scores.tape->emplace(
        "causal_softmax_rows", std::move(out), {pa}, [pa](Tape& t, const Tape::Node& self) {
            auto& ga = t.node(pa).grad;
            const int n2 = self.value.rows();
            for (int r = 0; r < n2; ++r) {
                double dot = 0.0;
                for (int c = 0; c <= r; ++c) {
                    dot += self.grad[static_cast<std::size_t>(r) * n2 + c] *
                           static_cast<double>(self.value.at(r, c));
                }
                for (int c = 0; c <= r; ++c) {
                    const double p = static_cast<double>(self.value.at(r, c));
                    ga[static_cast<std::size_t>(r) * n2 + c] +=
                        p * (self.grad[static_cast<std::size_t>(r) * n2 + c] - dot);
                }
            }
        });
}

Var slice_cols(Var x, int c0, int w) {
    const Tensor& xv = x.value();
    if (xv.rank() != 2 || c0 < 0 || c0 + w > xv.cols()) throw UsageError("slice_cols: out of range");
    const int n = xv.rows(), d = xv.cols();
    Tensor out({n, w});
    for (int r = 0; r < n; ++r) {
        std::copy_n(xv.data() + static_cast<std::size_t>(r) * d + c0, w,
                    out.data() + static_cast<std::size_t>(r) * w);
    }
    const int pa = x.id;
    return x.tape->emplace("slice_cols", std::move(out), {pa},
                           [pa, c0, w, d](Tape& t, const Tape::Node& self) {
                               auto& ga = t.node(pa).grad;
                               const int n2 = self.value.rows();
                               for (int r = 0; r < n2; ++r) {
                                   for (int c = 0; c < w; ++c) {
                                       ga[static_cast<std::size_t>(r) * d + c0 + c] +=
                                           self.grad[static_cast<std::size_t>(r) * w + c];
                                   }
                               }
                           });
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw UsageError("concat_cols: no parts");
    const int n = parts[0].value().rows();
    int total = 0;
    std::vector<int> widths;
    std::vector<int> pids;
    for (const Var& p : parts) {
        if (p.value().rank() != 2 || p.value().rows() != n) {
            throw UsageError("concat_cols: row mismatch");
        }
        widths.push_back(p.value().cols());
        pids.push_back(p.id);
        total += p.value().cols();
    }
    Tensor out({n, total});
    int off = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const Tensor& pv = parts[k].value();
        for (int r = 0; r < n; ++r) {
            std::copy_n(pv.data() + static_cast<std::size_t>(r) * widths[k], widths[k],
                        out.data() + static_cast<std::size_t>(r) * total + off);
        }
        off += widths[k];
    }
    return parts[0].tape->emplace(
        "concat_cols", std::move(out), pids,
        [pids, widths, total](Tape& t, const Tape::Node& self) {
            const int n2 = self.value.rows();
            int off2 = 0;
            for (std::size_t k = 0; k < pids.size(); ++k) {
                auto& gp = t.node(pids[k]).grad;
                for (int r = 0; r < n2; ++r) {
                    for (int c = 0; c < widths[k]; ++c) {
                        gp[static_cast<std::size_t>(r) * widths[k] + c] +=
                            self.grad[static_cast<std::size_t>(r) * total + off2 + c];
                    }
                }
                off2 += widths[k];
            }
        });
}

Var softmax_ce_mean(Var logits, std::vector<int> targets) {
    const Tensor& lv = logits.value();
    if (lv.rank() != 2) throw UsageError("softmax_ce_mean: rank-2 logits required");
    const int n = lv.rows(), v = lv.cols();
    if (static_cast<int>(targets.size()) != n) throw UsageError("softmax_ce_mean: target count mismatch");
    double total = 0.0;
    for (int r = 0; r < n; ++r) {
        if (targets[static_cast<std::size_t>(r)] < 0 || targets[static_cast<std::size_t>(r)] >= v) {
            throw UsageError("softmax_ce_mean: target out of range at row " + std::to_string(r));
        }
        double mx = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < v; ++c) mx = std::max(mx, static_cast<double>(lv.at(r, c)));
        double s = 0.0;
        for (int c = 0; c < v; ++c) s += std::exp(static_cast<double>(lv.at(r, c)) - mx);
        total += std::log(s) + mx - static_cast<double>(lv.at(r, targets[static_cast<std::size_t>(r)]));
    }
    const int pa = logits.id;
    return logits.tape->emplace(
        "softmax_ce_mean", Tensor::scalar(static_cast<float>(total / n)), {pa},
        [pa, targets](Tape& t, const Tape::Node& self) {
            const Tensor& lv2 = t.node(pa).value;
            auto& ga = t.node(pa).grad;
            const int n2 = lv2.rows(), v2 = lv2.cols();
            const double g = self.grad[0] / n2;
            for (int r = 0; r < n2; ++r) {
                double mx = -std::numeric_limits<double>::infinity();
                for (int c = 0; c < v2; ++c) mx = std::max(mx, static_cast<double>(lv2.at(r, c)));
                double s = 0.0;
                for (int c = 0; c < v2; ++c) s += std::exp(static_cast<double>(lv2.at(r, c)) - mx);
                for (int c = 0; c < v2; ++c) {
                    const double p = std::exp(static_cast<double>(lv2.at(r, c)) - mx) / s;
                    const double ind = (c == targets[static_cast<std::size_t>(r)]) ? 1.0 : 0.0;
                    ga[static_cast<std::size_t>(r) * v2 + c] += g * (p - ind);
                }
            }
        });
}

Var stop_gradient(Var a) {
    Tensor out = a.value();
    return a.tape->emplace("stop_gradient", std::move(out), {}, nullptr);
}

}  // namespace adk
