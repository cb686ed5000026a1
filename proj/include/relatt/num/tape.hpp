#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "relatt/error.hpp"
#include "relatt/num/index_groups.hpp"
#include "relatt/num/tensor.hpp"

namespace relatt {

struct ValueId {
    int idx = -1;
    bool valid() const { return idx >= 0; }
};

// Reverse-mode gradient tape over dense tensors. It records exactly the
// primitive set the model's forward pass is composed of; replaying the
// recorded closures in reverse order yields exact gradients of a scalar
// output with respect to every registered parameter. Parameters the output
// never touched keep an exact zero gradient. Single-threaded by contract.
class Tape {
public:
    ValueId constant(Tensor v, std::string op = "constant") {
        return push(std::move(v), std::move(op), false, {});
    }

    ValueId param(Tensor v) { return push(std::move(v), "param", true, {}); }

    const Tensor& value(ValueId id) const { return node(id).value; }
    const Tensor& grad(ValueId id) const {
        const Node& n = node(id);
        if (n.grad.empty()) throw ContractError("tape: gradient read before backward");
        return n.grad;
    }
    std::size_t size() const { return nodes_.size(); }

    // ---- primitives -------------------------------------------------------

    ValueId add(ValueId a, ValueId b) {
        const Tensor& ta = value(a);
        const Tensor& tb = value(b);
        if (!ta.same_shape(tb))
            throw ContractError("add: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
        Tensor out = ta;
        for (std::int64_t i = 0; i < out.numel(); ++i) out[i] += tb[i];
        return push(std::move(out), "add", needs(a) || needs(b), [a, b](Tape& t, int self) {
            t.accumulate(a, t.node_grad(self), 1.0);
            t.accumulate(b, t.node_grad(self), 1.0);
        });
    }

    ValueId mul(ValueId a, ValueId b) {
        const Tensor& ta = value(a);
        const Tensor& tb = value(b);
        if (!ta.same_shape(tb))
            throw ContractError("mul: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
        Tensor out = ta;
        for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= tb[i];
        return push(std::move(out), "mul", needs(a) || needs(b), [a, b](Tape& t, int self) {
            const Tensor& g = t.node_grad(self);
            if (t.needs(a)) {
                Tensor& ga = t.grad_slot(a);
                const Tensor& vb = t.value(b);
                for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * vb[i];
            }
            if (t.needs(b)) {
                Tensor& gb = t.grad_slot(b);
                const Tensor& va = t.value(a);
                for (std::int64_t i = 0; i < g.numel(); ++i) gb[i] += g[i] * va[i];
            }
        });
    }

    ValueId scale(ValueId a, double c) {
        Tensor out = value(a);
        for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= c;
        return push(std::move(out), "scale", needs(a), [a, c](Tape& t, int self) {
            t.accumulate(a, t.node_grad(self), c);
        });
    }

    // A [n,k] x B [k,m] -> [n,m]; A [n,k] x v [k] -> [n]
    ValueId matmul(ValueId a, ValueId b) {
        const Tensor& ta = value(a);
        const Tensor& tb = value(b);
        if (ta.ndim() != 2) throw ContractError("matmul: lhs must be a matrix");
        bool vec = tb.ndim() == 1;
        int n = ta.rows(), k = ta.cols();
        int m = vec ? 1 : tb.cols();
        int bk = vec ? tb.length() : tb.rows();
        if (k != bk)
            throw ContractError("matmul: inner dimension mismatch " + ta.shape_str() + " vs " +
                                tb.shape_str());
        Tensor out = vec ? Tensor::zeros({n}) : Tensor::zeros({n, m});
        // ikj loop order keeps the inner loop contiguous
        for (int i = 0; i < n; ++i)
            for (int kk = 0; kk < k; ++kk) {
                double aik = ta[static_cast<std::int64_t>(i) * k + kk];
                if (aik == 0.0) continue;
                const double* brow = tb.data().data() + static_cast<std::int64_t>(kk) * m;
                double* orow = out.data().data() + static_cast<std::int64_t>(i) * m;
                for (int j = 0; j < m; ++j) orow[j] += aik * brow[j];
            }
        return push(std::move(out), "matmul", needs(a) || needs(b), [a, b, n, k, m](Tape& t, int self) {
            const Tensor& g = t.node_grad(self);
            const Tensor& va = t.value(a);
            const Tensor& vb = t.value(b);
            if (t.needs(a)) {  // dA += G * B^T
                Tensor& ga = t.grad_slot(a);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < m; ++j) {
                        double gij = g[static_cast<std::int64_t>(i) * m + j];
                        if (gij == 0.0) continue;
                        for (int kk = 0; kk < k; ++kk)
                            ga[static_cast<std::int64_t>(i) * k + kk] +=
                                gij * vb[static_cast<std::int64_t>(kk) * m + j];
                    }
            }
            if (t.needs(b)) {  // dB += A^T * G
                Tensor& gb = t.grad_slot(b);
                for (int i = 0; i < n; ++i)
                    for (int kk = 0; kk < k; ++kk) {
                        double aik = va[static_cast<std::int64_t>(i) * k + kk];
                        if (aik == 0.0) continue;
                        for (int j = 0; j < m; ++j)
                            gb[static_cast<std::int64_t>(kk) * m + j] +=
                                aik * g[static_cast<std::int64_t>(i) * m + j];
                    }
            }
        });
    }

    // rank-1 concatenation
    ValueId concat(std::span<const ValueId> parts) {
        if (parts.empty()) throw ContractError("concat: no inputs");
        std::vector<double> data;
        bool any_grad = false;
        std::vector<ValueId> ids(parts.begin(), parts.end());
        for (ValueId p : ids) {
            const Tensor& tp = value(p);
            if (tp.ndim() != 1) throw ContractError("concat: rank-1 inputs only");
            data.insert(data.end(), tp.data().begin(), tp.data().end());
            any_grad = any_grad || needs(p);
        }
        return push(Tensor::vector(std::move(data)), "concat", any_grad,
                    [ids](Tape& t, int self) {
                        const Tensor& g = t.node_grad(self);
                        std::int64_t off = 0;
                        for (ValueId p : ids) {
                            std::int64_t len = t.value(p).numel();
                            if (t.needs(p)) {
                                Tensor& gp = t.grad_slot(p);
                                for (std::int64_t i = 0; i < len; ++i) gp[i] += g[off + i];
                            }
                            off += len;
                        }
                    });
    }

    // contiguous slice of the flattened input, returned as rank-1
    ValueId slice(ValueId a, std::int64_t offset, std::int64_t len) {
        const Tensor& ta = value(a);
        if (offset < 0 || len < 0 || offset + len > ta.numel())
            throw ContractError("slice: range out of bounds");
        std::vector<double> data(ta.data().begin() + offset, ta.data().begin() + offset + len);
        return push(Tensor::vector(std::move(data)), "slice", needs(a),
                    [a, offset, len](Tape& t, int self) {
                        if (!t.needs(a)) return;
                        const Tensor& g = t.node_grad(self);
                        Tensor& ga = t.grad_slot(a);
                        for (std::int64_t i = 0; i < len; ++i) ga[offset + i] += g[i];
                    });
    }

    // out[k, :] = a[idx[k], :]
    ValueId gather_rows(ValueId a, std::vector<int> idx) {
        const Tensor& ta = value(a);
        if (ta.ndim() != 2) throw ContractError("gather_rows: matrix input required");
        int d = ta.cols();
        Tensor out = Tensor::zeros({static_cast<int>(idx.size()), d});
        for (std::size_t kk = 0; kk < idx.size(); ++kk) {
            if (idx[kk] < 0 || idx[kk] >= ta.rows())
                throw ContractError("gather_rows: index out of range");
            for (int j = 0; j < d; ++j) out.at(static_cast<int>(kk), j) = ta.at(idx[kk], j);
        }
        return push(std::move(out), "gather_rows", needs(a),
                    [a, idx = std::move(idx), d](Tape& t, int self) {
                        if (!t.needs(a)) return;
                        const Tensor& g = t.node_grad(self);
                        Tensor& ga = t.grad_slot(a);
                        for (std::size_t kk = 0; kk < idx.size(); ++kk)
                            for (int j = 0; j < d; ++j)
                                ga[static_cast<std::int64_t>(idx[kk]) * d + j] +=
                                    g[static_cast<std::int64_t>(kk) * d + j];
                    });
    }

    // rank-1 gather: out[k] = a[idx[k]]
    ValueId gather_elems(ValueId a, std::vector<int> idx) {
        const Tensor& ta = value(a);
        if (ta.ndim() != 1) throw ContractError("gather_elems: rank-1 input required");
        Tensor out = Tensor::zeros({static_cast<int>(idx.size())});
        for (std::size_t kk = 0; kk < idx.size(); ++kk) {
            if (idx[kk] < 0 || idx[kk] >= ta.length())
                throw ContractError("gather_elems: index out of range");
            out[static_cast<std::int64_t>(kk)] = ta[idx[kk]];
        }
        return push(std::move(out), "gather_elems", needs(a),
                    [a, idx = std::move(idx)](Tape& t, int self) {
                        if (!t.needs(a)) return;
                        const Tensor& g = t.node_grad(self);
                        Tensor& ga = t.grad_slot(a);
                        for (std::size_t kk = 0; kk < idx.size(); ++kk)
                            ga[idx[kk]] += g[static_cast<std::int64_t>(kk)];
                    });
    }

    // out = zeros[n_rows, d]; out[idx[k], :] += rows[k, :]  (duplicates accumulate)
    ValueId scatter_rows(int n_rows, ValueId rows, std::vector<int> idx) {
        const Tensor& tr = value(rows);
        if (tr.ndim() != 2) throw ContractError("scatter_rows: matrix input required");
        if (static_cast<int>(idx.size()) != tr.rows())
            throw ContractError("scatter_rows: one index per row required");
        int d = tr.cols();
        Tensor out = Tensor::zeros({n_rows, d});
        for (std::size_t kk = 0; kk < idx.size(); ++kk) {
            if (idx[kk] < 0 || idx[kk] >= n_rows)
                throw ContractError("scatter_rows: index out of range");
            for (int j = 0; j < d; ++j) out.at(idx[kk], j) += tr.at(static_cast<int>(kk), j);
        }
        return push(std::move(out), "scatter_rows", needs(rows),
                    [rows, idx = std::move(idx), d](Tape& t, int self) {
                        if (!t.needs(rows)) return;
                        const Tensor& g = t.node_grad(self);
                        Tensor& gr = t.grad_slot(rows);
                        for (std::size_t kk = 0; kk < idx.size(); ++kk)
                            for (int j = 0; j < d; ++j)
                                gr[static_cast<std::int64_t>(kk) * d + j] +=
                                    g[static_cast<std::int64_t>(idx[kk]) * d + j];
                    });
    }

    // out[i, :] = mat[i, :] * w[i]
    ValueId scale_rows(ValueId mat, ValueId w) {
        const Tensor& tm = value(mat);
        const Tensor& tw = value(w);
        if (tm.ndim() != 2 || tw.ndim() != 1 || tw.length() != tm.rows())
            throw ContractError("scale_rows: need matrix [n,d] and weights [n]");
        int n = tm.rows(), d = tm.cols();
        Tensor out = tm;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) out.at(i, j) *= tw[i];
        return push(std::move(out), "scale_rows", needs(mat) || needs(w),
                    [mat, w, n, d](Tape& t, int self) {
                        const Tensor& g = t.node_grad(self);
                        if (t.needs(mat)) {
                            Tensor& gm = t.grad_slot(mat);
                            const Tensor& vw = t.value(w);
                            for (int i = 0; i < n; ++i)
                                for (int j = 0; j < d; ++j)
                                    gm[static_cast<std::int64_t>(i) * d + j] +=
                                        g[static_cast<std::int64_t>(i) * d + j] * vw[i];
                        }
                        if (t.needs(w)) {
                            Tensor& gw = t.grad_slot(w);
                            const Tensor& vm = t.value(mat);
                            for (int i = 0; i < n; ++i) {
                                double s = 0.0;
                                for (int j = 0; j < d; ++j)
                                    s += g[static_cast<std::int64_t>(i) * d + j] *
                                         vm[static_cast<std::int64_t>(i) * d + j];
                                gw[i] += s;
                            }
                        }
                    });
    }

    // [n,d] -> [n]
    ValueId row_sum(ValueId mat) {
        const Tensor& tm = value(mat);
        if (tm.ndim() != 2) throw ContractError("row_sum: matrix input required");
        int n = tm.rows(), d = tm.cols();
        Tensor out = Tensor::zeros({n});
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < d; ++j) s += tm.at(i, j);
            out[i] = s;
        }
        return push(std::move(out), "row_sum", needs(mat), [mat, n, d](Tape& t, int self) {
            if (!t.needs(mat)) return;
            const Tensor& g = t.node_grad(self);
            Tensor& gm = t.grad_slot(mat);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < d; ++j) gm[static_cast<std::int64_t>(i) * d + j] += g[i];
        });
    }

    // Softmax within each group of the rank-1 input; per-group max subtraction
    // keeps the exponentials bounded. Elements outside every group would be a
    // contract violation of the caller (groups must partition the input).
    ValueId group_softmax(ValueId logits, const IndexGroups& groups) {
        const Tensor& tl = value(logits);
        if (tl.ndim() != 1) throw ContractError("group_softmax: rank-1 input required");
        Tensor out = Tensor::zeros({tl.length()});
        for (int g = 0; g < groups.count(); ++g) {
            auto ids = groups.group(g);
            if (ids.empty()) continue;
            double mx = tl[ids[0]];
            for (int e : ids) mx = std::max(mx, tl[e]);
            double denom = 0.0;
            for (int e : ids) denom += std::exp(tl[e] - mx);
            for (int e : ids) out[e] = std::exp(tl[e] - mx) / denom;
        }
        // backward needs the group layout; copy it into the closure
        IndexGroups gcopy = groups;
        return push(std::move(out), "group_softmax", needs(logits),
                    [logits, gcopy = std::move(gcopy)](Tape& t, int self) {
                        if (!t.needs(logits)) return;
                        const Tensor& g = t.node_grad(self);
                        const Tensor& y = t.value(ValueId{self});
                        Tensor& gl = t.grad_slot(logits);
                        for (int gi = 0; gi < gcopy.count(); ++gi) {
                            auto ids = gcopy.group(gi);
                            if (ids.empty()) continue;
                            double dot = 0.0;
                            for (int e : ids) dot += g[e] * y[e];
                            for (int e : ids) gl[e] += y[e] * (g[e] - dot);
                        }
                    });
    }

    ValueId relu(ValueId a) {
        Tensor out = value(a);
        for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
        return push(std::move(out), "relu", needs(a), [a](Tape& t, int self) {
            if (!t.needs(a)) return;
            const Tensor& g = t.node_grad(self);
            const Tensor& va = t.value(a);
            Tensor& ga = t.grad_slot(a);
            for (std::int64_t i = 0; i < g.numel(); ++i)
                if (va[i] > 0.0) ga[i] += g[i];
        });
    }

    ValueId leaky_relu(ValueId a, double slope) {
        Tensor out = value(a);
        for (std::int64_t i = 0; i < out.numel(); ++i)
            if (out[i] < 0.0) out[i] *= slope;
        return push(std::move(out), "leaky_relu", needs(a), [a, slope](Tape& t, int self) {
            if (!t.needs(a)) return;
            const Tensor& g = t.node_grad(self);
            const Tensor& va = t.value(a);
            Tensor& ga = t.grad_slot(a);
            for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * (va[i] > 0.0 ? 1.0 : slope);
        });
    }

    ValueId sigmoid(ValueId a) {
        Tensor out = value(a);
        for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = stable_sigmoid(out[i]);
        return push(std::move(out), "sigmoid", needs(a), [a](Tape& t, int self) {
            if (!t.needs(a)) return;
            const Tensor& g = t.node_grad(self);
            const Tensor& y = t.value(ValueId{self});
            Tensor& ga = t.grad_slot(a);
            for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
        });
    }

    ValueId mean(ValueId a) {
        const Tensor& ta = value(a);
        if (ta.numel() == 0) throw ContractError("mean: empty input");
        double s = 0.0;
        for (std::int64_t i = 0; i < ta.numel(); ++i) s += ta[i];
        double inv = 1.0 / static_cast<double>(ta.numel());
        return push(Tensor::scalar(s * inv), "mean", needs(a), [a, inv](Tape& t, int self) {
            if (!t.needs(a)) return;
            double g = t.node_grad(self)[0] * inv;
            Tensor& ga = t.grad_slot(a);
            for (std::int64_t i = 0; i < ga.numel(); ++i) ga[i] += g;
        });
    }

    // W_r = sum_b coeffs[r, b] * bases[b]
    ValueId basis_combine(std::span<const ValueId> bases, ValueId coeffs, int relation) {
        if (bases.empty()) throw ContractError("basis_combine: at least one basis required");
        const Tensor& tc = value(coeffs);
        if (tc.ndim() != 2 || tc.cols() != static_cast<int>(bases.size()))
            throw ContractError("basis_combine: coeffs must be [K, B]");
        if (relation < 0 || relation >= tc.rows())
            throw ContractError("basis_combine: relation out of range");
        std::vector<ValueId> ids(bases.begin(), bases.end());
        const Tensor& b0 = value(ids[0]);
        Tensor out = Tensor::zeros(b0.shape());
        bool any_grad = needs(coeffs);
        for (std::size_t b = 0; b < ids.size(); ++b) {
            const Tensor& vb = value(ids[b]);
            if (!vb.same_shape(b0)) throw ContractError("basis_combine: basis shape mismatch");
            double c = tc.at(relation, static_cast<int>(b));
            for (std::int64_t i = 0; i < out.numel(); ++i) out[i] += c * vb[i];
            any_grad = any_grad || needs(ids[b]);
        }
        int n_bases = static_cast<int>(ids.size());
        return push(std::move(out), "basis_combine", any_grad,
                    [ids, coeffs, relation, n_bases](Tape& t, int self) {
                        const Tensor& g = t.node_grad(self);
                        const Tensor& tc = t.value(coeffs);
                        for (int b = 0; b < n_bases; ++b) {
                            if (t.needs(ids[b])) {
                                Tensor& gb = t.grad_slot(ids[b]);
                                double c = tc.at(relation, b);
                                for (std::int64_t i = 0; i < g.numel(); ++i) gb[i] += c * g[i];
                            }
                            if (t.needs(coeffs)) {
                                const Tensor& vb = t.value(ids[b]);
                                double dot = 0.0;
                                for (std::int64_t i = 0; i < g.numel(); ++i) dot += g[i] * vb[i];
                                t.grad_slot(coeffs).at(relation, b) += dot;
                            }
                        }
                    });
    }

    // mean_i [ softplus(s_i) - y_i * s_i ]  ==  mean binary cross-entropy of
    // sigmoid(s) against labels y, in log-sum-exp form.
    ValueId bce_with_logits(ValueId scores, Tensor labels) {
        const Tensor& ts = value(scores);
        if (ts.ndim() != 1) throw ContractError("bce_with_logits: rank-1 scores required");
        if (ts.numel() == 0) throw ContractError("bce_with_logits: empty batch");
        if (labels.numel() != ts.numel())
            throw ContractError("bce_with_logits: scores/labels length mismatch");
        double total = 0.0;
        for (std::int64_t i = 0; i < ts.numel(); ++i)
            total += softplus(ts[i]) - labels[i] * ts[i];
        double inv = 1.0 / static_cast<double>(ts.numel());
        return push(Tensor::scalar(total * inv), "bce_with_logits", needs(scores),
                    [scores, labels = std::move(labels), inv](Tape& t, int self) {
                        if (!t.needs(scores)) return;
                        double g = t.node_grad(self)[0] * inv;
                        const Tensor& vs = t.value(scores);
                        Tensor& gs = t.grad_slot(scores);
                        for (std::int64_t i = 0; i < vs.numel(); ++i)
                            gs[i] += g * (stable_sigmoid(vs[i]) - labels[i]);
                    });
    }

    // ---- backward ---------------------------------------------------------

    // Seeds d(loss)/d(loss) = 1 and replays the tape in reverse. Returns the
    // loss value. Every node gets a gradient slot, so untouched parameters
    // report exact zeros.
    double backward(ValueId loss) {
        const Tensor& tl = value(loss);
        if (tl.numel() != 1)
            throw ContractError("backward: loss must be scalar, got shape " + tl.shape_str());
        for (Node& n : nodes_) n.grad = Tensor::zeros(n.value.shape());
        nodes_[loss.idx].grad[0] = 1.0;
        for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
            Node& n = nodes_[i];
            if (n.back && n.needs_grad) n.back(*this, i);
        }
        return tl[0];
    }

    static double stable_sigmoid(double x) {
        if (x >= 0.0) {
            double z = std::exp(-x);
            return 1.0 / (1.0 + z);
        }
        double z = std::exp(x);
        return z / (1.0 + z);
    }

    static double softplus(double x) {
        return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
    }

private:
    friend struct TapeAccess;
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Tape&, int)> back;
        std::string op;
        bool needs_grad = false;
    };

    std::vector<Node> nodes_;

    const Node& node(ValueId id) const {
        if (!id.valid() || id.idx >= static_cast<int>(nodes_.size()))
            throw ContractError("tape: invalid value id");
        return nodes_[id.idx];
    }

    bool needs(ValueId id) const { return node(id).needs_grad; }

    const Tensor& node_grad(int idx) const { return nodes_[idx].grad; }

    Tensor& grad_slot(ValueId id) { return nodes_[id.idx].grad; }

    void accumulate(ValueId id, const Tensor& g, double c) {
        if (!needs(id)) return;
        Tensor& dst = grad_slot(id);
        for (std::int64_t i = 0; i < g.numel(); ++i) dst[i] += c * g[i];
    }

    ValueId push(Tensor v, std::string op, bool needs_grad, std::function<void(Tape&, int)> back) {
        if (!v.all_finite())
            throw NumericError("non-finite value produced by operation '" + op + "'");
        nodes_.push_back(Node{std::move(v), Tensor{}, std::move(back), std::move(op), needs_grad});
        return ValueId{static_cast<int>(nodes_.size()) - 1};
    }
};

}  // namespace relatt
