#pragma once

// Differentiable ops over 2-D tensors: matmul, adds, elementwise mul,
// row softmax, layernorm, gelu, embedding gather, causal multi-head
// attention, dropout, and cross-entropy from logits. Each op computes the
// forward value and, when the tape has gradients enabled, attaches an exact
// reverse-mode backward closure. Dense kernels go through Eigen.

#include <Eigen/Dense>
#include <cmath>

#include "aot/nn/tensor.hpp"

namespace aot::nn {

template <class T>
using EMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using EVec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <class T>
Eigen::Map<EMat<T>> mat_of(Tensor<T>* t) {
    if (t->shape.size() != 2) throw InvalidArgument("op expects a 2-D tensor");
    return Eigen::Map<EMat<T>>(t->val.data(), t->shape[0], t->shape[1]);
}

template <class T>
Eigen::Map<EMat<T>> grad_of(Tensor<T>* t) {
    t->ensure_grad();
    return Eigen::Map<EMat<T>>(t->grad.data(), t->shape[0], t->shape[1]);
}

template <class T>
void check_same_shape(const Tensor<T>* a, const Tensor<T>* b, const char* op) {
    if (a->shape != b->shape) throw InvalidArgument(std::string(op) + ": shape mismatch");
}

// ----------------------------- matmul -----------------------------

template <class T>
Tensor<T>* matmul(Tape<T>& tape, Tensor<T>* a, Tensor<T>* b) {
    if (a->shape.size() != 2 || b->shape.size() != 2 || a->shape[1] != b->shape[0])
        throw InvalidArgument("matmul: incompatible shapes");
    Tensor<T>* out = tape.make({a->shape[0], b->shape[1]});
    mat_of(out).noalias() = mat_of(a) * mat_of(b);
    if (tape.grad_enabled()) {
        out->backward_fn = [a, b, out] {
            grad_of(a).noalias() += grad_of(out) * mat_of(b).transpose();
            grad_of(b).noalias() += mat_of(a).transpose() * grad_of(out);
        };
    }
    return out;
}

// ----------------------------- adds / mul -----------------------------

template <class T>
Tensor<T>* add(Tape<T>& tape, Tensor<T>* a, Tensor<T>* b) {
    check_same_shape(a, b, "add");
    Tensor<T>* out = tape.make(a->shape);
    for (size_t i = 0; i < out->val.size(); ++i) out->val[i] = a->val[i] + b->val[i];
    if (tape.grad_enabled()) {
        out->backward_fn = [a, b, out] {
            a->ensure_grad();
            b->ensure_grad();
            for (size_t i = 0; i < out->grad.size(); ++i) {
                a->grad[i] += out->grad[i];
                b->grad[i] += out->grad[i];
            }
        };
    }
    return out;
}

// x (R x C) + row vector b (C), broadcast over rows.
template <class T>
Tensor<T>* add_rowvec(Tape<T>& tape, Tensor<T>* x, Tensor<T>* b) {
    if (x->shape.size() != 2 || b->numel() != x->shape[1])
        throw InvalidArgument("add_rowvec: bias length must match columns");
    Tensor<T>* out = tape.make(x->shape);
    auto xm = mat_of(x);
    auto om = mat_of(out);
    Eigen::Map<EVec<T>> bv(b->val.data(), b->numel());
    om = xm.rowwise() + bv.transpose();
    if (tape.grad_enabled()) {
        out->backward_fn = [x, b, out] {
            grad_of(x) += grad_of(out);
            b->ensure_grad();
            Eigen::Map<EVec<T>> bg(b->grad.data(), b->numel());
            bg += grad_of(out).colwise().sum().transpose();
        };
    }
    return out;
}

template <class T>
Tensor<T>* mul(Tape<T>& tape, Tensor<T>* a, Tensor<T>* b) {
    check_same_shape(a, b, "mul");
    Tensor<T>* out = tape.make(a->shape);
    for (size_t i = 0; i < out->val.size(); ++i) out->val[i] = a->val[i] * b->val[i];
    if (tape.grad_enabled()) {
        out->backward_fn = [a, b, out] {
            a->ensure_grad();
            b->ensure_grad();
            for (size_t i = 0; i < out->grad.size(); ++i) {
                a->grad[i] += out->grad[i] * b->val[i];
                b->grad[i] += out->grad[i] * a->val[i];
            }
        };
    }
    return out;
}

// ----------------------------- softmax -----------------------------

template <class T>
Tensor<T>* softmax_rows(Tape<T>& tape, Tensor<T>* x) {
    if (x->shape.size() != 2) throw InvalidArgument("softmax_rows: expects 2-D input");
    Tensor<T>* out = tape.make(x->shape);
    auto xm = mat_of(x);
    auto pm = mat_of(out);
    for (Eigen::Index r = 0; r < xm.rows(); ++r) {
        T mx = xm.row(r).maxCoeff();
        pm.row(r) = (xm.row(r).array() - mx).exp().matrix();
        pm.row(r) /= pm.row(r).sum();
    }
    if (tape.grad_enabled()) {
        out->backward_fn = [x, out] {
            auto pm = mat_of(out);
            auto pg = grad_of(out);
            auto xg = grad_of(x);
            for (Eigen::Index r = 0; r < pm.rows(); ++r) {
                T dot = pg.row(r).cwiseProduct(pm.row(r)).sum();
                xg.row(r).array() +=
                    pm.row(r).array() * (pg.row(r).array() - dot);
            }
        };
    }
    return out;
}

// ----------------------------- layernorm -----------------------------

template <class T>
Tensor<T>* layernorm(Tape<T>& tape, Tensor<T>* x, Tensor<T>* gamma, Tensor<T>* beta,
                     T eps = T(1e-5)) {
    if (x->shape.size() != 2 || gamma->numel() != x->shape[1] || beta->numel() != x->shape[1])
        throw InvalidArgument("layernorm: gamma/beta length must match columns");
    const Eigen::Index rows = x->shape[0], cols = x->shape[1];
    Tensor<T>* out = tape.make(x->shape);
    // xhat cached for backward
    auto xhat = std::make_shared<EMat<T>>(rows, cols);
    auto rstd = std::make_shared<EVec<T>>(rows);
    auto xm = mat_of(x);
    auto om = mat_of(out);
    Eigen::Map<EVec<T>> gv(gamma->val.data(), cols);
    Eigen::Map<EVec<T>> bv(beta->val.data(), cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        T mu = xm.row(r).mean();
        T var = (xm.row(r).array() - mu).square().mean();
        T rs = T(1) / std::sqrt(var + eps);
        (*rstd)(r) = rs;
        xhat->row(r) = ((xm.row(r).array() - mu) * rs).matrix();
        om.row(r) =
            ((xhat->row(r).array() * gv.transpose().array()) + bv.transpose().array()).matrix();
    }
    if (tape.grad_enabled()) {
        out->backward_fn = [x, gamma, beta, out, xhat, rstd] {
            const Eigen::Index rows = x->shape[0], cols = x->shape[1];
            auto og = grad_of(out);
            auto xg = grad_of(x);
            gamma->ensure_grad();
            beta->ensure_grad();
            Eigen::Map<EVec<T>> gv(gamma->val.data(), cols);
            Eigen::Map<EVec<T>> gg(gamma->grad.data(), cols);
            Eigen::Map<EVec<T>> bg(beta->grad.data(), cols);
            for (Eigen::Index r = 0; r < rows; ++r) {
                gg += og.row(r).cwiseProduct(xhat->row(r)).transpose();
                bg += og.row(r).transpose();
                EVec<T> dxhat = og.row(r).cwiseProduct(gv.transpose()).transpose();
                T mean_dxhat = dxhat.mean();
                T mean_dxhat_xhat = dxhat.cwiseProduct(xhat->row(r).transpose()).mean();
                xg.row(r) += ((dxhat.array() - mean_dxhat -
                               xhat->row(r).transpose().array() * mean_dxhat_xhat) *
                              (*rstd)(r))
                                 .matrix()
                                 .transpose();
            }
        };
    }
    return out;
}

// ----------------------------- gelu -----------------------------

// tanh approximation, as in the GPT-2 lineage.
template <class T>
Tensor<T>* gelu(Tape<T>& tape, Tensor<T>* x) {
    Tensor<T>* out = tape.make(x->shape);
    const T c = T(0.7978845608028654);  // sqrt(2/pi)
    const T a = T(0.044715);
    for (size_t i = 0; i < x->val.size(); ++i) {
        T v = x->val[i];
        out->val[i] = T(0.5) * v * (T(1) + std::tanh(c * (v + a * v * v * v)));
    }
    if (tape.grad_enabled()) {
        out->backward_fn = [x, out, c, a] {
            x->ensure_grad();
            for (size_t i = 0; i < x->val.size(); ++i) {
                T v = x->val[i];
                T u = c * (v + a * v * v * v);
                T t = std::tanh(u);
                T du = c * (T(1) + T(3) * a * v * v);
                T d = T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * du;
                x->grad[i] += out->grad[i] * d;
            }
        };
    }
    return out;
}

// ----------------------------- embedding -----------------------------

template <class T>
Tensor<T>* embedding(Tape<T>& tape, Tensor<T>* table, const std::vector<int>& ids) {
    if (table->shape.size() != 2) throw InvalidArgument("embedding: table must be 2-D");
    const int64_t v = table->shape[0], d = table->shape[1];
    for (int id : ids)
        if (id < 0 || id >= v)
            throw InvalidArgument("embedding: id " + std::to_string(id) + " out of range");
    Tensor<T>* out = tape.make({int64_t(ids.size()), d});
    auto tm = mat_of(table);
    auto om = mat_of(out);
    for (size_t r = 0; r < ids.size(); ++r) om.row(Eigen::Index(r)) = tm.row(ids[size_t(r)]);
    if (tape.grad_enabled()) {
        auto ids_copy = std::make_shared<std::vector<int>>(ids);
        out->backward_fn = [table, out, ids_copy] {
            table->ensure_grad();
            auto tg = grad_of(table);
            auto og = grad_of(out);
            for (size_t r = 0; r < ids_copy->size(); ++r)
                tg.row((*ids_copy)[r]) += og.row(Eigen::Index(r));
        };
    }
    return out;
}

// ----------------------------- row gather -----------------------------

// Copies the selected rows of a 2-D tensor; backward scatter-adds.
template <class T>
Tensor<T>* gather_rows(Tape<T>& tape, Tensor<T>* x, const std::vector<int>& rows) {
    if (x->shape.size() != 2) throw InvalidArgument("gather_rows: expects 2-D input");
    for (int r : rows)
        if (r < 0 || r >= x->shape[0]) throw InvalidArgument("gather_rows: row out of range");
    Tensor<T>* out = tape.make({int64_t(rows.size()), x->shape[1]});
    auto xm = mat_of(x);
    auto om = mat_of(out);
    for (size_t i = 0; i < rows.size(); ++i) om.row(Eigen::Index(i)) = xm.row(rows[i]);
    if (tape.grad_enabled()) {
        auto rows_copy = std::make_shared<std::vector<int>>(rows);
        out->backward_fn = [x, out, rows_copy] {
            auto xg = grad_of(x);
            auto og = grad_of(out);
            for (size_t i = 0; i < rows_copy->size(); ++i)
                xg.row((*rows_copy)[i]) += og.row(Eigen::Index(i));
        };
    }
    return out;
}

// ----------------------------- dropout -----------------------------

// Inverted dropout; at p == 0 or eval time this is the identity node.
template <class T>
Tensor<T>* dropout(Tape<T>& tape, Tensor<T>* x, double p, Rng& rng, bool train) {
    if (p < 0.0 || p >= 1.0) throw InvalidArgument("dropout: p must be in [0,1)");
    if (!train || p == 0.0) return x;
    Tensor<T>* out = tape.make(x->shape);
    auto mask = std::make_shared<std::vector<T>>(x->val.size());
    const T keep_scale = T(1.0 / (1.0 - p));
    for (size_t i = 0; i < x->val.size(); ++i) {
        (*mask)[i] = uniform_unit(rng) < p ? T(0) : keep_scale;
        out->val[i] = x->val[i] * (*mask)[i];
    }
    if (tape.grad_enabled()) {
        out->backward_fn = [x, out, mask] {
            x->ensure_grad();
            for (size_t i = 0; i < x->grad.size(); ++i) x->grad[i] += out->grad[i] * (*mask)[i];
        };
    }
    return out;
}

// ----------------------------- causal attention -----------------------------

// Multi-head causal self-attention over a fused qkv input of shape
// (B*n, 3*d). Position t never attends to positions > t. Attention dropout
// is applied to the softmaxed weights.
template <class T>
Tensor<T>* causal_self_attention(Tape<T>& tape, Tensor<T>* qkv, int batch, int n, int heads,
                                 double attn_p, Rng& rng, bool train) {
    if (qkv->shape.size() != 2 || qkv->shape[0] != int64_t(batch) * n || qkv->shape[1] % 3 != 0)
        throw InvalidArgument("causal_self_attention: qkv must be (B*n, 3d)");
    const int d = int(qkv->shape[1] / 3);
    if (d % heads != 0) throw InvalidArgument("causal_self_attention: d not divisible by heads");
    const int hd = d / heads;
    const T scale = T(1) / std::sqrt(T(hd));

    Tensor<T>* out = tape.make({int64_t(batch) * n, int64_t(d)});
    // softmaxed weights (and dropout multipliers) saved for backward
    auto probs = std::make_shared<std::vector<EMat<T>>>();
    probs->reserve(size_t(batch) * size_t(heads));
    const bool use_dropout = train && attn_p > 0.0;
    auto drop = std::make_shared<std::vector<EMat<T>>>();
    if (use_dropout) drop->reserve(size_t(batch) * size_t(heads));
    const T keep_scale = T(1.0 / (1.0 - attn_p));

    auto qm = mat_of(qkv);
    auto om = mat_of(out);
    for (int b = 0; b < batch; ++b) {
        for (int h = 0; h < heads; ++h) {
            auto q = qm.block(b * n, h * hd, n, hd);
            auto k = qm.block(b * n, d + h * hd, n, hd);
            auto v = qm.block(b * n, 2 * d + h * hd, n, hd);
            EMat<T> p(n, n);
            p.setZero();
            for (int i = 0; i < n; ++i) {
                // softmax over the causal prefix j <= i
                Eigen::Matrix<T, 1, Eigen::Dynamic> s =
                    (q.row(i) * k.topRows(i + 1).transpose()) * scale;
                T mx = s.maxCoeff();
                s = (s.array() - mx).exp().matrix();
                s /= s.sum();
                p.row(i).head(i + 1) = s;
            }
            probs->push_back(p);
            if (use_dropout) {
                EMat<T> m(n, n);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        m(i, j) = j > i ? T(0)
                                        : (uniform_unit(rng) < attn_p ? T(0) : keep_scale);
                p = p.cwiseProduct(m);
                drop->push_back(std::move(m));
            }
            om.block(b * n, h * hd, n, hd).noalias() = p * v;
        }
    }

    if (tape.grad_enabled()) {
        out->backward_fn = [qkv, out, probs, drop, use_dropout, batch, n, heads, d, hd, scale] {
            auto qm = mat_of(qkv);
            auto qg = grad_of(qkv);
            auto og = grad_of(out);
            for (int b = 0; b < batch; ++b) {
                for (int h = 0; h < heads; ++h) {
                    const size_t idx = size_t(b) * size_t(heads) + size_t(h);
                    auto q = qm.block(b * n, h * hd, n, hd);
                    auto k = qm.block(b * n, d + h * hd, n, hd);
                    auto v = qm.block(b * n, 2 * d + h * hd, n, hd);
                    const EMat<T>& p = (*probs)[idx];
                    EMat<T> p_used = use_dropout ? p.cwiseProduct((*drop)[idx]) : p;
                    auto dout = og.block(b * n, h * hd, n, hd);
                    EMat<T> dp_used = dout * v.transpose();       // (n,n)
                    EMat<T> dv = p_used.transpose() * dout;       // (n,hd)
                    EMat<T> dp = use_dropout ? EMat<T>(dp_used.cwiseProduct((*drop)[idx]))
                                             : std::move(dp_used);
                    // softmax backward, rows independent; masked entries
                    // carry p == 0 so they contribute nothing
                    EMat<T> ds(n, n);
                    for (int i = 0; i < n; ++i) {
                        T dot = dp.row(i).cwiseProduct(p.row(i)).sum();
                        ds.row(i) = (p.row(i).array() * (dp.row(i).array() - dot)).matrix();
                    }
                    qg.block(b * n, h * hd, n, hd).noalias() += scale * (ds * k);
                    qg.block(b * n, d + h * hd, n, hd).noalias() +=
                        scale * (ds.transpose() * q);
                    qg.block(b * n, 2 * d + h * hd, n, hd).noalias() += dv;
                }
            }
        };
    }
    return out;
}

// ----------------------------- cross entropy -----------------------------

template <class T>
struct CrossEntropyOut {
    Tensor<T>* mean_loss = nullptr;   // scalar, on tape
    std::vector<T> per_row;           // -ln p(target) per row, detached
};

// Mean cross-entropy in nats over rows of logits; exact log-sum-exp.
// Throws NumericFault if the result is not finite.
template <class T>
CrossEntropyOut<T> cross_entropy_from_logits(Tape<T>& tape, Tensor<T>* logits,
                                             const std::vector<int>& targets) {
    if (logits->shape.size() != 2 || int64_t(targets.size()) != logits->shape[0])
        throw InvalidArgument("cross_entropy_from_logits: one target per row required");
    const Eigen::Index rows = logits->shape[0], cols = logits->shape[1];
    for (int t : targets)
        if (t < 0 || t >= cols)
            throw InvalidArgument("cross_entropy_from_logits: target out of range");
    CrossEntropyOut<T> res;
    res.per_row.resize(size_t(rows));
    auto probs = std::make_shared<EMat<T>>(rows, cols);
    auto lm = mat_of(logits);
    double total = 0.0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        T mx = lm.row(r).maxCoeff();
        probs->row(r) = (lm.row(r).array() - mx).exp().matrix();
        T z = probs->row(r).sum();
        probs->row(r) /= z;
        T loss = std::log(z) + mx - lm(r, targets[size_t(r)]);
        res.per_row[size_t(r)] = loss;
        total += double(loss);
    }
    if (!std::isfinite(total))
        throw NumericFault("cross_entropy_from_logits: non-finite loss");
    Tensor<T>* mean = tape.make({1});
    mean->val[0] = T(total / double(rows));
    if (tape.grad_enabled()) {
        auto targets_copy = std::make_shared<std::vector<int>>(targets);
        mean->backward_fn = [logits, mean, probs, targets_copy, rows] {
            auto lg = grad_of(logits);
            T g = mean->grad[0] / T(rows);
            lg += *probs * g;
            for (Eigen::Index r = 0; r < rows; ++r)
                lg(r, (*targets_copy)[size_t(r)]) -= g;
        };
    }
    res.mean_loss = mean;
    return res;
}

// ----------------------------- test helper -----------------------------

// Scalar loss sum_i w_i * x_i; the standard probe for gradient checking.
template <class T>
Tensor<T>* weighted_sum(Tape<T>& tape, Tensor<T>* x, const std::vector<T>& w) {
    if (w.size() != x->val.size()) throw InvalidArgument("weighted_sum: weight size mismatch");
    Tensor<T>* out = tape.make({1});
    double acc = 0.0;
    for (size_t i = 0; i < w.size(); ++i) acc += double(w[i]) * double(x->val[i]);
    out->val[0] = T(acc);
    if (tape.grad_enabled()) {
        auto wc = std::make_shared<std::vector<T>>(w);
        out->backward_fn = [x, out, wc] {
            x->ensure_grad();
            for (size_t i = 0; i < wc->size(); ++i) x->grad[i] += (*wc)[i] * out->grad[0];
        };
    }
    return out;
}

}  // namespace aot::nn
