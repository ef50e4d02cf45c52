#pragma once

// Decoder-only transformer: pre-layernorm blocks, learned positional
// embeddings, causal multi-head attention, MLP with configurable width
// ratio, untied output head. Parameter tensors persist across steps; the
// forward pass builds its activation graph on a caller-provided tape.

#include <string>
#include <vector>

#include "aot/nn/ops.hpp"
#include "aot/nn/tensor.hpp"

namespace aot::nn {

struct TransformerConfig {
    int d_embed = 0;
    int n_heads = 0;
    int n_layers = 0;
    int context = 0;  // maximum input length, including BOS
    int vocab = 0;
    double dropout = 0.0;
    int mlp_ratio = 4;

    void validate() const {
        if (d_embed < 1 || n_heads < 1 || n_layers < 1 || context < 1 || vocab < 1)
            throw InvalidArgument("TransformerConfig: dimensions must be >= 1");
        if (d_embed % n_heads != 0)
            throw InvalidArgument("TransformerConfig: d_embed must be divisible by n_heads");
        if (dropout < 0.0 || dropout >= 1.0)
            throw InvalidArgument("TransformerConfig: dropout must be in [0,1)");
        if (mlp_ratio < 1) throw InvalidArgument("TransformerConfig: mlp_ratio must be >= 1");
    }
};

// (d_embed, n_heads, n_layers) for the named model sizes; context, vocab
// and dropout are filled in by the caller. "pico" is a desk-scale extra
// below the published table.
TransformerConfig named_config(const std::string& name);

// Exact parameter count of the construction below (embeddings, biased
// attention/MLP linears, affine layernorms, bias-free untied head).
int64_t param_count(const TransformerConfig& cfg);

template <class T>
struct TransformerParams {
    TransformerConfig cfg;

    Tensor<T> tok_emb;  // V x d
    Tensor<T> pos_emb;  // context x d
    struct Layer {
        Tensor<T> ln1_g, ln1_b;
        Tensor<T> qkv_w, qkv_b;    // d x 3d, 3d
        Tensor<T> proj_w, proj_b;  // d x d, d
        Tensor<T> ln2_g, ln2_b;
        Tensor<T> fc_w, fc_b;      // d x rd, rd
        Tensor<T> out_w, out_b;    // rd x d, d
    };
    std::vector<Layer> layers;
    Tensor<T> lnf_g, lnf_b;
    Tensor<T> head_w;  // d x V, untied, no bias

    struct NamedTensor {
        std::string name;
        Tensor<T>* tensor;
        bool decay;  // weight decay applies only to rank-2 linear weights
    };
    std::vector<NamedTensor> named();
    void zero_grad() {
        for (auto& nt : named()) nt.tensor->zero_grad();
    }
    int64_t count() const;
};

// He initialization (fan-in normal) for embeddings and hidden linears;
// biases zero, layernorm gains one. The output head uses a small fixed
// std so a fresh model starts near the uniform distribution.
inline constexpr double kHeadInitStd = 0.02;

template <class T>
TransformerParams<T> init_params(const TransformerConfig& cfg, uint64_t seed);

// Forward over a batch of token rows (each of length n <= context).
// Position t logits predict the token at position t+1. Returns logits of
// shape (B*n, V).
template <class T>
Tensor<T>* transformer_forward(Tape<T>& tape, TransformerParams<T>& params,
                               const std::vector<int>& ids, int batch, int n, bool train,
                               Rng& dropout_rng);

// Single-file checkpoint: header with the config as JSON, then named raw
// little-endian tensors. Reload is bit-exact.
template <class T>
void save_checkpoint(const std::string& path, TransformerParams<T>& params);
template <class T>
TransformerParams<T> load_checkpoint(const std::string& path);

// ----------------------------- template impl -----------------------------

template <class T>
std::vector<typename TransformerParams<T>::NamedTensor> TransformerParams<T>::named() {
    std::vector<NamedTensor> out;
    out.push_back({"tok_emb", &tok_emb, false});
    out.push_back({"pos_emb", &pos_emb, false});
    for (size_t l = 0; l < layers.size(); ++l) {
        auto& ly = layers[l];
        std::string p = "layer" + std::to_string(l) + ".";
        out.push_back({p + "ln1_g", &ly.ln1_g, false});
        out.push_back({p + "ln1_b", &ly.ln1_b, false});
        out.push_back({p + "qkv_w", &ly.qkv_w, true});
        out.push_back({p + "qkv_b", &ly.qkv_b, false});
        out.push_back({p + "proj_w", &ly.proj_w, true});
        out.push_back({p + "proj_b", &ly.proj_b, false});
        out.push_back({p + "ln2_g", &ly.ln2_g, false});
        out.push_back({p + "ln2_b", &ly.ln2_b, false});
        out.push_back({p + "fc_w", &ly.fc_w, true});
        out.push_back({p + "fc_b", &ly.fc_b, false});
        out.push_back({p + "out_w", &ly.out_w, true});
        out.push_back({p + "out_b", &ly.out_b, false});
    }
    out.push_back({"lnf_g", &lnf_g, false});
    out.push_back({"lnf_b", &lnf_b, false});
    out.push_back({"head_w", &head_w, true});
    return out;
}

template <class T>
int64_t TransformerParams<T>::count() const {
    int64_t total = 0;
    auto& self = const_cast<TransformerParams<T>&>(*this);
    for (auto& nt : self.named()) total += nt.tensor->numel();
    return total;
}

template <class T>
TransformerParams<T> init_params(const TransformerConfig& cfg, uint64_t seed) {
    cfg.validate();
    const int64_t d = cfg.d_embed;
    const int64_t rd = int64_t(cfg.mlp_ratio) * d;
    TransformerParams<T> p;
    p.cfg = cfg;
    p.tok_emb = Tensor<T>({cfg.vocab, d}, true);
    p.pos_emb = Tensor<T>({cfg.context, d}, true);
    p.layers.resize(size_t(cfg.n_layers));
    for (auto& ly : p.layers) {
        ly.ln1_g = Tensor<T>({d}, true);
        ly.ln1_b = Tensor<T>({d}, true);
        ly.qkv_w = Tensor<T>({d, 3 * d}, true);
        ly.qkv_b = Tensor<T>({3 * d}, true);
        ly.proj_w = Tensor<T>({d, d}, true);
        ly.proj_b = Tensor<T>({d}, true);
        ly.ln2_g = Tensor<T>({d}, true);
        ly.ln2_b = Tensor<T>({d}, true);
        ly.fc_w = Tensor<T>({d, rd}, true);
        ly.fc_b = Tensor<T>({rd}, true);
        ly.out_w = Tensor<T>({rd, d}, true);
        ly.out_b = Tensor<T>({d}, true);
    }
    p.lnf_g = Tensor<T>({d}, true);
    p.lnf_b = Tensor<T>({d}, true);
    p.head_w = Tensor<T>({d, cfg.vocab}, true);

    Rng rng = derive_rng(seed, /*stream=*/0x1a17);
    NormalSampler normal;
    auto fill_normal = [&](Tensor<T>& t, double std_dev) {
        for (T& x : t.val) x = T(normal(rng) * std_dev);
    };
    auto he = [&](Tensor<T>& t, int64_t fan_in) { fill_normal(t, std::sqrt(2.0 / double(fan_in))); };

    he(p.tok_emb, d);
    he(p.pos_emb, d);
    for (auto& ly : p.layers) {
        std::fill(ly.ln1_g.val.begin(), ly.ln1_g.val.end(), T(1));
        std::fill(ly.ln2_g.val.begin(), ly.ln2_g.val.end(), T(1));
        he(ly.qkv_w, d);
        he(ly.proj_w, d);
        he(ly.fc_w, d);
        he(ly.out_w, rd);
    }
    std::fill(p.lnf_g.val.begin(), p.lnf_g.val.end(), T(1));
    fill_normal(p.head_w, kHeadInitStd);
    return p;
}

template <class T>
Tensor<T>* transformer_forward(Tape<T>& tape, TransformerParams<T>& params,
                               const std::vector<int>& ids, int batch, int n, bool train,
                               Rng& dropout_rng) {
    const TransformerConfig& cfg = params.cfg;
    if (n < 1 || n > cfg.context)
        throw InvalidArgument("transformer_forward: sequence length " + std::to_string(n) +
                              " exceeds context " + std::to_string(cfg.context));
    if (int64_t(ids.size()) != int64_t(batch) * n)
        throw InvalidArgument("transformer_forward: ids size must be batch*n");
    for (int id : ids)
        if (id < 0 || id >= cfg.vocab)
            throw InvalidArgument("transformer_forward: token id out of vocab");

    std::vector<int> pos_ids(size_t(batch) * size_t(n));
    for (int b = 0; b < batch; ++b)
        for (int t = 0; t < n; ++t) pos_ids[size_t(b) * size_t(n) + size_t(t)] = t;

    Tensor<T>* x = add(tape, embedding(tape, &params.tok_emb, ids),
                       embedding(tape, &params.pos_emb, pos_ids));
    x = dropout(tape, x, cfg.dropout, dropout_rng, train);
    for (auto& ly : params.layers) {
        Tensor<T>* a = layernorm(tape, x, &ly.ln1_g, &ly.ln1_b);
        Tensor<T>* qkv = add_rowvec(tape, matmul(tape, a, &ly.qkv_w), &ly.qkv_b);
        Tensor<T>* att = causal_self_attention(tape, qkv, batch, n, cfg.n_heads, cfg.dropout,
                                               dropout_rng, train);
        att = add_rowvec(tape, matmul(tape, att, &ly.proj_w), &ly.proj_b);
        att = dropout(tape, att, cfg.dropout, dropout_rng, train);
        x = add(tape, x, att);
        Tensor<T>* h = layernorm(tape, x, &ly.ln2_g, &ly.ln2_b);
        h = gelu(tape, add_rowvec(tape, matmul(tape, h, &ly.fc_w), &ly.fc_b));
        h = add_rowvec(tape, matmul(tape, h, &ly.out_w), &ly.out_b);
        h = dropout(tape, h, cfg.dropout, dropout_rng, train);
        x = add(tape, x, h);
    }
    x = layernorm(tape, x, &params.lnf_g, &params.lnf_b);
    return matmul(tape, x, &params.head_w);
}

}  // namespace aot::nn
