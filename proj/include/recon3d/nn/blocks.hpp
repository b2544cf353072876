#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "recon3d/ag/adam.hpp"
#include "recon3d/ag/ops.hpp"
#include "recon3d/nn/init.hpp"

// Transformer building blocks. Each module registers its parameters in a
// ParamStore and offers two forward paths:
//   forward(Graph&, ...)  - differentiable, used for training;
//   forward_eval(...)     - plain Eigen math, used for inference and for
//                           incremental decoding with a key/value cache.
// tests/test_nn.cpp asserts both paths agree.

namespace recon3d::nn {

using ag::Graph;
using ag::Mat;
using ag::ParamStore;
using ag::Var;

// --- eval-path helpers on raw matrices ---

template <typename S>
Mat<S> layernorm_eval(const Mat<S>& x, const Mat<S>& gamma, const Mat<S>& beta,
                      S eps = S(1e-5)) {
    Mat<S> y(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        S mu = x.row(i).mean();
        S var = (x.row(i).array() - mu).square().mean();
        y.row(i) = ((x.row(i).array() - mu) / std::sqrt(var + eps)) * gamma.row(0).array() +
                   beta.row(0).array();
    }
    return y;
}

template <typename S>
Mat<S> gelu_eval(const Mat<S>& x) {
    const S k = S(0.7978845608028654), c = S(0.044715);
    return (S(0.5) * x.array() * (S(1) + (k * (x.array() + c * x.array().cube())).tanh()))
        .matrix();
}

template <typename S>
Mat<S> softmax_rows_eval(const Mat<S>& x) {
    Mat<S> y = x;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        S m = y.row(i).maxCoeff();
        y.row(i) = (y.row(i).array() - m).exp();
        y.row(i) /= y.row(i).sum();
    }
    return y;
}

// --- modules ---

template <typename S>
struct Linear {
    ParamStore<S>* ps = nullptr;
    int w = -1, b = -1;

    Linear() = default;
    Linear(ParamStore<S>& store, Rng& rng, const std::string& name, Eigen::Index in,
           Eigen::Index out, bool zero_init = false)
        : ps(&store) {
        w = store.add(name + ".weight", zero_init ? zeros<S>(in, out) : xavier_init<S>(rng, in, out));
        b = store.add(name + ".bias", zeros<S>(1, out));
    }

    Var<S> forward(Graph<S>& g, const Var<S>& x) const {
        return ag::add_rowvec(g, ag::matmul(g, x, g.param(w)), g.param(b));
    }

    Mat<S> forward_eval(const Mat<S>& x) const {
        return (x * ps->value(w)).rowwise() +
               Eigen::RowVector<S, Eigen::Dynamic>(ps->value(b).row(0));
    }
};

template <typename S>
struct LayerNorm {
    ParamStore<S>* ps = nullptr;
    int gamma = -1, beta = -1;

    LayerNorm() = default;
    LayerNorm(ParamStore<S>& store, const std::string& name, Eigen::Index dim) : ps(&store) {
        gamma = store.add(name + ".gamma", ones<S>(1, dim));
        beta = store.add(name + ".beta", zeros<S>(1, dim));
    }

    Var<S> forward(Graph<S>& g, const Var<S>& x) const {
        return ag::layernorm_rows(g, x, g.param(gamma), g.param(beta));
    }

    Mat<S> forward_eval(const Mat<S>& x) const {
        return layernorm_eval(x, ps->value(gamma), ps->value(beta));
    }
};

template <typename S>
struct KvCache {
    Mat<S> k, v;  // capacity x dim
    Eigen::Index len = 0;

    void reset(Eigen::Index capacity, Eigen::Index dim) {
        k.resize(capacity, dim);
        v.resize(capacity, dim);
        len = 0;
    }
};

template <typename S>
struct MultiHeadAttention {
    ParamStore<S>* ps = nullptr;
    Linear<S> wq, wk, wv, wo;
    int heads = 1;
    Eigen::Index dim = 0;

    MultiHeadAttention() = default;
    MultiHeadAttention(ParamStore<S>& store, Rng& rng, const std::string& name, Eigen::Index d,
                       int n_heads)
        : ps(&store),
          wq(store, rng, name + ".q", d, d),
          wk(store, rng, name + ".k", d, d),
          wv(store, rng, name + ".v", d, d),
          wo(store, rng, name + ".o", d, d),
          heads(n_heads),
          dim(d) {
        if (d % n_heads != 0) throw config_error("attention dim must divide heads");
    }

    Var<S> forward(Graph<S>& g, const Var<S>& x, bool causal) const {
        const Eigen::Index L = x.rows(), dh = dim / heads;
        const S inv_sqrt = S(1) / std::sqrt(static_cast<S>(dh));
        Var<S> q = wq.forward(g, x), k = wk.forward(g, x), v = wv.forward(g, x);
        Mat<S> mask;
        if (causal) {
            mask = Mat<S>::Zero(L, L);
            for (Eigen::Index i = 0; i < L; ++i)
                for (Eigen::Index j = i + 1; j < L; ++j) mask(i, j) = S(-1e9);
        }
        std::vector<Var<S>> outs;
        outs.reserve(static_cast<std::size_t>(heads));
        for (int h = 0; h < heads; ++h) {
            Var<S> qh = ag::slice_cols(g, q, h * dh, dh);
            Var<S> kh = ag::slice_cols(g, k, h * dh, dh);
            Var<S> vh = ag::slice_cols(g, v, h * dh, dh);
            Var<S> scores = ag::scale(g, ag::matmul_nt(g, qh, kh), inv_sqrt);
            if (causal) scores = ag::add_const(g, scores, mask);
            outs.push_back(ag::matmul(g, ag::softmax_rows(g, scores), vh));
        }
        return wo.forward(g, ag::concat_cols(g, outs));
    }

    Mat<S> forward_eval(const Mat<S>& x, bool causal) const {
        const Eigen::Index L = x.rows(), dh = dim / heads;
        const S inv_sqrt = S(1) / std::sqrt(static_cast<S>(dh));
        Mat<S> q = wq.forward_eval(x), k = wk.forward_eval(x), v = wv.forward_eval(x);
        Mat<S> merged(L, dim);
        for (int h = 0; h < heads; ++h) {
            Mat<S> scores = q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose() *
                            inv_sqrt;
            if (causal)
                for (Eigen::Index i = 0; i < L; ++i)
                    for (Eigen::Index j = i + 1; j < L; ++j) scores(i, j) = S(-1e9);
            merged.middleCols(h * dh, dh) = softmax_rows_eval(scores) * v.middleCols(h * dh, dh);
        }
        return wo.forward_eval(merged);
    }

    /// Incremental causal step: consumes one token row, attends over the
    /// cache plus itself, appends its key/value to the cache.
    Mat<S> step_eval(const Mat<S>& x_row, KvCache<S>& cache) const {
        const Eigen::Index dh = dim / heads;
        const S inv_sqrt = S(1) / std::sqrt(static_cast<S>(dh));
        if (cache.len >= cache.k.rows()) throw argument_error("kv cache overflow");
        cache.k.row(cache.len) = wk.forward_eval(x_row).row(0);
        cache.v.row(cache.len) = wv.forward_eval(x_row).row(0);
        ++cache.len;
        Mat<S> q = wq.forward_eval(x_row);
        Mat<S> merged(1, dim);
        for (int h = 0; h < heads; ++h) {
            auto kh = cache.k.topRows(cache.len).middleCols(h * dh, dh);
            auto vh = cache.v.topRows(cache.len).middleCols(h * dh, dh);
            Mat<S> scores = q.middleCols(h * dh, dh) * kh.transpose() * inv_sqrt;
            merged.middleCols(h * dh, dh) = softmax_rows_eval(scores) * vh;
        }
        return wo.forward_eval(merged);
    }
};

template <typename S>
struct Mlp {
    Linear<S> fc1, fc2;

    Mlp() = default;
    Mlp(ParamStore<S>& store, Rng& rng, const std::string& name, Eigen::Index dim,
        Eigen::Index hidden)
        : fc1(store, rng, name + ".fc1", dim, hidden), fc2(store, rng, name + ".fc2", hidden, dim) {}

    Var<S> forward(Graph<S>& g, const Var<S>& x) const {
        return fc2.forward(g, ag::gelu(g, fc1.forward(g, x)));
    }

    Mat<S> forward_eval(const Mat<S>& x) const {
        return fc2.forward_eval(gelu_eval(fc1.forward_eval(x)));
    }
};

/// Pre-norm transformer block: x + Attn(LN(x)), then x + MLP(LN(x)).
template <typename S>
struct TransformerBlock {
    LayerNorm<S> ln1, ln2;
    MultiHeadAttention<S> attn;
    Mlp<S> mlp;

    TransformerBlock() = default;
    TransformerBlock(ParamStore<S>& store, Rng& rng, const std::string& name, Eigen::Index dim,
                     int heads, Eigen::Index mlp_hidden)
        : ln1(store, name + ".ln1", dim),
          ln2(store, name + ".ln2", dim),
          attn(store, rng, name + ".attn", dim, heads),
          mlp(store, rng, name + ".mlp", dim, mlp_hidden) {}

    Var<S> forward(Graph<S>& g, const Var<S>& x, bool causal = false) const {
        Var<S> h = ag::add(g, x, attn.forward(g, ln1.forward(g, x), causal));
        return ag::add(g, h, mlp.forward(g, ln2.forward(g, h)));
    }

    Mat<S> forward_eval(const Mat<S>& x, bool causal = false) const {
        Mat<S> h = x + attn.forward_eval(ln1.forward_eval(x), causal);
        return h + mlp.forward_eval(ln2.forward_eval(h));
    }

    Mat<S> step_eval(const Mat<S>& x_row, KvCache<S>& cache) const {
        Mat<S> h = x_row + attn.step_eval(ln1.forward_eval(x_row), cache);
        return h + mlp.forward_eval(ln2.forward_eval(h));
    }
};

/// Sinusoidal position/time code of a scalar index, shape 1 x dim.
template <typename S>
Mat<S> sinusoid_row(double t, Eigen::Index dim) {
    Mat<S> row(1, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        double freq = std::pow(10000.0, -2.0 * static_cast<double>(i / 2) / static_cast<double>(dim));
        row(0, i) = static_cast<S>((i % 2 == 0) ? std::sin(t * freq) : std::cos(t * freq));
    }
    return row;
}

}  // namespace recon3d::nn
