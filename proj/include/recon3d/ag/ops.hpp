#pragma once

#include <cmath>
#include <vector>

#include "recon3d/ag/graph.hpp"

// Expression-style free functions over ag::Var. Every op has a closed-form
// backward; tests/test_ag.cpp verifies each against central finite
// differences in double precision.

namespace recon3d::ag {

namespace detail {
template <typename Scalar, typename Expr>
inline void accumulate(Node<Scalar>& parent, const Expr& g) {
    if (!parent.needs_grad) return;
    parent.ensure_grad();
    parent.grad += g;
}
}  // namespace detail

template <typename Scalar>
Var<Scalar> add(Graph<Scalar>& g, const Var<Scalar>& a, const Var<Scalar>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw shape_error("add: shape mismatch");
    return g.make(a.value() + b.value(), {a, b}, [a, b](Node<Scalar>& n) mutable {
        detail::accumulate(*a.node(), n.grad);
        detail::accumulate(*b.node(), n.grad);
    });
}

template <typename Scalar>
Var<Scalar> sub(Graph<Scalar>& g, const Var<Scalar>& a, const Var<Scalar>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw shape_error("sub: shape mismatch");
    return g.make(a.value() - b.value(), {a, b}, [a, b](Node<Scalar>& n) mutable {
        detail::accumulate(*a.node(), n.grad);
        detail::accumulate(*b.node(), Mat<Scalar>(-n.grad));
    });
}

template <typename Scalar>
Var<Scalar> cwise_mul(Graph<Scalar>& g, const Var<Scalar>& a, const Var<Scalar>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw shape_error("cwise_mul: shape mismatch");
    return g.make(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Node<Scalar>& n) mutable {
        detail::accumulate(*a.node(), n.grad.cwiseProduct(b.node()->value));
        detail::accumulate(*b.node(), n.grad.cwiseProduct(a.node()->value));
    });
}

template <typename Scalar>
Var<Scalar> scale(Graph<Scalar>& g, const Var<Scalar>& a, Scalar c) {
    return g.make(a.value() * c, {a}, [a, c](Node<Scalar>& n) mutable {
        detail::accumulate(*a.node(), Mat<Scalar>(n.grad * c));
    });
}

/// Multiply a matrix by a learnable 1x1 scalar.
template <typename Scalar>
Var<Scalar> scale_var(Graph<Scalar>& g, const Var<Scalar>& a, const Var<Scalar>& s) {
    if (s.rows() != 1 || s.cols() != 1) throw shape_error("scale_var: scalar must be 1x1");
    Scalar c = s.value()(0, 0);
    return g.make(a.value() * c, {a, s}, [a, s, c](Node<Scalar>& n) mutable {
        detail::accumulate(*a.node(), Mat<Scalar>(n.grad * c));
        Mat<Scalar> ds(1, 1);
        ds(0, 0) = n.grad.cwiseProduct(a.node()->value).sum();
        detail::accumulate(*s.node(), ds);
    });
}

template <typename Scalar>
Var<Scalar> add_const(Graph<Scalar>& g, const Var<Scalar>& a, const Mat<Scalar>& m) {
    if (a.rows() != m.rows() || a.cols() != m.cols()) throw shape_error("add_const: shape mismatch");
    return g.make(a.value() + m, {a}, [a](Node<Scalar>& n) mutable {
        detail::accumulate(*a.node(), n.grad);
    });
}

template <typename Scalar>
Var<Scalar> exp_elem(Graph<Scalar>& g, const Var<Scalar>& a) {
    Mat<Scalar> y = a.value().array().exp().matrix();
    return g.make(y, {a}, [a, y](Node<Scalar>& n) mutable {
        detail::accumulate(*a.node(), n.grad.cwiseProduct(y));
    });
}

template <typename Scalar>
Var<Scalar> reciprocal(Graph<Scalar>& g, const Var<Scalar>& a) {
    Mat<Scalar> y = a.value().cwiseInverse();
    return g.make(y, {a}, [a, y](Node<Scalar>& n) mutable {
        detail::accumulate(*a.node(), Mat<Scalar>(-n.grad.cwiseProduct(y.cwiseProduct(y))));
    });
}

template <typename Scalar>
Var<Scalar> matmul(Graph<Scalar>& g, const Var<Scalar>& a, const Var<Scalar>& b) {
    if (a.cols() != b.rows()) throw shape_error("matmul: inner dimension mismatch");
    return g.make(a.value() * b.value(), {a, b}, [a, b](Node<Scalar>& n) mutable {
        detail::accumulate(*a.node(), Mat<Scalar>(n.grad * b.node()->value.transpose()));
        detail::accumulate(*b.node(), Mat<Scalar>(a.node()->value.transpose() * n.grad));
    });
}

/// a * b^T without materialising the transpose.
template <typename Scalar>
Var<Scalar> matmul_nt(Graph<Scalar>& g, const Var<Scalar>& a, const Var<Scalar>& b) {
    if (a.cols() != b.cols()) throw shape_error("matmul_nt: inner dimension mismatch");
    return g.make(a.value() * b.value().transpose(), {a, b}, [a, b](Node<Scalar>& n) mutable {
        detail::accumulate(*a.node(), Mat<Scalar>(n.grad * b.node()->value));
        detail::accumulate(*b.node(), Mat<Scalar>(n.grad.transpose() * a.node()->value));
    });
}

template <typename Scalar>
Var<Scalar> transpose(Graph<Scalar>& g, const Var<Scalar>& a) {
    return g.make(a.value().transpose(), {a}, [a](Node<Scalar>& n) mutable {
        detail::accumulate(*a.node(), Mat<Scalar>(n.grad.transpose()));
    });
}

/// Broadcast-add a 1xD row vector to every row.
template <typename Scalar>
Var<Scalar> add_rowvec(Graph<Scalar>& g, const Var<Scalar>& a, const Var<Scalar>& r) {
    if (r.rows() != 1 || r.cols() != a.cols()) throw shape_error("add_rowvec: expects 1 x cols(a)");
    Mat<Scalar> y = a.value().rowwise() + Eigen::RowVector<Scalar, Eigen::Dynamic>(r.value().row(0));
    return g.make(std::move(y), {a, r}, [a, r](Node<Scalar>& n) mutable {
        detail::accumulate(*a.node(), n.grad);
        detail::accumulate(*r.node(), Mat<Scalar>(n.grad.colwise().sum()));
    });
}

template <typename Scalar>
Var<Scalar> concat_rows(Graph<Scalar>& g, const std::vector<Var<Scalar>>& parts) {
    if (parts.empty()) throw argument_error("concat_rows: empty list");
    Eigen::Index cols = parts[0].cols(), rows = 0;
    for (const auto& p : parts) {
        if (p.cols() != cols) throw shape_error("concat_rows: column mismatch");
        rows += p.rows();
    }
    Mat<Scalar> y(rows, cols);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        y.middleRows(at, p.rows()) = p.value();
        at += p.rows();
    }
    return g.make(std::move(y), parts, [parts](Node<Scalar>& n) mutable {
        Eigen::Index at = 0;
        for (auto& p : parts) {
            detail::accumulate(*p.node(), Mat<Scalar>(n.grad.middleRows(at, p.rows())));
            at += p.rows();
        }
    });
}

template <typename Scalar>
Var<Scalar> concat_cols(Graph<Scalar>& g, const std::vector<Var<Scalar>>& parts) {
    if (parts.empty()) throw argument_error("concat_cols: empty list");
    Eigen::Index rows = parts[0].rows(), cols = 0;
    for (const auto& p : parts) {
        if (p.rows() != rows) throw shape_error("concat_cols: row mismatch");
        cols += p.cols();
    }
    Mat<Scalar> y(rows, cols);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        y.middleCols(at, p.cols()) = p.value();
        at += p.cols();
    }
    return g.make(std::move(y), parts, [parts](Node<Scalar>& n) mutable {
        Eigen::Index at = 0;
        for (auto& p : parts) {
            detail::accumulate(*p.node(), Mat<Scalar>(n.grad.middleCols(at, p.cols())));
            at += p.cols();
        }
    });
}

template <typename Scalar>
Var<Scalar> slice_rows(Graph<Scalar>& g, const Var<Scalar>& a, Eigen::Index r0, Eigen::Index n) {
    if (r0 < 0 || n < 0 || r0 + n > a.rows()) throw shape_error("slice_rows: out of range");
    return g.make(a.value().middleRows(r0, n), {a}, [a, r0, n](Node<Scalar>& nd) mutable {
        if (!a.node()->needs_grad) return;
        a.node()->ensure_grad();
        a.node()->grad.middleRows(r0, n) += nd.grad;
    });
}

template <typename Scalar>
Var<Scalar> slice_cols(Graph<Scalar>& g, const Var<Scalar>& a, Eigen::Index c0, Eigen::Index n) {
    if (c0 < 0 || n < 0 || c0 + n > a.cols()) throw shape_error("slice_cols: out of range");
    return g.make(a.value().middleCols(c0, n), {a}, [a, c0, n](Node<Scalar>& nd) mutable {
        if (!a.node()->needs_grad) return;
        a.node()->ensure_grad();
        a.node()->grad.middleCols(c0, n) += nd.grad;
    });
}

/// Column-wise mean over rows: (L x D) -> (1 x D).
template <typename Scalar>
Var<Scalar> mean_over_rows(Graph<Scalar>& g, const Var<Scalar>& a) {
    Mat<Scalar> y = a.value().colwise().mean();
    Scalar inv = Scalar(1) / static_cast<Scalar>(a.rows());
    return g.make(std::move(y), {a}, [a, inv](Node<Scalar>& n) mutable {
        detail::accumulate(*a.node(),
                           Mat<Scalar>((n.grad * inv).replicate(a.rows(), 1)));
    });
}

template <typename Scalar>
Var<Scalar> mean_all(Graph<Scalar>& g, const Var<Scalar>& a) {
    Mat<Scalar> y(1, 1);
    y(0, 0) = a.value().mean();
    Scalar inv = Scalar(1) / static_cast<Scalar>(a.rows() * a.cols());
    return g.make(std::move(y), {a}, [a, inv](Node<Scalar>& n) mutable {
        detail::accumulate(*a.node(),
                           Mat<Scalar>::Constant(a.rows(), a.cols(), n.grad(0, 0) * inv));
    });
}

template <typename Scalar>
Var<Scalar> sum_all(Graph<Scalar>& g, const Var<Scalar>& a) {
    Mat<Scalar> y(1, 1);
    y(0, 0) = a.value().sum();
    return g.make(std::move(y), {a}, [a](Node<Scalar>& n) mutable {
        detail::accumulate(*a.node(), Mat<Scalar>::Constant(a.rows(), a.cols(), n.grad(0, 0)));
    });
}

template <typename Scalar>
Var<Scalar> softmax_rows(Graph<Scalar>& g, const Var<Scalar>& a) {
    Mat<Scalar> y = a.value();
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        auto row = y.row(i);
        Scalar m = row.maxCoeff();
        row = (row.array() - m).exp();
        row /= row.sum();
    }
    return g.make(y, {a}, [a, y](Node<Scalar>& n) mutable {
        Mat<Scalar> dx = n.grad;
        for (Eigen::Index i = 0; i < dx.rows(); ++i) {
            Scalar dot = dx.row(i).cwiseProduct(y.row(i)).sum();
            dx.row(i) = y.row(i).cwiseProduct(dx.row(i).array().matrix() -
                                              Mat<Scalar>::Constant(1, dx.cols(), dot));
        }
        detail::accumulate(*a.node(), dx);
    });
}

template <typename Scalar>
Var<Scalar> gelu(Graph<Scalar>& g, const Var<Scalar>& a) {
    const Scalar k = Scalar(0.7978845608028654);  // sqrt(2/pi)
    const Scalar c = Scalar(0.044715);
    Mat<Scalar> x = a.value();
    Mat<Scalar> u = (k * (x.array() + c * x.array().cube())).matrix();
    Mat<Scalar> t = u.array().tanh().matrix();
    Mat<Scalar> y = (Scalar(0.5) * x.array() * (Scalar(1) + t.array())).matrix();
    return g.make(y, {a}, [a, x, t, k, c](Node<Scalar>& n) mutable {
        auto xs = x.array();
        auto sech2 = Scalar(1) - t.array().square();
        auto du = k * (Scalar(1) + Scalar(3) * c * xs.square());
        Mat<Scalar> d =
            (Scalar(0.5) * (Scalar(1) + t.array()) + Scalar(0.5) * xs * sech2 * du).matrix();
        detail::accumulate(*a.node(), n.grad.cwiseProduct(d));
    });
}

template <typename Scalar>
Var<Scalar> relu(Graph<Scalar>& g, const Var<Scalar>& a) {
    Mat<Scalar> y = a.value().cwiseMax(Scalar(0));
    return g.make(y, {a}, [a](Node<Scalar>& n) mutable {
        Mat<Scalar> mask =
            (a.node()->value.array() > Scalar(0)).template cast<Scalar>().matrix();
        detail::accumulate(*a.node(), n.grad.cwiseProduct(mask));
    });
}

/// Row-wise layer normalisation with learnable gain/offset (both 1xD).
template <typename Scalar>
Var<Scalar> layernorm_rows(Graph<Scalar>& g, const Var<Scalar>& a, const Var<Scalar>& gamma,
                           const Var<Scalar>& beta, Scalar eps = Scalar(1e-5)) {
    const Eigen::Index D = a.cols();
    if (gamma.rows() != 1 || gamma.cols() != D || beta.rows() != 1 || beta.cols() != D)
        throw shape_error("layernorm_rows: gain/offset must be 1 x cols(a)");
    Mat<Scalar> xhat(a.rows(), D);
    Mat<Scalar> inv_sigma(a.rows(), 1);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        Scalar mu = a.value().row(i).mean();
        Scalar var = (a.value().row(i).array() - mu).square().mean();
        Scalar is = Scalar(1) / std::sqrt(var + eps);
        inv_sigma(i, 0) = is;
        xhat.row(i) = (a.value().row(i).array() - mu).matrix() * is;
    }
    Mat<Scalar> y = (xhat.array().rowwise() * gamma.value().row(0).array()).matrix();
    y = (y.array().rowwise() + beta.value().row(0).array()).matrix();
    return g.make(y, {a, gamma, beta}, [a, gamma, beta, xhat, inv_sigma](Node<Scalar>& n) mutable {
        const Eigen::Index D = xhat.cols();
        detail::accumulate(*gamma.node(), Mat<Scalar>(n.grad.cwiseProduct(xhat).colwise().sum()));
        detail::accumulate(*beta.node(), Mat<Scalar>(n.grad.colwise().sum()));
        if (!a.node()->needs_grad) return;
        Mat<Scalar> dxhat =
            (n.grad.array().rowwise() * gamma.node()->value.row(0).array()).matrix();
        Mat<Scalar> dx(dxhat.rows(), D);
        for (Eigen::Index i = 0; i < dxhat.rows(); ++i) {
            Scalar m1 = dxhat.row(i).mean();
            Scalar m2 = dxhat.row(i).cwiseProduct(xhat.row(i)).mean();
            dx.row(i) =
                ((dxhat.row(i).array() - m1) - xhat.row(i).array() * m2) * inv_sigma(i, 0);
        }
        detail::accumulate(*a.node(), dx);
    });
}

/// Normalise rows to unit L2 norm.
template <typename Scalar>
Var<Scalar> l2normalize_rows(Graph<Scalar>& g, const Var<Scalar>& a, Scalar eps = Scalar(1e-12)) {
    Mat<Scalar> y(a.rows(), a.cols());
    Mat<Scalar> inv_norm(a.rows(), 1);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        Scalar nn = std::sqrt(a.value().row(i).squaredNorm() + eps);
        inv_norm(i, 0) = Scalar(1) / nn;
        y.row(i) = a.value().row(i) * inv_norm(i, 0);
    }
    return g.make(y, {a}, [a, y, inv_norm](Node<Scalar>& n) mutable {
        Mat<Scalar> dx(y.rows(), y.cols());
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            Scalar dot = n.grad.row(i).cwiseProduct(y.row(i)).sum();
            dx.row(i) = (n.grad.row(i) - y.row(i) * dot) * inv_norm(i, 0);
        }
        detail::accumulate(*a.node(), dx);
    });
}

/// Mean cross-entropy of integer targets against row logits.
template <typename Scalar>
Var<Scalar> cross_entropy_rows(Graph<Scalar>& g, const Var<Scalar>& logits,
                               const std::vector<int>& targets) {
    const Eigen::Index B = logits.rows(), K = logits.cols();
    if (static_cast<Eigen::Index>(targets.size()) != B)
        throw shape_error("cross_entropy_rows: one target per row required");
    for (int t : targets)
        if (t < 0 || t >= K) throw validation_error("cross_entropy_rows: target index out of range");
    Mat<Scalar> prob(B, K);
    Scalar loss = Scalar(0);
    for (Eigen::Index i = 0; i < B; ++i) {
        Scalar m = logits.value().row(i).maxCoeff();
        Mat<Scalar> e = (logits.value().row(i).array() - m).exp().matrix();
        Scalar z = e.sum();
        prob.row(i) = e / z;
        loss += std::log(z) + m - logits.value()(i, targets[static_cast<std::size_t>(i)]);
    }
    Mat<Scalar> y(1, 1);
    y(0, 0) = loss / static_cast<Scalar>(B);
    return g.make(std::move(y), {logits}, [logits, prob, targets](Node<Scalar>& n) mutable {
        Mat<Scalar> d = prob;
        for (Eigen::Index i = 0; i < d.rows(); ++i)
            d(i, targets[static_cast<std::size_t>(i)]) -= Scalar(1);
        d *= n.grad(0, 0) / static_cast<Scalar>(d.rows());
        detail::accumulate(*logits.node(), d);
    });
}

/// Mean squared error against a constant target, averaged over elements.
template <typename Scalar>
Var<Scalar> mse_const(Graph<Scalar>& g, const Var<Scalar>& a, const Mat<Scalar>& target) {
    if (a.rows() != target.rows() || a.cols() != target.cols())
        throw shape_error("mse_const: shape mismatch");
    Mat<Scalar> diff = a.value() - target;
    Mat<Scalar> y(1, 1);
    y(0, 0) = diff.squaredNorm() / static_cast<Scalar>(diff.size());
    return g.make(std::move(y), {a}, [a, diff](Node<Scalar>& n) mutable {
        Scalar c = Scalar(2) * n.grad(0, 0) / static_cast<Scalar>(diff.size());
        detail::accumulate(*a.node(), Mat<Scalar>(diff * c));
    });
}

/// Mean binary cross-entropy with logits; targets in [0,1].
template <typename Scalar>
Var<Scalar> bce_logits_mean(Graph<Scalar>& g, const Var<Scalar>& logits,
                            const Mat<Scalar>& targets) {
    if (logits.rows() != targets.rows() || logits.cols() != targets.cols())
        throw shape_error("bce_logits_mean: shape mismatch");
    const auto x = logits.value().array();
    const auto t = targets.array();
    // softplus(x) - t*x, with the numerically stable softplus split
    Mat<Scalar> per =
        ((x.max(Scalar(0)) - t * x) + (Scalar(1) + (-x.abs()).exp()).log()).matrix();
    Mat<Scalar> y(1, 1);
    y(0, 0) = per.sum() / static_cast<Scalar>(per.size());
    return g.make(std::move(y), {logits}, [logits, targets](Node<Scalar>& n) mutable {
        auto x = logits.node()->value.array();
        Mat<Scalar> sigma = (Scalar(1) / (Scalar(1) + (-x).exp())).matrix();
        Mat<Scalar> d = (sigma - targets) * (n.grad(0, 0) / static_cast<Scalar>(sigma.size()));
        detail::accumulate(*logits.node(), d);
    });
}

/// Gather rows of an embedding table.
template <typename Scalar>
Var<Scalar> embedding_rows(Graph<Scalar>& g, const Var<Scalar>& table,
                           const std::vector<int>& ids) {
    const Eigen::Index K = table.rows();
    Mat<Scalar> y(static_cast<Eigen::Index>(ids.size()), table.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] >= K) throw validation_error("embedding_rows: index out of range");
        y.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
    }
    return g.make(std::move(y), {table}, [table, ids](Node<Scalar>& n) mutable {
        if (!table.node()->needs_grad) return;
        table.node()->ensure_grad();
        for (std::size_t i = 0; i < ids.size(); ++i)
            table.node()->grad.row(ids[i]) += n.grad.row(static_cast<Eigen::Index>(i));
    });
}

/// Detach: value passes through, gradient stops.
template <typename Scalar>
Var<Scalar> stop_grad(Graph<Scalar>& g, const Var<Scalar>& a) {
    return g.constant(a.value());
}

/// Straight-through estimator: forward emits `replacement`, backward passes
/// the incoming gradient to `a` unchanged.
template <typename Scalar>
Var<Scalar> st_passthrough(Graph<Scalar>& g, const Var<Scalar>& a, const Mat<Scalar>& replacement) {
    if (a.rows() != replacement.rows() || a.cols() != replacement.cols())
        throw shape_error("st_passthrough: shape mismatch");
    return g.make(replacement, {a}, [a](Node<Scalar>& n) mutable {
        detail::accumulate(*a.node(), n.grad);
    });
}

}  // namespace recon3d::ag
