#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "recon3d/common/error.hpp"
#include "recon3d/common/rng.hpp"

// Reverse-mode automatic differentiation over dense Eigen matrices,
// templated on the scalar type: float for training speed, double for
// finite-difference verification of every gradient path.

namespace recon3d::ag {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct Node {
    Mat<Scalar> value;
    Mat<Scalar> grad;  // allocated lazily during backward
    std::vector<std::shared_ptr<Node<Scalar>>> parents;
    std::function<void(Node<Scalar>&)> backward;  // propagates this->grad into parents
    int param_id = -1;                            // >= 0 marks a parameter leaf
    bool needs_grad = false;

    void ensure_grad() {
        if (grad.rows() != value.rows() || grad.cols() != value.cols())
            grad = Mat<Scalar>::Zero(value.rows(), value.cols());
    }
};

/// Value-semantic handle to a node in the computation graph.
template <typename Scalar>
class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node<Scalar>> n) : node_(std::move(n)) {}

    bool valid() const { return node_ != nullptr; }
    const Mat<Scalar>& value() const { return node_->value; }
    const Mat<Scalar>& grad() const { return node_->grad; }
    Eigen::Index rows() const { return node_->value.rows(); }
    Eigen::Index cols() const { return node_->value.cols(); }
    std::shared_ptr<Node<Scalar>>& node() { return node_; }
    const std::shared_ptr<Node<Scalar>>& node() const { return node_; }

private:
    std::shared_ptr<Node<Scalar>> node_;
};

/// Named parameter matrices plus ids; the single source of truth for a
/// model's weights. Gradients live outside (GradBuffer) so that a store can
/// be shared by concurrent read-only forward passes.
template <typename Scalar>
class ParamStore {
public:
    struct Entry {
        std::string name;
        Mat<Scalar> value;
    };

    int add(std::string name, Mat<Scalar> value) {
        entries_.push_back(Entry{std::move(name), std::move(value)});
        return static_cast<int>(entries_.size()) - 1;
    }

    int size() const { return static_cast<int>(entries_.size()); }
    Entry& entry(int id) { return entries_.at(static_cast<std::size_t>(id)); }
    const Entry& entry(int id) const { return entries_.at(static_cast<std::size_t>(id)); }
    Mat<Scalar>& value(int id) { return entry(id).value; }
    const Mat<Scalar>& value(int id) const { return entry(id).value; }

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& e : entries_) n += static_cast<std::size_t>(e.value.size());
        return n;
    }

    const std::vector<Entry>& entries() const { return entries_; }

private:
    std::vector<Entry> entries_;
};

/// Per-parameter gradient accumulator matching a ParamStore's shapes.
template <typename Scalar>
class GradBuffer {
public:
    explicit GradBuffer(const ParamStore<Scalar>& store) {
        grads_.reserve(static_cast<std::size_t>(store.size()));
        for (int i = 0; i < store.size(); ++i)
            grads_.push_back(Mat<Scalar>::Zero(store.value(i).rows(), store.value(i).cols()));
    }

    void zero() {
        for (auto& g : grads_) g.setZero();
    }

    Mat<Scalar>& operator[](int id) { return grads_.at(static_cast<std::size_t>(id)); }
    const Mat<Scalar>& operator[](int id) const { return grads_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const { return grads_.size(); }

private:
    std::vector<Mat<Scalar>> grads_;
};

/// One forward/backward episode. Holds leaf caches; `backward` runs a
/// topological sweep and deposits parameter gradients into the sink.
template <typename Scalar>
class Graph {
public:
    Graph(const ParamStore<Scalar>* params, GradBuffer<Scalar>* sink, bool recording = true)
        : params_(params), sink_(sink), recording_(recording) {}

    /// Evaluation-only graph: values are computed, no tape is kept.
    Graph() : params_(nullptr), sink_(nullptr), recording_(false) {}

    bool recording() const { return recording_; }

    /// Parameter leaf (cached: one node per parameter per graph).
    Var<Scalar> param(int id) {
        auto it = param_cache_.find(id);
        if (it != param_cache_.end()) return it->second;
        auto n = std::make_shared<Node<Scalar>>();
        n->value = params_->value(id);
        if (recording_) {
            n->param_id = id;
            n->needs_grad = true;
        }
        Var<Scalar> v(n);
        param_cache_.emplace(id, v);
        return v;
    }

    /// Constant leaf; gradients stop here.
    Var<Scalar> constant(Mat<Scalar> value) {
        auto n = std::make_shared<Node<Scalar>>();
        n->value = std::move(value);
        return Var<Scalar>(n);
    }

    /// Differentiable leaf; its gradient is readable after backward().
    Var<Scalar> input(Mat<Scalar> value) {
        auto n = std::make_shared<Node<Scalar>>();
        n->value = std::move(value);
        n->needs_grad = recording_;
        return Var<Scalar>(n);
    }

    /// Reverse sweep from a scalar (1x1) loss.
    void backward(const Var<Scalar>& loss) {
        if (!recording_) throw argument_error("backward on a non-recording graph");
        if (loss.rows() != 1 || loss.cols() != 1)
            throw shape_error("backward expects a 1x1 loss node");

        // Iterative post-order topological sort.
        std::vector<Node<Scalar>*> order;
        std::unordered_set<const Node<Scalar>*> seen;
        std::vector<std::pair<Node<Scalar>*, std::size_t>> stack;
        stack.emplace_back(loss.node().get(), 0);
        seen.insert(loss.node().get());
        while (!stack.empty()) {
            auto& [node, idx] = stack.back();
            if (idx < node->parents.size()) {
                Node<Scalar>* p = node->parents[idx++].get();
                if (p->needs_grad && seen.insert(p).second) stack.emplace_back(p, 0);
            } else {
                order.push_back(node);
                stack.pop_back();
            }
        }

        loss.node()->ensure_grad();
        loss.node()->grad(0, 0) = Scalar(1);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            Node<Scalar>* n = *it;
            if (n->grad.size() == 0) continue;  // unreachable from loss
            if (n->backward) n->backward(*n);
            if (n->param_id >= 0 && sink_) (*sink_)[n->param_id] += n->grad;
        }
    }

    /// Helper used by ops to construct an interior node.
    Var<Scalar> make(Mat<Scalar> value, std::vector<Var<Scalar>> parents,
                     std::function<void(Node<Scalar>&)> backward) {
        auto n = std::make_shared<Node<Scalar>>();
        n->value = std::move(value);
        if (recording_) {
            bool any = false;
            for (const auto& p : parents) any = any || p.node()->needs_grad;
            if (any) {
                n->needs_grad = true;
                n->backward = std::move(backward);
                n->parents.reserve(parents.size());
                for (auto& p : parents) n->parents.push_back(p.node());
            }
        }
        return Var<Scalar>(n);
    }

private:
    const ParamStore<Scalar>* params_;
    GradBuffer<Scalar>* sink_;
    std::unordered_map<int, Var<Scalar>> param_cache_;
    bool recording_;
};

}  // namespace recon3d::ag
