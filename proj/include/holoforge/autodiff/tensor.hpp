#pragma once

#include <functional>
#include <memory>
#include <numeric>
#include <vector>

#include "holoforge/errors.hpp"

namespace holoforge::ad {

using Shape = std::vector<int>;

inline size_t shape_numel(const Shape& s) {
    size_t n = 1;
    for (int d : s) {
        if (d <= 0) throw ShapeError("tensor dimensions must be positive");
        n *= static_cast<size_t>(d);
    }
    return n;
}

inline bool same_shape(const Shape& a, const Shape& b) { return a == b; }

/// Dense value buffer. Real tensors keep im empty; complex tensors carry both
/// planes. Gradients of complex tensors use the (dL/d_re, dL/d_im) layout, so
/// descending along -grad is steepest descent for real losses (the Wirtinger
/// conjugate-gradient convention, scaled by 2).
struct Storage {
    Shape shape;
    std::vector<double> re;
    std::vector<double> im;

    Storage() = default;
    Storage(Shape s, bool complex_valued = false) : shape(std::move(s)) {
        size_t n = shape_numel(shape);
        re.assign(n, 0.0);
        if (complex_valued) im.assign(n, 0.0);
    }

    bool is_complex() const { return !im.empty(); }
    size_t size() const { return re.size(); }
};

class Tape;

/// Handle to a value, optionally recorded on a tape. Copies share storage.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::shared_ptr<const Storage> storage, Tape* tape, int node_id)
        : st_(std::move(storage)), tape_(tape), id_(node_id) {}

    /// Constant (off-tape) tensor.
    static Tensor constant(std::shared_ptr<const Storage> storage) {
        return Tensor(std::move(storage), nullptr, -1);
    }

    const Storage& value() const {
        if (!st_) throw GraphError("empty tensor");
        return *st_;
    }
    std::shared_ptr<const Storage> storage() const { return st_; }
    const Shape& shape() const { return value().shape; }
    size_t numel() const { return value().size(); }
    bool is_complex() const { return value().is_complex(); }
    bool on_tape() const { return tape_ != nullptr && id_ >= 0; }
    Tape* tape() const { return tape_; }
    int id() const { return id_; }

    double scalar() const {
        if (numel() != 1 || is_complex()) throw ShapeError("scalar() needs a real 1-element tensor");
        return value().re[0];
    }

private:
    std::shared_ptr<const Storage> st_;
    Tape* tape_ = nullptr;
    int id_ = -1;
};

/// Append-only record of operations. Nodes are stored in topological order by
/// construction; backward() walks them in reverse. Gradient buffers live on
/// the tape (not in shared storage), so one parameter set can be aliased from
/// several tapes concurrently.
class Tape {
public:
    Tensor leaf(std::shared_ptr<const Storage> value) {
        return record(std::move(value), {}, nullptr);
    }

    /// Records a node. backward(tape) reads grad(out_id) and accumulates into
    /// the parents' buffers.
    Tensor record(std::shared_ptr<const Storage> value, std::vector<int> parents,
                  std::function<void(Tape&, int)> backward) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back(NodeEntry{std::move(parents), std::move(backward), value});
        grads_.emplace_back(nullptr);
        return Tensor(nodes_.back().value, this, id);
    }

    size_t node_count() const { return nodes_.size(); }

    /// Gradient buffer for a node, allocated zero-filled on first touch with
    /// the node's value shape and complexness.
    Storage& grad_buffer(int id) {
        auto& g = grads_.at(static_cast<size_t>(id));
        if (!g) {
            const Storage& v = *nodes_[static_cast<size_t>(id)].value;
            g = std::make_unique<Storage>(v.shape, v.is_complex());
        }
        return *g;
    }

    const Storage* grad(int id) const { return grads_.at(static_cast<size_t>(id)).get(); }

    const Storage* grad(const Tensor& t) const {
        if (!t.on_tape() || t.tape() != this) throw GraphError("tensor is not on this tape");
        return grad(t.id());
    }

    void zero_grads() {
        for (auto& g : grads_) g.reset();
    }

    /// Reverse sweep seeded with d(out)/d(out) = 1. Deterministic: a second
    /// call reproduces bit-identical gradients.
    void backward(const Tensor& out) {
        if (!out.on_tape() || out.tape() != this)
            throw GraphError("backward() on a tensor that is not on this tape");
        if (out.numel() != 1 || out.is_complex())
            throw GraphError("backward() requires a real scalar output");
        zero_grads();
        grad_buffer(out.id()).re[0] = 1.0;
        for (int i = out.id(); i >= 0; --i) {
            auto& node = nodes_[static_cast<size_t>(i)];
            if (!node.backward) continue;
            if (!grads_[static_cast<size_t>(i)]) continue;  // branch never reached
            node.backward(*this, i);
        }
    }

    const Storage& value(int id) const { return *nodes_.at(static_cast<size_t>(id)).value; }

private:
    struct NodeEntry {
        std::vector<int> parents;
        std::function<void(Tape&, int)> backward;
        std::shared_ptr<const Storage> value;
    };

    std::vector<NodeEntry> nodes_;
    std::vector<std::unique_ptr<Storage>> grads_;
};

/// Copies a tensor's analytic gradient after backward(); zeros if untouched.
inline Storage grad_of(const Tensor& t) {
    if (!t.on_tape()) throw GraphError("gradient requested for an off-tape tensor");
    const Storage* g = t.tape()->grad(t);
    if (g) return *g;
    return Storage(t.shape(), t.is_complex());
}

}  // namespace holoforge::ad
