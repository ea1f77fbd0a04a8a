#pragma once

#include <functional>
#include <string>
#include <vector>

#include "san/tensor.hpp"

namespace san::nn {

// Learnable tensor with its gradient and Adam moment buffers. Owned by
// modules; graphs reference params by pointer and accumulate into grad.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor m, v; // optimizer state, sized on first optimizer step

    void ensure_grad() {
        if (grad.shape() != value.shape()) grad = Tensor(value.shape());
    }
    void zero_grad() {
        ensure_grad();
        grad.zero();
    }
};

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Tape of one forward computation. Ops append nodes in topological order;
// backward() walks the tape in reverse, accumulating into node and param
// gradients. Reverse iteration order is fixed, so gradient accumulation is
// deterministic.
class Graph {
public:
    Var leaf(Tensor value);

    const Tensor& val(Var v) const { return nodes_[v.id].val; }
    float scalar(Var v) const;

    // Gradient buffer of a node, zero-allocated on first access.
    Tensor& grad_buf(Var v);
    bool grad_seeded(Var v) const { return nodes_[v.id].grad_seeded; }

    // Seeds d(root)/d(root) = 1 (root must be scalar) and runs the tape
    // backward over the ancestors of root.
    void backward(Var root);

    bool grad_enabled() const { return grad_enabled_; }
    void set_grad_enabled(bool on) { grad_enabled_ = on; }

    // Op plumbing. When gradients are disabled the node is recorded without
    // parents or a backward closure. The closure receives the node's own id
    // so it can read the incoming gradient.
    Var add_node(Tensor value, std::vector<int> parents,
                 std::function<void(Graph&, int)> back);

    size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor val;
        Tensor grad;
        bool grad_seeded = false;
        std::vector<int> parents;
        std::function<void(Graph&, int)> back;
    };
    std::vector<Node> nodes_;
    bool grad_enabled_ = true;
};

struct NoGradGuard {
    explicit NoGradGuard(Graph& g) : g_(g), prev_(g.grad_enabled()) {
        g_.set_grad_enabled(false);
    }
    ~NoGradGuard() { g_.set_grad_enabled(prev_); }
    NoGradGuard(const NoGradGuard&) = delete;

private:
    Graph& g_;
    bool prev_;
};

// ---- primitive ops ------------------------------------------------------

Var conv2d(Graph& g, Var x, Param& w, Param* bias, int stride, int pad);
Var linear(Graph& g, Var x, Param& w, Param& b); // x: NxCx1x1 -> NxKx1x1
Var instance_norm(Graph& g, Var x, Param& gamma, Param& beta, float eps = 1e-5f);
Var relu(Graph& g, Var x);
Var leaky_relu(Graph& g, Var x, float slope = 0.2f);
Var sigmoid(Graph& g, Var x);
Var tanh_act(Graph& g, Var x);
Var maxpool(Graph& g, Var x, int k, int stride, int pad);
Var upsample_nearest2x(Graph& g, Var x);
Var concat_channels(Graph& g, Var a, Var b);
Var add(Graph& g, Var a, Var b);
// x: NxCxHxW gated by alpha: Nx1xHxW, broadcast across channels.
Var mul_gate(Graph& g, Var x, Var alpha);
Var global_avg_pool(Graph& g, Var x); // -> NxCx1x1

// ---- scalar combinators --------------------------------------------------

Var scale(Graph& g, Var x, float s);
Var add_scalars(Graph& g, const std::vector<Var>& xs);
// base + lambda_seg * seg; errors on non-finite inputs (training guard).
Var compose_total(Graph& g, Var base, Var seg, float lambda_seg);

// ---- loss reductions (scalar outputs) ------------------------------------

Var lsgan_d_loss(Graph& g, Var real_logits, Var fake_logits);
Var lsgan_g_loss(Graph& g, Var fake_logits);
Var bce_d_loss(Graph& g, Var real_logits, Var fake_logits);
Var bce_g_loss(Graph& g, Var fake_logits);
Var l1_loss(Graph& g, Var a, Var b);

} // namespace san::nn
