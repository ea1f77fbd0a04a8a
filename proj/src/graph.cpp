#include "san/graph.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "san/losses.hpp"

namespace san::nn {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<RowMat>;
using CMapRM = Eigen::Map<const RowMat>;

Var Graph::leaf(Tensor value) {
    return add_node(std::move(value), {}, nullptr);
}

float Graph::scalar(Var v) const {
    const Tensor& t = val(v);
    if (t.numel() != 1)
        throw Error("Graph::scalar: node is not scalar, shape " + t.shape().str());
    return t[0];
}

Tensor& Graph::grad_buf(Var v) {
    Node& n = nodes_[v.id];
    if (!n.grad_seeded) {
        n.grad = Tensor(n.val.shape());
        n.grad_seeded = true;
    }
    return n.grad;
}

Var Graph::add_node(Tensor value, std::vector<int> parents,
                    std::function<void(Graph&, int)> back) {
    Node n;
    n.val = std::move(value);
    if (grad_enabled_) {
        n.parents = std::move(parents);
        n.back = std::move(back);
    }
    nodes_.push_back(std::move(n));
    return Var{int(nodes_.size()) - 1};
}

void Graph::backward(Var root) {
    if (!root.valid() || size_t(root.id) >= nodes_.size())
        throw Error("Graph::backward: invalid root");
    if (nodes_[root.id].val.numel() != 1)
        throw Error("Graph::backward: root must be scalar");

    std::vector<char> reach(nodes_.size(), 0);
    std::vector<int> stack{root.id};
    reach[root.id] = 1;
    while (!stack.empty()) {
        int i = stack.back();
        stack.pop_back();
        for (int p : nodes_[i].parents)
            if (!reach[p]) {
                reach[p] = 1;
                stack.push_back(p);
            }
    }

    grad_buf(root)[0] = 1.0f;
    for (int i = root.id; i >= 0; --i) {
        Node& n = nodes_[i];
        if (reach[i] && n.back && n.grad_seeded) n.back(*this, i);
    }
}

// ---- conv helpers ---------------------------------------------------------

namespace {

void im2col(const float* x, int C, int H, int W, int k, int stride, int pad, int Ho, int Wo,
            float* col) {
    const size_t npos = size_t(Ho) * Wo;
    for (int c = 0; c < C; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                float* dst = col + ((size_t(c) * k + ky) * k + kx) * npos;
                for (int oy = 0; oy < Ho; ++oy, dst += Wo) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= H) {
                        std::fill(dst, dst + Wo, 0.0f);
                        continue;
                    }
                    const float* src = x + (size_t(c) * H + iy) * W;
                    for (int ox = 0; ox < Wo; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        dst[ox] = (ix >= 0 && ix < W) ? src[ix] : 0.0f;
                    }
                }
            }
}

void col2im_add(const float* col, int C, int H, int W, int k, int stride, int pad, int Ho,
                int Wo, float* gx) {
    const size_t npos = size_t(Ho) * Wo;
    for (int c = 0; c < C; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const float* src = col + ((size_t(c) * k + ky) * k + kx) * npos;
                for (int oy = 0; oy < Ho; ++oy, src += Wo) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= H) continue;
                    float* dst = gx + (size_t(c) * H + iy) * W;
                    for (int ox = 0; ox < Wo; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < W) dst[ix] += src[ox];
                    }
                }
            }
}

int out_side(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

} // namespace

Var conv2d(Graph& g, Var x, Param& w, Param* bias, int stride, int pad) {
    const Tensor& xv = g.val(x);
    const Shape xs = xv.shape();
    const Shape ws = w.value.shape(); // (Cout, Cin, k, k)
    if (ws.c != xs.c)
        throw Error("conv2d: input channels " + std::to_string(xs.c) + " != weight channels " +
                    std::to_string(ws.c) + " (" + w.name + ")");
    if (ws.h != ws.w)
        throw Error("conv2d: non-square kernel");
    const int k = ws.h, Cout = ws.n, Cin = ws.c;
    const int Ho = out_side(xs.h, k, stride, pad), Wo = out_side(xs.w, k, stride, pad);
    if (Ho <= 0 || Wo <= 0)
        throw Error("conv2d: output collapses to zero for input " + xs.str());

    const size_t npos = size_t(Ho) * Wo;
    const size_t ckk = size_t(Cin) * k * k;
    Tensor out(xs.n, Cout, Ho, Wo);
    std::vector<float> col(ckk * npos);
    CMapRM wm(w.value.data(), Cout, ckk);
    for (int n = 0; n < xs.n; ++n) {
        im2col(xv.data() + size_t(n) * Cin * xs.h * xs.w, Cin, xs.h, xs.w, k, stride, pad, Ho,
               Wo, col.data());
        CMapRM cm(col.data(), ckk, npos);
        MapRM om(out.data() + size_t(n) * Cout * npos, Cout, npos);
        om.noalias() = wm * cm;
        if (bias)
            for (int c = 0; c < Cout; ++c)
                om.row(c).array() += bias->value[c];
    }

    auto back = [x, &w, bias, stride, pad, k, Cin, Cout, Ho, Wo, xs](Graph& gg, int self) {
        const Tensor& go = gg.grad_buf(Var{self});
        const Tensor& xin = gg.val(x);
        w.ensure_grad();
        if (bias) bias->ensure_grad();
        Tensor& gx = gg.grad_buf(x);
        const size_t npos = size_t(Ho) * Wo;
        const size_t ckk = size_t(Cin) * k * k;
        std::vector<float> col(ckk * npos);
        std::vector<float> gcol(ckk * npos);
        MapRM gwm(w.grad.data(), Cout, ckk);
        CMapRM wm(w.value.data(), Cout, ckk);
        for (int n = 0; n < xs.n; ++n) {
            CMapRM gom(go.data() + size_t(n) * Cout * npos, Cout, npos);
            im2col(xin.data() + size_t(n) * Cin * xs.h * xs.w, Cin, xs.h, xs.w, k, stride, pad,
                   Ho, Wo, col.data());
            CMapRM cm(col.data(), ckk, npos);
            gwm.noalias() += gom * cm.transpose();
            if (bias)
                for (int c = 0; c < Cout; ++c)
                    bias->grad[c] += gom.row(c).sum();
            MapRM gcm(gcol.data(), ckk, npos);
            gcm.noalias() = wm.transpose() * gom;
            col2im_add(gcol.data(), Cin, xs.h, xs.w, k, stride, pad, Ho, Wo,
                       gx.data() + size_t(n) * Cin * xs.h * xs.w);
        }
    };
    return g.add_node(std::move(out), {x.id}, back);
}

Var linear(Graph& g, Var x, Param& w, Param& b) {
    const Tensor& xv = g.val(x);
    const Shape xs = xv.shape();
    if (xs.h != 1 || xs.w != 1)
        throw Error("linear: expected NxCx1x1 input, got " + xs.str());
    const Shape ws = w.value.shape(); // (K, C, 1, 1)
    if (ws.c != xs.c)
        throw Error("linear: feature size mismatch");
    const int K = ws.n, C = ws.c;
    Tensor out(xs.n, K, 1, 1);
    for (int n = 0; n < xs.n; ++n)
        for (int kk = 0; kk < K; ++kk) {
            float acc = b.value[kk];
            for (int c = 0; c < C; ++c)
                acc += w.value[size_t(kk) * C + c] * xv[size_t(n) * C + c];
            out[size_t(n) * K + kk] = acc;
        }

    auto back = [x, &w, &b, K, C, xs](Graph& gg, int self) {
        const Tensor& go = gg.grad_buf(Var{self});
        const Tensor& xin = gg.val(x);
        w.ensure_grad();
        b.ensure_grad();
        Tensor& gx = gg.grad_buf(x);
        for (int n = 0; n < xs.n; ++n)
            for (int kk = 0; kk < K; ++kk) {
                const float gk = go[size_t(n) * K + kk];
                b.grad[kk] += gk;
                for (int c = 0; c < C; ++c) {
                    w.grad[size_t(kk) * C + c] += gk * xin[size_t(n) * C + c];
                    gx[size_t(n) * C + c] += gk * w.value[size_t(kk) * C + c];
                }
            }
    };
    return g.add_node(std::move(out), {x.id}, back);
}

Var instance_norm(Graph& g, Var x, Param& gamma, Param& beta, float eps) {
    const Tensor& xv = g.val(x);
    const Shape xs = xv.shape();
    if (gamma.value.numel() != xs.c || beta.value.numel() != xs.c)
        throw Error("instance_norm: affine parameter size mismatch");
    const int64_t hw = int64_t(xs.h) * xs.w;
    Tensor out(xs);
    std::vector<float> mu(size_t(xs.n) * xs.c), inv(size_t(xs.n) * xs.c);
    for (int n = 0; n < xs.n; ++n)
        for (int c = 0; c < xs.c; ++c) {
            const float* px = xv.data() + (size_t(n) * xs.c + c) * hw;
            double m = 0;
            for (int64_t i = 0; i < hw; ++i) m += px[i];
            m /= double(hw);
            double var = 0;
            for (int64_t i = 0; i < hw; ++i) {
                double d = px[i] - m;
                var += d * d;
            }
            var /= double(hw);
            const float im = 1.0f / std::sqrt(float(var) + eps);
            mu[size_t(n) * xs.c + c] = float(m);
            inv[size_t(n) * xs.c + c] = im;
            float* po = out.data() + (size_t(n) * xs.c + c) * hw;
            const float gc = gamma.value[c], bc = beta.value[c];
            for (int64_t i = 0; i < hw; ++i)
                po[i] = gc * (px[i] - float(m)) * im + bc;
        }

    auto back = [x, &gamma, &beta, xs, hw, mu = std::move(mu),
                 inv = std::move(inv)](Graph& gg, int self) {
        const Tensor& go = gg.grad_buf(Var{self});
        const Tensor& xin = gg.val(x);
        gamma.ensure_grad();
        beta.ensure_grad();
        Tensor& gx = gg.grad_buf(x);
        for (int n = 0; n < xs.n; ++n)
            for (int c = 0; c < xs.c; ++c) {
                const size_t nc = size_t(n) * xs.c + c;
                const float m = mu[nc], im = inv[nc], gc = gamma.value[c];
                const float* px = xin.data() + nc * hw;
                const float* pg = go.data() + nc * hw;
                float* pgx = gx.data() + nc * hw;
                double sum_g = 0, sum_gx = 0;
                for (int64_t i = 0; i < hw; ++i) {
                    const float xh = (px[i] - m) * im;
                    sum_g += pg[i];
                    sum_gx += double(pg[i]) * xh;
                }
                gamma.grad[c] += float(sum_gx);
                beta.grad[c] += float(sum_g);
                const float mean_g = float(sum_g / double(hw));
                const float mean_gx = float(sum_gx / double(hw));
                for (int64_t i = 0; i < hw; ++i) {
                    const float xh = (px[i] - m) * im;
                    pgx[i] += gc * im * (pg[i] - mean_g - xh * mean_gx);
                }
            }
    };
    return g.add_node(std::move(out), {x.id}, back);
}

namespace {

template <class Fwd, class Bwd>
Var elementwise(Graph& g, Var x, Fwd fwd, Bwd bwd_factor_from_in_out) {
    const Tensor& xv = g.val(x);
    Tensor out(xv.shape());
    for (int64_t i = 0; i < xv.numel(); ++i) out[i] = fwd(xv[i]);
    auto back = [x, bwd_factor_from_in_out](Graph& gg, int self) {
        const Tensor& go = gg.grad_buf(Var{self});
        const Tensor& yv = gg.val(Var{self});
        const Tensor& xin = gg.val(x);
        Tensor& gx = gg.grad_buf(x);
        for (int64_t i = 0; i < go.numel(); ++i)
            gx[i] += go[i] * bwd_factor_from_in_out(xin[i], yv[i]);
    };
    return g.add_node(std::move(out), {x.id}, back);
}

} // namespace

Var relu(Graph& g, Var x) {
    return elementwise(
        g, x, [](float v) { return v > 0.0f ? v : 0.0f; },
        [](float xi, float) { return xi > 0.0f ? 1.0f : 0.0f; });
}

Var leaky_relu(Graph& g, Var x, float slope) {
    return elementwise(
        g, x, [slope](float v) { return v > 0.0f ? v : slope * v; },
        [slope](float xi, float) { return xi > 0.0f ? 1.0f : slope; });
}

Var sigmoid(Graph& g, Var x) {
    return elementwise(
        g, x, [](float v) { return 1.0f / (1.0f + std::exp(-v)); },
        [](float, float y) { return y * (1.0f - y); });
}

Var tanh_act(Graph& g, Var x) {
    return elementwise(
        g, x, [](float v) { return std::tanh(v); },
        [](float, float y) { return 1.0f - y * y; });
}

Var maxpool(Graph& g, Var x, int k, int stride, int pad) {
    const Tensor& xv = g.val(x);
    const Shape xs = xv.shape();
    const int Ho = out_side(xs.h, k, stride, pad), Wo = out_side(xs.w, k, stride, pad);
    if (Ho <= 0 || Wo <= 0)
        throw Error("maxpool: output collapses to zero for input " + xs.str());
    Tensor out(xs.n, xs.c, Ho, Wo);
    std::vector<int32_t> argmax(size_t(out.numel()), -1);
    int64_t o = 0;
    for (int n = 0; n < xs.n; ++n)
        for (int c = 0; c < xs.c; ++c) {
            const float* plane = xv.data() + (size_t(n) * xs.c + c) * xs.h * xs.w;
            for (int oy = 0; oy < Ho; ++oy)
                for (int ox = 0; ox < Wo; ++ox, ++o) {
                    float best = -std::numeric_limits<float>::infinity();
                    int32_t bi = -1;
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= xs.h) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ix = ox * stride - pad + kx;
                            if (ix < 0 || ix >= xs.w) continue;
                            const float v = plane[size_t(iy) * xs.w + ix];
                            if (v > best) {
                                best = v;
                                bi = int32_t(iy * xs.w + ix);
                            }
                        }
                    }
                    out[o] = best;
                    argmax[o] = bi;
                }
        }

    auto back = [x, xs, argmax = std::move(argmax)](Graph& gg, int self) {
        const Tensor& go = gg.grad_buf(Var{self});
        Tensor& gx = gg.grad_buf(x);
        const int64_t planes = int64_t(xs.n) * xs.c;
        const int64_t opp = go.numel() / planes; // outputs per plane
        const int64_t hw = int64_t(xs.h) * xs.w;
        for (int64_t p = 0; p < planes; ++p) {
            float* gplane = gx.data() + p * hw;
            for (int64_t i = 0; i < opp; ++i) {
                const int32_t a = argmax[p * opp + i];
                if (a >= 0) gplane[a] += go[p * opp + i];
            }
        }
    };
    return g.add_node(std::move(out), {x.id}, back);
}

Var upsample_nearest2x(Graph& g, Var x) {
    const Tensor& xv = g.val(x);
    const Shape xs = xv.shape();
    Tensor out(xs.n, xs.c, xs.h * 2, xs.w * 2);
    for (int n = 0; n < xs.n; ++n)
        for (int c = 0; c < xs.c; ++c) {
            const float* src = xv.data() + (size_t(n) * xs.c + c) * xs.h * xs.w;
            float* dst = out.data() + (size_t(n) * xs.c + c) * xs.h * xs.w * 4;
            for (int y = 0; y < xs.h; ++y)
                for (int x2 = 0; x2 < xs.w; ++x2) {
                    const float v = src[size_t(y) * xs.w + x2];
                    float* d = dst + size_t(2 * y) * (2 * xs.w) + 2 * x2;
                    d[0] = v;
                    d[1] = v;
                    d[2 * xs.w] = v;
                    d[2 * xs.w + 1] = v;
                }
        }
    auto back = [x, xs](Graph& gg, int self) {
        const Tensor& go = gg.grad_buf(Var{self});
        Tensor& gx = gg.grad_buf(x);
        for (int n = 0; n < xs.n; ++n)
            for (int c = 0; c < xs.c; ++c) {
                const float* src = go.data() + (size_t(n) * xs.c + c) * xs.h * xs.w * 4;
                float* dst = gx.data() + (size_t(n) * xs.c + c) * xs.h * xs.w;
                for (int y = 0; y < xs.h; ++y)
                    for (int x2 = 0; x2 < xs.w; ++x2) {
                        const float* s = src + size_t(2 * y) * (2 * xs.w) + 2 * x2;
                        dst[size_t(y) * xs.w + x2] +=
                            s[0] + s[1] + s[2 * xs.w] + s[2 * xs.w + 1];
                    }
            }
    };
    return g.add_node(std::move(out), {x.id}, back);
}

Var concat_channels(Graph& g, Var a, Var b) {
    const Tensor& av = g.val(a);
    const Tensor& bv = g.val(b);
    const Shape as = av.shape(), bs = bv.shape();
    if (as.n != bs.n || as.h != bs.h || as.w != bs.w)
        throw Error("concat_channels: incompatible shapes " + as.str() + " vs " + bs.str());
    Tensor out(as.n, as.c + bs.c, as.h, as.w);
    const size_t hw = size_t(as.h) * as.w;
    for (int n = 0; n < as.n; ++n) {
        std::copy(av.data() + size_t(n) * as.c * hw, av.data() + size_t(n + 1) * as.c * hw,
                  out.data() + size_t(n) * (as.c + bs.c) * hw);
        std::copy(bv.data() + size_t(n) * bs.c * hw, bv.data() + size_t(n + 1) * bs.c * hw,
                  out.data() + size_t(n) * (as.c + bs.c) * hw + size_t(as.c) * hw);
    }
    auto back = [a, b, as, bs, hw](Graph& gg, int self) {
        const Tensor& go = gg.grad_buf(Var{self});
        Tensor& ga = gg.grad_buf(a);
        Tensor& gb = gg.grad_buf(b);
        for (int n = 0; n < as.n; ++n) {
            const float* src = go.data() + size_t(n) * (as.c + bs.c) * hw;
            float* pa = ga.data() + size_t(n) * as.c * hw;
            float* pb = gb.data() + size_t(n) * bs.c * hw;
            for (size_t i = 0; i < size_t(as.c) * hw; ++i) pa[i] += src[i];
            for (size_t i = 0; i < size_t(bs.c) * hw; ++i) pb[i] += src[size_t(as.c) * hw + i];
        }
    };
    return g.add_node(std::move(out), {a.id, b.id}, back);
}

Var add(Graph& g, Var a, Var b) {
    const Tensor& av = g.val(a);
    const Tensor& bv = g.val(b);
    check_same_shape(av, bv, "add");
    Tensor out(av.shape());
    for (int64_t i = 0; i < av.numel(); ++i) out[i] = av[i] + bv[i];
    auto back = [a, b](Graph& gg, int self) {
        const Tensor& go = gg.grad_buf(Var{self});
        Tensor& ga = gg.grad_buf(a);
        Tensor& gb = gg.grad_buf(b);
        for (int64_t i = 0; i < go.numel(); ++i) {
            ga[i] += go[i];
            gb[i] += go[i];
        }
    };
    return g.add_node(std::move(out), {a.id, b.id}, back);
}

Var mul_gate(Graph& g, Var x, Var alpha) {
    const Tensor& xv = g.val(x);
    const Tensor& av = g.val(alpha);
    const Shape xs = xv.shape(), as = av.shape();
    if (as.n != xs.n || as.c != 1 || as.h != xs.h || as.w != xs.w)
        throw Error("mul_gate: alpha must be Nx1xHxW matching x, got " + as.str() + " for x " +
                    xs.str());
    Tensor out(xs);
    const size_t hw = size_t(xs.h) * xs.w;
    for (int n = 0; n < xs.n; ++n) {
        const float* pa = av.data() + size_t(n) * hw;
        for (int c = 0; c < xs.c; ++c) {
            const float* px = xv.data() + (size_t(n) * xs.c + c) * hw;
            float* po = out.data() + (size_t(n) * xs.c + c) * hw;
            for (size_t i = 0; i < hw; ++i) po[i] = px[i] * pa[i];
        }
    }
    auto back = [x, alpha, xs, hw](Graph& gg, int self) {
        const Tensor& go = gg.grad_buf(Var{self});
        const Tensor& xin = gg.val(x);
        const Tensor& ain = gg.val(alpha);
        Tensor& gx = gg.grad_buf(x);
        Tensor& ga = gg.grad_buf(alpha);
        for (int n = 0; n < xs.n; ++n) {
            const float* pa = ain.data() + size_t(n) * hw;
            float* pga = ga.data() + size_t(n) * hw;
            for (int c = 0; c < xs.c; ++c) {
                const size_t off = (size_t(n) * xs.c + c) * hw;
                for (size_t i = 0; i < hw; ++i) {
                    gx[off + i] += go[off + i] * pa[i];
                    pga[i] += go[off + i] * xin[off + i];
                }
            }
        }
    };
    return g.add_node(std::move(out), {x.id, alpha.id}, back);
}

Var global_avg_pool(Graph& g, Var x) {
    const Tensor& xv = g.val(x);
    const Shape xs = xv.shape();
    const int64_t hw = int64_t(xs.h) * xs.w;
    Tensor out(xs.n, xs.c, 1, 1);
    for (int n = 0; n < xs.n; ++n)
        for (int c = 0; c < xs.c; ++c) {
            const float* p = xv.data() + (size_t(n) * xs.c + c) * hw;
            double acc = 0;
            for (int64_t i = 0; i < hw; ++i) acc += p[i];
            out[size_t(n) * xs.c + c] = float(acc / double(hw));
        }
    auto back = [x, xs, hw](Graph& gg, int self) {
        const Tensor& go = gg.grad_buf(Var{self});
        Tensor& gx = gg.grad_buf(x);
        for (int n = 0; n < xs.n; ++n)
            for (int c = 0; c < xs.c; ++c) {
                const float gnc = go[size_t(n) * xs.c + c] / float(hw);
                float* p = gx.data() + (size_t(n) * xs.c + c) * hw;
                for (int64_t i = 0; i < hw; ++i) p[i] += gnc;
            }
    };
    return g.add_node(std::move(out), {x.id}, back);
}

// ---- scalar combinators ----------------------------------------------------

Var scale(Graph& g, Var x, float s) {
    const Tensor& xv = g.val(x);
    Tensor out(xv.shape());
    for (int64_t i = 0; i < xv.numel(); ++i) out[i] = xv[i] * s;
    auto back = [x, s](Graph& gg, int self) {
        const Tensor& go = gg.grad_buf(Var{self});
        Tensor& gx = gg.grad_buf(x);
        for (int64_t i = 0; i < go.numel(); ++i) gx[i] += go[i] * s;
    };
    return g.add_node(std::move(out), {x.id}, back);
}

Var add_scalars(Graph& g, const std::vector<Var>& xs) {
    if (xs.empty()) throw Error("add_scalars: empty list");
    Tensor out(g.val(xs[0]).shape());
    std::vector<int> parents;
    for (Var v : xs) {
        const Tensor& t = g.val(v);
        check_same_shape(out, t, "add_scalars");
        for (int64_t i = 0; i < t.numel(); ++i) out[i] += t[i];
        parents.push_back(v.id);
    }
    auto back = [xs](Graph& gg, int self) {
        const Tensor& go = gg.grad_buf(Var{self});
        for (Var v : xs) {
            Tensor& gv = gg.grad_buf(v);
            for (int64_t i = 0; i < go.numel(); ++i) gv[i] += go[i];
        }
    };
    return g.add_node(std::move(out), parents, back);
}

Var compose_total(Graph& g, Var base, Var seg, float lambda_seg) {
    const float b = g.scalar(base), s = g.scalar(seg);
    Tensor out(1, 1, 1, 1);
    out[0] = losses::compose_total<float>(b, s, lambda_seg);
    auto back = [base, seg, lambda_seg](Graph& gg, int self) {
        const float go = gg.grad_buf(Var{self})[0];
        gg.grad_buf(base)[0] += go;
        gg.grad_buf(seg)[0] += go * lambda_seg;
    };
    return g.add_node(std::move(out), {base.id, seg.id}, back);
}

// ---- loss reductions --------------------------------------------------------

namespace {

Var scalar_node(Graph& g, float value, std::vector<int> parents,
                std::function<void(Graph&, int)> back) {
    Tensor out(1, 1, 1, 1);
    out[0] = value;
    return g.add_node(std::move(out), std::move(parents), std::move(back));
}

} // namespace

Var lsgan_d_loss(Graph& g, Var real_logits, Var fake_logits) {
    const Tensor& r = g.val(real_logits);
    const Tensor& f = g.val(fake_logits);
    const float v = losses::lsgan_d<float>(r.data(), r.numel(), f.data(), f.numel());
    auto back = [real_logits, fake_logits](Graph& gg, int self) {
        const float go = gg.grad_buf(Var{self})[0];
        const Tensor& r = gg.val(real_logits);
        const Tensor& f = gg.val(fake_logits);
        std::vector<float> gr(r.numel()), gf(f.numel());
        losses::lsgan_d<float>(r.data(), r.numel(), f.data(), f.numel(), gr.data(), gf.data());
        Tensor& agr = gg.grad_buf(real_logits);
        Tensor& agf = gg.grad_buf(fake_logits);
        for (int64_t i = 0; i < r.numel(); ++i) agr[i] += go * gr[i];
        for (int64_t i = 0; i < f.numel(); ++i) agf[i] += go * gf[i];
    };
    return scalar_node(g, v, {real_logits.id, fake_logits.id}, back);
}

Var lsgan_g_loss(Graph& g, Var fake_logits) {
    const Tensor& f = g.val(fake_logits);
    const float v = losses::lsgan_g<float>(f.data(), f.numel());
    auto back = [fake_logits](Graph& gg, int self) {
        const float go = gg.grad_buf(Var{self})[0];
        const Tensor& f = gg.val(fake_logits);
        std::vector<float> gf(f.numel());
        losses::lsgan_g<float>(f.data(), f.numel(), gf.data());
        Tensor& agf = gg.grad_buf(fake_logits);
        for (int64_t i = 0; i < f.numel(); ++i) agf[i] += go * gf[i];
    };
    return scalar_node(g, v, {fake_logits.id}, back);
}

Var bce_d_loss(Graph& g, Var real_logits, Var fake_logits) {
    const Tensor& r = g.val(real_logits);
    const Tensor& f = g.val(fake_logits);
    const float v = losses::bce_d<float>(r.data(), r.numel(), f.data(), f.numel());
    auto back = [real_logits, fake_logits](Graph& gg, int self) {
        const float go = gg.grad_buf(Var{self})[0];
        const Tensor& r = gg.val(real_logits);
        const Tensor& f = gg.val(fake_logits);
        std::vector<float> gr(r.numel()), gf(f.numel());
        losses::bce_d<float>(r.data(), r.numel(), f.data(), f.numel(), gr.data(), gf.data());
        Tensor& agr = gg.grad_buf(real_logits);
        Tensor& agf = gg.grad_buf(fake_logits);
        for (int64_t i = 0; i < r.numel(); ++i) agr[i] += go * gr[i];
        for (int64_t i = 0; i < f.numel(); ++i) agf[i] += go * gf[i];
    };
    return scalar_node(g, v, {real_logits.id, fake_logits.id}, back);
}

Var bce_g_loss(Graph& g, Var fake_logits) {
    const Tensor& f = g.val(fake_logits);
    const float v = losses::bce_g<float>(f.data(), f.numel());
    auto back = [fake_logits](Graph& gg, int self) {
        const float go = gg.grad_buf(Var{self})[0];
        const Tensor& f = gg.val(fake_logits);
        std::vector<float> gf(f.numel());
        losses::bce_g<float>(f.data(), f.numel(), gf.data());
        Tensor& agf = gg.grad_buf(fake_logits);
        for (int64_t i = 0; i < f.numel(); ++i) agf[i] += go * gf[i];
    };
    return scalar_node(g, v, {fake_logits.id}, back);
}

Var l1_loss(Graph& g, Var a, Var b) {
    const Tensor& av = g.val(a);
    const Tensor& bv = g.val(b);
    check_same_shape(av, bv, "l1_loss");
    const float v = losses::l1<float>(av.data(), bv.data(), av.numel());
    auto back = [a, b](Graph& gg, int self) {
        const float go = gg.grad_buf(Var{self})[0];
        const Tensor& av = gg.val(a);
        const Tensor& bv = gg.val(b);
        std::vector<float> ga(av.numel()), gb(bv.numel());
        losses::l1<float>(av.data(), bv.data(), av.numel(), ga.data(), gb.data());
        Tensor& aga = gg.grad_buf(a);
        Tensor& agb = gg.grad_buf(b);
        for (int64_t i = 0; i < av.numel(); ++i) {
            aga[i] += go * ga[i];
            agb[i] += go * gb[i];
        }
    };
    return scalar_node(g, v, {a.id, b.id}, back);
}

} // namespace san::nn
