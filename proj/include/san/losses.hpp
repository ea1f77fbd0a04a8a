#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "san/common.hpp"

namespace san {

enum class GanLossKind { LeastSquares, BinaryCrossEntropy };

struct LossWeights {
    double gan = 1.0;     // lambda_GAN
    double cycle = 100.0; // lambda_cycle
    double seg = 1.0;     // lambda_seg (0 reduces to the baseline trainer)
    GanLossKind kind = GanLossKind::LeastSquares;

    void validate() const {
        if (gan < 0 || cycle < 0 || seg < 0)
            throw Error("loss weights must be >= 0");
    }
};

// Per-step decomposition of every loss term. *_seg fields are 0 when the
// segmented pass is disabled.
struct LossReport {
    double d_p_gan = 0, d_p_gan_seg = 0;
    double d_f_gan = 0, d_f_gan_seg = 0;
    double g_p_gan = 0, g_p_gan_seg = 0;
    double g_f_gan = 0, g_f_gan_seg = 0;
    double cycle = 0, cycle_seg = 0;
    double d_total = 0, g_total = 0;

    bool all_finite() const;
    // Flat key=value serialization, fixed field order, %.17g values.
    std::string serialize() const;
    static const std::vector<std::pair<std::string, double LossReport::*>>& fields();
};

namespace losses {

// Loss kernels shared by the float training path and the double-precision
// gradient checks. Gradient outputs are the raw dL/darg (not scaled by any
// upstream factor) and may be null.

// mean[(real-1)^2] + mean[fake^2]
template <class S>
S lsgan_d(const S* real, size_t nr, const S* fake, size_t nf, S* g_real = nullptr,
          S* g_fake = nullptr) {
    if (nr == 0 || nf == 0) throw Error("adversarial loss: empty logit set");
    S acc = 0;
    for (size_t i = 0; i < nr; ++i) {
        S d = real[i] - S(1);
        acc += d * d / S(nr);
        if (g_real) g_real[i] = S(2) * d / S(nr);
    }
    for (size_t i = 0; i < nf; ++i) {
        acc += fake[i] * fake[i] / S(nf);
        if (g_fake) g_fake[i] = S(2) * fake[i] / S(nf);
    }
    return acc;
}

// mean[(fake-1)^2]
template <class S>
S lsgan_g(const S* fake, size_t nf, S* g_fake = nullptr) {
    if (nf == 0) throw Error("adversarial loss: empty logit set");
    S acc = 0;
    for (size_t i = 0; i < nf; ++i) {
        S d = fake[i] - S(1);
        acc += d * d / S(nf);
        if (g_fake) g_fake[i] = S(2) * d / S(nf);
    }
    return acc;
}

template <class S>
S sigmoid_of(S x) {
    return S(1) / (S(1) + std::exp(-x));
}

// -mean[log sigmoid(real)] - mean[log(1 - sigmoid(fake))], on logits.
template <class S>
S bce_d(const S* real, size_t nr, const S* fake, size_t nf, S* g_real = nullptr,
        S* g_fake = nullptr) {
    if (nr == 0 || nf == 0) throw Error("adversarial loss: empty logit set");
    S acc = 0;
    for (size_t i = 0; i < nr; ++i) {
        S s = sigmoid_of(real[i]);
        acc += -std::log(s) / S(nr);
        if (g_real) g_real[i] = (s - S(1)) / S(nr);
    }
    for (size_t i = 0; i < nf; ++i) {
        S s = sigmoid_of(fake[i]);
        acc += -std::log(S(1) - s) / S(nf);
        if (g_fake) g_fake[i] = s / S(nf);
    }
    return acc;
}

// -mean[log sigmoid(fake)]
template <class S>
S bce_g(const S* fake, size_t nf, S* g_fake = nullptr) {
    if (nf == 0) throw Error("adversarial loss: empty logit set");
    S acc = 0;
    for (size_t i = 0; i < nf; ++i) {
        S s = sigmoid_of(fake[i]);
        acc += -std::log(s) / S(nf);
        if (g_fake) g_fake[i] = (s - S(1)) / S(nf);
    }
    return acc;
}

// mean|a - b| over all elements.
template <class S>
S l1(const S* a, const S* b, size_t n, S* g_a = nullptr, S* g_b = nullptr) {
    if (n == 0) throw Error("cycle loss: empty input");
    S acc = 0;
    for (size_t i = 0; i < n; ++i) {
        S d = a[i] - b[i];
        acc += std::abs(d) / S(n);
        S s = d > S(0) ? S(1) / S(n) : (d < S(0) ? S(-1) / S(n) : S(0));
        if (g_a) g_a[i] = s;
        if (g_b) g_b[i] = -s;
    }
    return acc;
}

// base + lambda_seg * seg. Gradients: d/dbase = 1, d/dseg = lambda_seg.
template <class S>
S compose_total(S base, S seg, S lambda_seg, S* g_base = nullptr, S* g_seg = nullptr) {
    if (!std::isfinite(base) || !std::isfinite(seg) || !std::isfinite(lambda_seg))
        throw Error("compose_total: non-finite input");
    if (g_base) *g_base = S(1);
    if (g_seg) *g_seg = lambda_seg;
    return base + lambda_seg * seg;
}

} // namespace losses
} // namespace san
