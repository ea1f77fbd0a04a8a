#include "san/optimizer.hpp"

#include <cmath>

namespace san::nn {

void Adam::step() {
    ++t_;
    const float bc1 = 1.0f - std::pow(cfg_.beta1, float(t_));
    const float bc2 = 1.0f - std::pow(cfg_.beta2, float(t_));
    for (auto* p : params_) {
        p->ensure_grad();
        if (p->m.shape() != p->value.shape()) {
            p->m = Tensor(p->value.shape());
            p->v = Tensor(p->value.shape());
        }
        for (int64_t i = 0; i < p->value.numel(); ++i) {
            const float g = p->grad[i];
            p->m[i] = cfg_.beta1 * p->m[i] + (1.0f - cfg_.beta1) * g;
            p->v[i] = cfg_.beta2 * p->v[i] + (1.0f - cfg_.beta2) * g * g;
            const float mhat = p->m[i] / bc1;
            const float vhat = p->v[i] / bc2;
            p->value[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

} // namespace san::nn
