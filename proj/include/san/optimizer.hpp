#pragma once

#include "san/graph.hpp"

namespace san::nn {

struct AdamConfig {
    float lr = 1e-3f;
    float beta1 = 0.5f; // CycleGAN convention
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

class Adam {
public:
    Adam(std::vector<Param*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {}

    void step();
    void zero_grad() {
        for (auto* p : params_) p->zero_grad();
    }

    int64_t t() const { return t_; }
    void set_t(int64_t t) { t_ = t; }
    float lr() const { return cfg_.lr; }
    void set_lr(float lr) { cfg_.lr = lr; }

private:
    std::vector<Param*> params_;
    AdamConfig cfg_;
    int64_t t_ = 0;
};

} // namespace san::nn
