#include "san/networks.hpp"

#include <algorithm>

namespace san::nn {

void GeneratorConfig::validate() const {
    if (depth < 2) throw Error("generator depth must be >= 2");
    if (base_width < 1) throw Error("generator base_width must be >= 1");
    if (in_channels < 1 || out_channels < 1) throw Error("generator channels must be >= 1");
}

void DiscriminatorConfig::validate() const {
    if (widths.size() != 4) throw Error("discriminator needs exactly 4 stage widths");
    for (int w : widths)
        if (w < 1) throw Error("discriminator stage widths must be >= 1");
    if (blocks_per_stage < 1) throw Error("discriminator blocks_per_stage must be >= 1");
    if (in_channels < 1) throw Error("discriminator in_channels must be >= 1");
}

void init_conv_weight(Tensor& w, Rng& rng) {
    for (int64_t i = 0; i < w.numel(); ++i) w[i] = rng.normal(0.0f, 0.02f);
}

// ---- layers -----------------------------------------------------------------

Conv2dLayer::Conv2dLayer(const std::string& name, int in_c, int out_c, int k, int stride_,
                         int pad_, bool bias, Rng& rng)
    : stride(stride_), pad(pad_), has_bias(bias) {
    w.name = name + ".w";
    w.value = Tensor(out_c, in_c, k, k);
    init_conv_weight(w.value, rng);
    if (has_bias) {
        b.name = name + ".b";
        b.value = Tensor(out_c, 1, 1, 1);
    }
}

Var Conv2dLayer::operator()(Graph& g, Var x) {
    return conv2d(g, x, w, has_bias ? &b : nullptr, stride, pad);
}

void Conv2dLayer::collect(std::vector<Param*>& out) {
    out.push_back(&w);
    if (has_bias) out.push_back(&b);
}

InstanceNormLayer::InstanceNormLayer(const std::string& name, int channels) {
    gamma.name = name + ".gamma";
    gamma.value = Tensor(channels, 1, 1, 1);
    gamma.value.fill(1.0f);
    beta.name = name + ".beta";
    beta.value = Tensor(channels, 1, 1, 1);
}

Var InstanceNormLayer::operator()(Graph& g, Var x) {
    return instance_norm(g, x, gamma, beta);
}

void InstanceNormLayer::collect(std::vector<Param*>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
}

ConvBlock::ConvBlock(const std::string& name, int in_c, int out_c, Rng& rng, int stride)
    : conv(name + ".conv", in_c, out_c, 3, stride, 1, true, rng),
      norm(name + ".norm", out_c) {}

Var ConvBlock::operator()(Graph& g, Var x) {
    return relu(g, norm(g, conv(g, x)));
}

void ConvBlock::collect(std::vector<Param*>& out) {
    conv.collect(out);
    norm.collect(out);
}

DoubleConv::DoubleConv(const std::string& name, int in_c, int out_c, Rng& rng)
    : a(name + ".0", in_c, out_c, rng), b(name + ".1", out_c, out_c, rng) {}

Var DoubleConv::operator()(Graph& g, Var x) {
    return b(g, a(g, x));
}

void DoubleConv::collect(std::vector<Param*>& out) {
    a.collect(out);
    b.collect(out);
}

AttentionGate::AttentionGate(const std::string& name, int x_c, int g_c, int inter_c, Rng& rng)
    : theta_x(name + ".theta_x", x_c, inter_c, 1, 1, 0, false, rng),
      phi_g(name + ".phi_g", g_c, inter_c, 1, 1, 0, true, rng),
      psi(name + ".psi", inter_c, 1, 1, 1, 0, true, rng) {}

Var AttentionGate::attention(Graph& g, Var x, Var gating) {
    Var ax = theta_x(g, x);
    Var ag = upsample_nearest2x(g, phi_g(g, gating));
    if (g.val(ax).shape() != g.val(ag).shape())
        throw Error("attention_gate: gating shape incompatible with skip, " +
                    g.val(ax).shape().str() + " vs " + g.val(ag).shape().str());
    Var score = psi(g, relu(g, add(g, ax, ag)));
    return sigmoid(g, score);
}

Var AttentionGate::operator()(Graph& g, Var x, Var gating) {
    return mul_gate(g, x, attention(g, x, gating));
}

void AttentionGate::collect(std::vector<Param*>& out) {
    theta_x.collect(out);
    phi_g.collect(out);
    psi.collect(out);
}

// ---- generator ----------------------------------------------------------------

AttentionUNet::AttentionUNet(const GeneratorConfig& cfg, uint64_t seed, std::string name)
    : cfg_(cfg), name_(std::move(name)) {
    cfg_.validate();
    Rng rng(seed);
    const int d = cfg_.depth;
    auto width = [&](int level) { return cfg_.base_width << level; };

    for (int i = 0; i < d; ++i)
        enc_.emplace_back(name_ + ".enc" + std::to_string(i),
                          i == 0 ? cfg_.in_channels : width(i - 1), width(i), rng);
    bottleneck_ = DoubleConv(name_ + ".bottleneck", width(d - 1), width(d), rng);

    const int inter = std::max(cfg_.base_width / 2, 1);
    for (int i = d - 1; i >= 0; --i) {
        up_.emplace_back(name_ + ".up" + std::to_string(i), width(i + 1), width(i), rng);
        if (cfg_.attention)
            gates_.emplace_back(name_ + ".gate" + std::to_string(i), width(i), width(i + 1),
                                inter, rng);
        dec_.emplace_back(name_ + ".dec" + std::to_string(i), 2 * width(i), width(i), rng);
    }
    head_ = Conv2dLayer(name_ + ".head", cfg_.base_width, cfg_.out_channels, 1, 1, 0, true, rng);
}

Var AttentionUNet::forward(Graph& g, Var x) {
    const Shape s = g.val(x).shape();
    if (s.c != cfg_.in_channels)
        throw Error(name_ + ": expected " + std::to_string(cfg_.in_channels) +
                    " input channels, got " + std::to_string(s.c));
    if (s.h != s.w)
        throw Error(name_ + ": input must be square, got " + s.str());
    if (s.h % (1 << cfg_.depth) != 0)
        throw Error(name_ + ": input side " + std::to_string(s.h) + " not divisible by 2^" +
                    std::to_string(cfg_.depth));

    std::vector<Var> skips;
    Var h = x;
    for (int i = 0; i < cfg_.depth; ++i) {
        h = enc_[i](g, h);
        skips.push_back(h);
        h = maxpool(g, h, 2, 2, 0);
    }
    h = bottleneck_(g, h);

    for (int j = 0; j < cfg_.depth; ++j) {
        const int level = cfg_.depth - 1 - j;
        Var skip = skips[level];
        Var gated = cfg_.attention ? gates_[j](g, skip, h) : skip;
        Var up = up_[j](g, upsample_nearest2x(g, h));
        h = dec_[j](g, concat_channels(g, gated, up));
    }
    return tanh_act(g, head_(g, h));
}

std::vector<Param*> AttentionUNet::params() {
    std::vector<Param*> out;
    for (auto& e : enc_) e.collect(out);
    bottleneck_.collect(out);
    for (size_t j = 0; j < up_.size(); ++j) {
        up_[j].collect(out);
        if (cfg_.attention) gates_[j].collect(out);
        dec_[j].collect(out);
    }
    head_.collect(out);
    return out;
}

int64_t AttentionUNet::param_count() const {
    int64_t n = 0;
    for (auto* p : const_cast<AttentionUNet*>(this)->params()) n += p->value.numel();
    return n;
}

// ---- discriminator ---------------------------------------------------------------

BasicBlock::BasicBlock(const std::string& name, int in_c, int out_c, int stride, Rng& rng)
    : conv1(name + ".conv1", in_c, out_c, rng, stride),
      conv2(name + ".conv2", out_c, out_c, 3, 1, 1, true, rng),
      norm2(name + ".norm2", out_c) {
    project = stride != 1 || in_c != out_c;
    if (project) {
        proj = Conv2dLayer(name + ".proj", in_c, out_c, 1, stride, 0, false, rng);
        proj_norm = InstanceNormLayer(name + ".proj_norm", out_c);
    }
}

Var BasicBlock::operator()(Graph& g, Var x) {
    Var h = norm2(g, conv2(g, conv1(g, x)));
    Var skip = project ? proj_norm(g, proj(g, x)) : x;
    return relu(g, add(g, h, skip));
}

void BasicBlock::collect(std::vector<Param*>& out) {
    conv1.collect(out);
    conv2.collect(out);
    norm2.collect(out);
    if (project) {
        proj.collect(out);
        proj_norm.collect(out);
    }
}

ResNetDiscriminator::ResNetDiscriminator(const DiscriminatorConfig& cfg, uint64_t seed,
                                         std::string name)
    : cfg_(cfg), name_(std::move(name)) {
    cfg_.validate();
    Rng rng(seed);
    stem_ = Conv2dLayer(name_ + ".stem", cfg_.in_channels, cfg_.widths[0], 7, 2, 3, true, rng);
    stem_norm_ = InstanceNormLayer(name_ + ".stem_norm", cfg_.widths[0]);
    int in_c = cfg_.widths[0];
    for (int s = 0; s < 4; ++s) {
        std::vector<BasicBlock> blocks;
        for (int b = 0; b < cfg_.blocks_per_stage; ++b) {
            const int stride = (s > 0 && b == 0) ? 2 : 1;
            blocks.emplace_back(name_ + ".stage" + std::to_string(s + 1) + ".block" +
                                    std::to_string(b),
                                in_c, cfg_.widths[s], stride, rng);
            in_c = cfg_.widths[s];
        }
        stages_.push_back(std::move(blocks));
    }
    if (cfg_.patch_logits) {
        patch_head_ = Conv2dLayer(name_ + ".patch_head", cfg_.widths[3], 1, 1, 1, 0, true, rng);
    } else {
        head_w_.name = name_ + ".head.w";
        head_w_.value = Tensor(1, cfg_.widths[3], 1, 1);
        init_conv_weight(head_w_.value, rng);
        head_b_.name = name_ + ".head.b";
        head_b_.value = Tensor(1, 1, 1, 1);
    }
}

std::vector<std::string> ResNetDiscriminator::tap_names() {
    return {"stem", "stage1", "stage2", "stage3", "stage4"};
}

Var ResNetDiscriminator::forward(Graph& g, Var x, std::map<std::string, Var>* taps) {
    const Shape s = g.val(x).shape();
    if (s.c != cfg_.in_channels)
        throw Error(name_ + ": expected " + std::to_string(cfg_.in_channels) +
                    " input channels, got " + std::to_string(s.c));
    if (s.h < DiscriminatorConfig::kMinInput || s.w < DiscriminatorConfig::kMinInput)
        throw Error(name_ + ": input " + s.str() + " below the receptive collapse (min side " +
                    std::to_string(DiscriminatorConfig::kMinInput) + ")");

    Var h = relu(g, stem_norm_(g, stem_(g, x)));
    if (taps) (*taps)["stem"] = h;
    h = maxpool(g, h, 3, 2, 1);
    for (int st = 0; st < 4; ++st) {
        for (auto& blk : stages_[st]) h = blk(g, h);
        if (taps) (*taps)["stage" + std::to_string(st + 1)] = h;
    }
    if (cfg_.patch_logits)
        return patch_head_(g, h); // Nx1xhxw patch logits
    return linear(g, global_avg_pool(g, h), head_w_, head_b_); // Nx1x1x1
}

std::vector<Param*> ResNetDiscriminator::params() {
    std::vector<Param*> out;
    stem_.collect(out);
    stem_norm_.collect(out);
    for (auto& st : stages_)
        for (auto& b : st) b.collect(out);
    if (cfg_.patch_logits)
        patch_head_.collect(out);
    else {
        out.push_back(&head_w_);
        out.push_back(&head_b_);
    }
    return out;
}

int64_t ResNetDiscriminator::param_count() const {
    int64_t n = 0;
    for (auto* p : const_cast<ResNetDiscriminator*>(this)->params()) n += p->value.numel();
    return n;
}

// ---- bundle ------------------------------------------------------------------------

ModelBundle::ModelBundle(const GeneratorConfig& g, const DiscriminatorConfig& d, uint64_t seed)
    : gen_cfg(g), disc_cfg(d) {
    g_p = std::make_unique<AttentionUNet>(g, mix_seed(seed, "g_p"), "g_p");
    g_f = std::make_unique<AttentionUNet>(g, mix_seed(seed, "g_f"), "g_f");
    d_p = std::make_unique<ResNetDiscriminator>(d, mix_seed(seed, "d_p"), "d_p");
    d_f = std::make_unique<ResNetDiscriminator>(d, mix_seed(seed, "d_f"), "d_f");
}

std::vector<Param*> ModelBundle::generator_params() {
    auto out = g_p->params();
    auto more = g_f->params();
    out.insert(out.end(), more.begin(), more.end());
    return out;
}

std::vector<Param*> ModelBundle::discriminator_params() {
    auto out = d_p->params();
    auto more = d_f->params();
    out.insert(out.end(), more.begin(), more.end());
    return out;
}

std::vector<Param*> ModelBundle::all_params() {
    auto out = generator_params();
    auto more = discriminator_params();
    out.insert(out.end(), more.begin(), more.end());
    return out;
}

} // namespace san::nn
