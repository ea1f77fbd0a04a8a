#pragma once

#include <map>
#include <memory>

#include "san/graph.hpp"
#include "san/rng.hpp"

namespace san::nn {

struct GeneratorConfig {
    int in_channels = 3;
    int out_channels = 3;
    int depth = 4;      // encoder levels; input side must divide by 2^depth
    int base_width = 64;
    bool attention = true;

    void validate() const;
    bool operator==(const GeneratorConfig&) const = default;
};

struct DiscriminatorConfig {
    int in_channels = 3;
    std::vector<int> widths = {64, 128, 256, 512}; // residual stage widths
    int blocks_per_stage = 2;                       // the 18-layer layout
    bool patch_logits = false;                      // 1x1-conv head instead of GAP+affine

    // Stem + 4 stages downsample by 32; inputs below that collapse.
    static constexpr int kMinInput = 32;

    void validate() const;
    bool operator==(const DiscriminatorConfig&) const = default;
};

// ---- building blocks -------------------------------------------------------

struct Conv2dLayer {
    Param w, b;
    int stride = 1, pad = 0;
    bool has_bias = true;

    Conv2dLayer() = default;
    Conv2dLayer(const std::string& name, int in_c, int out_c, int k, int stride, int pad,
                bool bias, Rng& rng);
    Var operator()(Graph& g, Var x);
    void collect(std::vector<Param*>& out);
};

struct InstanceNormLayer {
    Param gamma, beta;

    InstanceNormLayer() = default;
    InstanceNormLayer(const std::string& name, int channels);
    Var operator()(Graph& g, Var x);
    void collect(std::vector<Param*>& out);
};

// conv3x3 + instance norm + ReLU
struct ConvBlock {
    Conv2dLayer conv;
    InstanceNormLayer norm;

    ConvBlock() = default;
    ConvBlock(const std::string& name, int in_c, int out_c, Rng& rng, int stride = 1);
    Var operator()(Graph& g, Var x);
    void collect(std::vector<Param*>& out);
};

struct DoubleConv {
    ConvBlock a, b;

    DoubleConv() = default;
    DoubleConv(const std::string& name, int in_c, int out_c, Rng& rng);
    Var operator()(Graph& g, Var x);
    void collect(std::vector<Param*>& out);
};

// Additive attention gate: alpha = sigmoid(psi(relu(Wx*x + up(Wg*g)))),
// single-channel, broadcast over x's channels.
struct AttentionGate {
    Conv2dLayer theta_x; // x -> inter, 1x1, no bias
    Conv2dLayer phi_g;   // g -> inter, 1x1, bias
    Conv2dLayer psi;     // inter -> 1, 1x1, bias

    AttentionGate() = default;
    AttentionGate(const std::string& name, int x_c, int g_c, int inter_c, Rng& rng);
    Var operator()(Graph& g, Var x, Var gating);
    // Attention coefficients alpha for inspection/tests.
    Var attention(Graph& g, Var x, Var gating);
    void collect(std::vector<Param*>& out);
};

// ---- generator --------------------------------------------------------------

class AttentionUNet {
public:
    AttentionUNet(const GeneratorConfig& cfg, uint64_t seed, std::string name);

    Var forward(Graph& g, Var x);
    const GeneratorConfig& config() const { return cfg_; }
    const std::string& name() const { return name_; }
    std::vector<Param*> params();
    int64_t param_count() const;

    AttentionGate& gate(int level) { return gates_[level]; }

private:
    GeneratorConfig cfg_;
    std::string name_;
    std::vector<DoubleConv> enc_;
    DoubleConv bottleneck_;
    std::vector<ConvBlock> up_;       // upsample-conv per decoder level
    std::vector<AttentionGate> gates_;
    std::vector<DoubleConv> dec_;
    Conv2dLayer head_;
};

// ---- discriminator -----------------------------------------------------------

struct BasicBlock {
    ConvBlock conv1;
    Conv2dLayer conv2;
    InstanceNormLayer norm2;
    bool project = false;
    Conv2dLayer proj;
    InstanceNormLayer proj_norm;

    BasicBlock() = default;
    BasicBlock(const std::string& name, int in_c, int out_c, int stride, Rng& rng);
    Var operator()(Graph& g, Var x);
    void collect(std::vector<Param*>& out);
};

class ResNetDiscriminator {
public:
    ResNetDiscriminator(const DiscriminatorConfig& cfg, uint64_t seed, std::string name);

    // Taps, when provided, receive the named activation maps
    // ("stem", "stage1".."stage4"); needed by Grad-CAM.
    Var forward(Graph& g, Var x, std::map<std::string, Var>* taps = nullptr);
    static std::vector<std::string> tap_names();

    const DiscriminatorConfig& config() const { return cfg_; }
    const std::string& name() const { return name_; }
    std::vector<Param*> params();
    int64_t param_count() const;

private:
    DiscriminatorConfig cfg_;
    std::string name_;
    Conv2dLayer stem_;
    InstanceNormLayer stem_norm_;
    std::vector<std::vector<BasicBlock>> stages_;
    Param head_w_, head_b_; // GAP+affine head (image mode)
    Conv2dLayer patch_head_; // 1x1 head (patch mode)
};

// ---- bundle -------------------------------------------------------------------

// The four SAN networks plus the training step counter. G_P maps frozen ->
// permanent, G_F the reverse; D_P judges the permanent domain, D_F the frozen.
struct ModelBundle {
    GeneratorConfig gen_cfg;
    DiscriminatorConfig disc_cfg;
    std::unique_ptr<AttentionUNet> g_p, g_f;
    std::unique_ptr<ResNetDiscriminator> d_p, d_f;
    int64_t step = 0;

    ModelBundle(const GeneratorConfig& g, const DiscriminatorConfig& d, uint64_t seed);

    std::vector<Param*> generator_params();
    std::vector<Param*> discriminator_params();
    std::vector<Param*> all_params();
};

// Deterministic conv/linear weight init: N(0, 0.02), biases 0 (norm layers
// gamma=1, beta=0).
void init_conv_weight(Tensor& w, Rng& rng);

} // namespace san::nn
