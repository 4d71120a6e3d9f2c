#include "hanna/searchspace.hpp"

#include <cmath>

#include "hanna/errors.hpp"

namespace hanna {

std::string BlockConfig::name() const {
    if (is_skip) return "skip";
    return "e" + std::to_string(expansion) + "_k" + std::to_string(kernel) + "_g" +
           std::to_string(groups);
}

int MacroArch::num_candidates(int layer) const {
    if (layer < 0 || layer >= num_tbs())
        throw ValidationError("arch: TBS layer " + std::to_string(layer) + " out of range [0," +
                              std::to_string(num_tbs()) + ")");
    return tbs_layers[layer].skip_admissible() ? 9 : 8;
}

const std::vector<BlockConfig>& canonical_candidates() {
    static const std::vector<BlockConfig> configs = {
        {1, 3, 1, false}, {1, 5, 1, false}, {3, 3, 1, false}, {3, 5, 1, false},
        {6, 3, 1, false}, {6, 5, 1, false}, {1, 3, 2, false}, {3, 3, 2, false},
        {1, 3, 1, true},
    };
    return configs;
}

std::vector<BlockConfig> candidate_blocks(const LayerSpec& layer) {
    if (!layer.tbs)
        throw ValidationError("candidate_blocks: layer is not searchable (tbs=false)");
    std::vector<BlockConfig> out(canonical_candidates().begin(),
                                 canonical_candidates().end() - 1);
    if (layer.skip_admissible()) out.push_back(canonical_candidates().back());
    return out;
}

namespace {

Tensor bounded_uniform(std::vector<int> shape, double limit, Rng& rng) {
    Tensor t = Tensor::zeros(std::move(shape), true);
    for (double& v : t.data()) v = rng.uniform(-limit, limit);
    return t;
}

}  // namespace

Tensor he_uniform(std::vector<int> shape, int fan_in, Rng& rng) {
    return bounded_uniform(std::move(shape), std::sqrt(6.0 / static_cast<double>(fan_in)), rng);
}

Tensor bias_uniform(std::vector<int> shape, int fan_in, Rng& rng) {
    return bounded_uniform(std::move(shape), 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
}

std::vector<Tensor> BlockParams::tensors() const {
    if (is_skip) return {};
    return {pw1_w, pw1_b, dw_w, dw_b, pw2_w, pw2_b};
}

BlockParams init_block_params(const BlockConfig& cfg, const LayerSpec& layer, Rng& rng) {
    BlockParams p;
    p.is_skip = cfg.is_skip;
    if (cfg.is_skip) return p;
    const int cin = layer.in_channels;
    const int cmid = cfg.expansion * cin;
    const int cout = layer.out_channels;
    const int g = cfg.groups;
    if (cin % g != 0 || cmid % g != 0 || cout % g != 0)
        throw ValidationError("block: channels (" + std::to_string(cin) + "," +
                              std::to_string(cmid) + "," + std::to_string(cout) +
                              ") not divisible by groups " + std::to_string(g));
    p.pw1_w = he_uniform({cmid, cin / g, 1, 1}, cin / g, rng);
    p.pw1_b = bias_uniform({cmid}, cin / g, rng);
    p.dw_w = he_uniform({cmid, 1, cfg.kernel, cfg.kernel}, cfg.kernel * cfg.kernel, rng);
    p.dw_b = bias_uniform({cmid}, cfg.kernel * cfg.kernel, rng);
    p.pw2_w = he_uniform({cout, cmid / g, 1, 1}, cmid / g, rng);
    p.pw2_b = bias_uniform({cout}, cmid / g, rng);
    return p;
}

long long block_param_count(const BlockConfig& cfg, const LayerSpec& layer) {
    if (cfg.is_skip) return 0;
    const long long cin = layer.in_channels;
    const long long cmid = cfg.expansion * cin;
    const long long cout = layer.out_channels;
    const long long g = cfg.groups;
    const long long k = cfg.kernel;
    return cmid * (cin / g) + cmid          // pw1 + bias
           + cmid * k * k + cmid           // depthwise + bias
           + cout * (cmid / g) + cout;     // pw2 + bias
}

Tensor block_forward(const BlockConfig& cfg, const LayerSpec& layer, const Tensor& x,
                     const BlockParams& params) {
    if (!x.defined() || x.shape().size() != 4)
        throw ValidationError("block_forward: input must be [N,C,H,W]");
    if (x.shape()[1] != layer.in_channels)
        throw ValidationError("block_forward: input has " + std::to_string(x.shape()[1]) +
                              " channels, layer expects " + std::to_string(layer.in_channels));
    if (cfg.is_skip) {
        if (!layer.skip_admissible())
            throw ValidationError("block_forward: skip not admissible for " +
                                  std::to_string(layer.in_channels) + "->" +
                                  std::to_string(layer.out_channels) + " stride " +
                                  std::to_string(layer.stride));
        return x;
    }
    Tensor h = conv2d(x, params.pw1_w, params.pw1_b, 1, 0, cfg.groups);
    if (cfg.groups == 2) h = channel_shuffle(h, 2);
    h = relu(h);
    const int cmid = cfg.expansion * layer.in_channels;
    h = conv2d(h, params.dw_w, params.dw_b, layer.stride, cfg.kernel / 2, cmid);
    h = relu(h);
    h = conv2d(h, params.pw2_w, params.pw2_b, 1, 0, cfg.groups);
    if (cfg.groups == 2) h = channel_shuffle(h, 2);
    if (layer.stride == 1 && layer.in_channels == layer.out_channels) h = add(h, x);
    return h;
}

MacroArch build_macro(const std::string& preset, int num_classes) {
    if (num_classes < 2) throw ValidationError("arch: num_classes must be >= 2");
    MacroArch arch;
    arch.preset = preset;
    arch.num_classes = num_classes;
    if (preset == "desk") {
        arch.stem = {3, 8, 1, false};
        arch.tbs_layers = {
            {8, 8, 1, true},    // skip-admissible
            {8, 16, 1, true},
            {16, 16, 2, true},
            {16, 24, 1, true},
            {24, 24, 2, true},
            {24, 24, 1, true},  // skip-admissible
        };
        arch.head_channels = 64;
    } else if (preset == "full") {
        arch.stem = {3, 16, 1, false};
        arch.tbs_layers.clear();
        auto stage = [&](int cin, int cout, int n, int first_stride) {
            arch.tbs_layers.push_back({cin, cout, first_stride, true});
            for (int i = 1; i < n; ++i) arch.tbs_layers.push_back({cout, cout, 1, true});
        };
        stage(16, 16, 1, 1);
        stage(16, 24, 4, 2);
        stage(24, 32, 4, 2);
        stage(32, 64, 4, 2);
        stage(64, 112, 4, 1);
        stage(112, 184, 4, 2);
        stage(184, 352, 1, 1);
        arch.head_channels = 1504;
    } else {
        throw ValidationError("arch: unknown preset '" + preset + "' (expected desk or full)");
    }
    return arch;
}

MacroArch build_macro_custom(int stem_out, const std::vector<LayerSpec>& layers,
                             int head_channels, int num_classes) {
    if (layers.empty()) throw ValidationError("arch: custom layer list is empty");
    if (num_classes < 2) throw ValidationError("arch: num_classes must be >= 2");
    MacroArch arch;
    arch.preset = "custom";
    arch.stem = {3, stem_out, 1, false};
    arch.tbs_layers = layers;
    int prev = stem_out;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        LayerSpec& l = arch.tbs_layers[i];
        l.tbs = true;
        if (l.in_channels != prev)
            throw ValidationError("arch: layer " + std::to_string(i) + " expects " +
                                  std::to_string(l.in_channels) + " input channels but gets " +
                                  std::to_string(prev));
        if (l.stride != 1 && l.stride != 2)
            throw ValidationError("arch: layer " + std::to_string(i) + " stride must be 1 or 2");
        prev = l.out_channels;
    }
    arch.head_channels = head_channels;
    arch.num_classes = num_classes;
    return arch;
}

}  // namespace hanna
