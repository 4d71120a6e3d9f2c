#pragma once

#include <string>
#include <vector>

#include "hanna/rng.hpp"
#include "hanna/tensor.hpp"

namespace hanna {

// One of the nine candidate blocks per searchable layer: a MobileNetv2-style
// bottleneck (pointwise -> ReLU -> depthwise -> ReLU -> pointwise, channel
// shuffle after pointwise convs when grouped) or the identity skip.
struct BlockConfig {
    int expansion = 1;   // bottleneck expansion ratio e
    int kernel = 3;      // depthwise kernel, 3 or 5
    int groups = 1;      // pointwise conv groups, 1 or 2
    bool is_skip = false;

    std::string name() const;
};

inline constexpr int kNumCandidates = 9;  // 8 parametrized + skip
inline constexpr int kSkipIndex = 8;

struct LayerSpec {
    int in_channels = 0;
    int out_channels = 0;
    int stride = 1;  // 1 or 2
    bool tbs = false;

    bool skip_admissible() const {
        return in_channels == out_channels && stride == 1;
    }
};

struct MacroArch {
    std::string preset;  // "desk", "full", or "custom"
    LayerSpec stem;      // fixed 3x3 conv
    std::vector<LayerSpec> tbs_layers;
    int head_channels = 64;  // fixed 1x1 conv before pool + classifier
    int num_classes = 10;

    int num_tbs() const { return static_cast<int>(tbs_layers.size()); }
    // Candidate count per layer: 9 when skip is admissible, else 8.
    int num_candidates(int layer) const;
};

// Canonical candidate ordering: {e=1,3,6} x {K=3,5} with groups=1, then
// (e=1,K=3,g=2), (e=3,K=3,g=2), skip last at index 8.
const std::vector<BlockConfig>& canonical_candidates();

// The admissible candidates of a TBS layer; skip included iff
// in_channels == out_channels and stride == 1.
std::vector<BlockConfig> candidate_blocks(const LayerSpec& layer);

// Trainable parameters of one non-skip candidate block.
struct BlockParams {
    bool is_skip = false;
    Tensor pw1_w, pw1_b;  // 1x1 grouped conv to e*Cin channels
    Tensor dw_w, dw_b;    // KxK depthwise conv, carries the layer stride
    Tensor pw2_w, pw2_b;  // 1x1 grouped conv to Cout

    std::vector<Tensor> tensors() const;
};

// Kaiming-uniform weight init (ReLU gain, limit sqrt(6/fan_in)) and the
// matching small bias init (limit 1/sqrt(fan_in)); shared by the supernet
// and childnet builders so both preserve signal through deep stacks.
Tensor he_uniform(std::vector<int> shape, int fan_in, Rng& rng);
Tensor bias_uniform(std::vector<int> shape, int fan_in, Rng& rng);

BlockParams init_block_params(const BlockConfig& cfg, const LayerSpec& layer, Rng& rng);

// Closed-form trainable parameter count of (cfg, layer); 0 for skip.
long long block_param_count(const BlockConfig& cfg, const LayerSpec& layer);

// Runs one candidate block. Residual-adds the input for stride-1
// equal-channel non-skip blocks; skip returns x unchanged.
Tensor block_forward(const BlockConfig& cfg, const LayerSpec& layer, const Tensor& x,
                     const BlockParams& params);

// preset "full" (22 TBS layers) or "desk" (6 TBS layers).
MacroArch build_macro(const std::string& preset, int num_classes);

// Explicit layer list; every listed layer is searchable.
MacroArch build_macro_custom(int stem_out, const std::vector<LayerSpec>& layers,
                             int head_channels, int num_classes);

}  // namespace hanna
