#pragma once

#include <array>
#include <vector>

#include "hanna/costmodel.hpp"
#include "hanna/rng.hpp"
#include "hanna/searchspace.hpp"
#include "hanna/tensor.hpp"

namespace hanna {

// Architecture sampling logits, one row per TBS layer. Inadmissible cells
// (skip where it cannot apply) are pinned to -inf and excluded from every
// softmax.
struct Theta {
    std::vector<Tensor> rows;  // each [kNumCandidates], requires_grad

    int layers() const { return static_cast<int>(rows.size()); }
    bool admissible(int layer, int block) const;
    // Zero-noise row softmax over admissible cells.
    std::vector<std::array<double, kNumCandidates>> softmax_rows() const;

    static Theta uniform(const MacroArch& arch, double logit = 1.0);
};

// One concrete Gumbel-Softmax draw: the relaxed architecture sample shared
// by the feature mixture and both cost terms of a forward pass.
struct GumbelMask {
    std::vector<std::array<double, kNumCandidates>> m;
    double tau = 1.0;
    std::vector<std::array<double, kNumCandidates>> noise;

    int layers() const { return static_cast<int>(m.size()); }
};

struct LossKnobs {
    double alpha = 0.0;
    double beta = 1.0;
    double gamma = 0.0;
    double delta = 1.0;

    void validate() const;
};

struct LossBreakdown {
    double ce = 0.0;     // nats
    double lat = 0.0;    // seconds
    double ener = 0.0;   // joules
    double total = 0.0;
};

using NoiseMatrix = std::vector<std::vector<double>>;

// i.i.d. Gumbel(0,1) draws, g = -log(-log(u)).
NoiseMatrix sample_gumbel(Rng& rng, int rows, int cols);

GumbelMask make_gumbel_mask(const Theta& theta, const NoiseMatrix& noise, double tau);

// Mask-weighted table cost, differentiable in theta through the mask rows.
Tensor expected_cost(const std::vector<Tensor>& mask_rows, const CostTable& table);
double expected_cost(const GumbelMask& mask, const CostTable& table);

// All candidate weights of the stochastic supernet.
struct SuperNet {
    MacroArch arch;
    Tensor stem_w, stem_b;
    std::vector<std::vector<BlockParams>> blocks;  // [layer][candidate]
    Tensor head_w, head_b;
    Tensor fc_w, fc_b;

    static SuperNet init(const MacroArch& arch, Rng& rng);
    std::vector<Tensor> weight_params() const;
};

struct SuperNetOutput {
    Tensor logits;              // [N, num_classes]
    Tensor lat;                 // scalar, seconds
    Tensor ener;                // scalar, joules
    std::vector<Tensor> masks;  // per-layer mask rows (differentiable)
};

// One stochastic forward pass: every TBS layer mixes its candidate outputs
// with one shared Gumbel-Softmax mask, which also weights the latency and
// energy tables.
SuperNetOutput supernet_forward(const SuperNet& net, const Tensor& x, const Theta& theta,
                                double tau, const NoiseMatrix& noise, const CostTable& lat_table,
                                const CostTable& ener_table);

// total = ce + alpha * lat^beta + gamma * ener^delta.
LossBreakdown total_loss(double ce, double lat, double ener, const LossKnobs& knobs);
Tensor total_loss_t(const Tensor& ce, const Tensor& lat, const Tensor& ener,
                    const LossKnobs& knobs);

// Floor applied to energy before the delta power so delta < 1 stays
// differentiable at zero.
inline constexpr double kEnergyFloor = 1e-12;

}  // namespace hanna
