#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hanna/costmodel.hpp"
#include "hanna/dataset.hpp"
#include "hanna/supernet.hpp"
#include "hanna/trainer.hpp"

namespace hanna {

// Discrete architecture extracted from a trained theta: one candidate index
// per TBS layer.
struct ChildNet {
    std::vector<int> choices;
    std::string preset;

    int layers() const { return static_cast<int>(choices.size()); }
};

// Per-row argmax over admissible logits; ties break toward the lowest index.
ChildNet sample_childnet(const Theta& theta, const MacroArch& arch);

// Exact table costs of the discrete architecture: (seconds, joules).
std::pair<double, double> childnet_cost(const ChildNet& child, const CostTable& lat_table,
                                        const CostTable& ener_table);

void save_childnet(const ChildNet& child, const std::string& path);
ChildNet load_childnet(const std::string& path);

// The discrete network with its own weights, for retraining from scratch.
struct ChildModel {
    MacroArch arch;
    std::vector<int> choices;
    Tensor stem_w, stem_b;
    std::vector<BlockParams> blocks;  // one per TBS layer, skip entries empty
    Tensor head_w, head_b;
    Tensor fc_w, fc_b;

    static ChildModel init(const ChildNet& child, const MacroArch& arch, Rng& rng);
    Tensor forward(const Tensor& x) const;
    std::vector<Tensor> params() const;
};

struct ChildTrainConfig {
    int epochs = 30;  // desk-scale stand-in for a full-scale retraining run
    int batch_size = 32;
    WeightOptConfig opt;
};

// Trains the discrete network from fresh seeded weights (SGD momentum,
// cosine lr to 0) and returns held-out accuracy.
double train_childnet(const ChildNet& child, const MacroArch& arch, const SynthData& data,
                      const ChildTrainConfig& config, std::uint64_t seed);

}  // namespace hanna
