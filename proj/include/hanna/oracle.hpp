#pragma once

#include <vector>

#include "hanna/supernet.hpp"

namespace hanna {

// Exhaustively enumerable search space for verifying the relaxed search at
// a scale where brute force is trivial. CE values are assigned proxies per
// architecture, not trained accuracies.
struct MicroSpace {
    int num_layers = 0;
    int candidates = 0;  // per layer
    std::vector<std::vector<double>> lat;   // [layers][candidates]
    std::vector<std::vector<double>> ener;  // [layers][candidates]
    std::vector<double> ce;                 // [candidates^layers], may be empty (treated as 0)

    long long total_architectures() const;
    void validate() const;
    // Architecture id: choices[0] is the most significant digit.
    long long arch_id(const std::vector<int>& choices) const;
};

struct EnumEntry {
    std::vector<int> choices;
    double lat = 0.0;
    double ener = 0.0;
};

// All candidates^layers architectures with exact table-summed costs, in
// arch_id order. Bounds: layers <= 4, candidates <= 4.
std::vector<EnumEntry> enumerate_space(const MicroSpace& space);

// Sum over all architectures of P(a|theta) * (ce_a + alpha lat_a^beta +
// gamma ener_a^delta), P(a|theta) = prod_l softmax(theta_l)[a_l].
double exact_expected_loss(const std::vector<std::vector<double>>& theta, const MicroSpace& space,
                           const LossKnobs& knobs);

// Row softmax of a plain logits matrix.
std::vector<std::vector<double>> softmax_rows_plain(const std::vector<std::vector<double>>& theta);

}  // namespace hanna
