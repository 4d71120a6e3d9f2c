#include "hanna/supernet.hpp"

#include <cmath>
#include <limits>

#include "hanna/errors.hpp"

namespace hanna {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

bool Theta::admissible(int layer, int block) const {
    const double v = rows[layer].data()[block];
    return !(std::isinf(v) && v < 0.0);
}

std::vector<std::array<double, kNumCandidates>> Theta::softmax_rows() const {
    std::vector<std::array<double, kNumCandidates>> out(rows.size());
    for (std::size_t l = 0; l < rows.size(); ++l) {
        const auto& d = rows[l].data();
        double mx = kNegInf;
        for (int i = 0; i < kNumCandidates; ++i)
            if (admissible(static_cast<int>(l), i)) mx = std::max(mx, d[i]);
        double denom = 0.0;
        for (int i = 0; i < kNumCandidates; ++i)
            denom += admissible(static_cast<int>(l), i) ? std::exp(d[i] - mx) : 0.0;
        for (int i = 0; i < kNumCandidates; ++i)
            out[l][i] = admissible(static_cast<int>(l), i) ? std::exp(d[i] - mx) / denom : 0.0;
    }
    return out;
}

Theta Theta::uniform(const MacroArch& arch, double logit) {
    Theta theta;
    theta.rows.reserve(arch.num_tbs());
    for (int l = 0; l < arch.num_tbs(); ++l) {
        const int n = arch.num_candidates(l);
        std::vector<double> row(kNumCandidates, kNegInf);
        for (int i = 0; i < n; ++i) row[i] = logit;
        theta.rows.push_back(Tensor::from({kNumCandidates}, std::move(row), true));
    }
    return theta;
}

void LossKnobs::validate() const {
    if (alpha < 0.0) throw ValidationError("knobs: alpha must be >= 0");
    if (!(beta > 0.0)) throw ValidationError("knobs: beta must be > 0");
    if (gamma < 0.0) throw ValidationError("knobs: gamma must be >= 0");
    if (!(delta > 0.0)) throw ValidationError("knobs: delta must be > 0");
}

NoiseMatrix sample_gumbel(Rng& rng, int rows, int cols) {
    NoiseMatrix noise(rows, std::vector<double>(cols));
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            double u = rng.uniform();
            u = std::min(std::max(u, 1e-12), 1.0 - 1e-12);
            noise[r][c] = -std::log(-std::log(u));
        }
    return noise;
}

GumbelMask make_gumbel_mask(const Theta& theta, const NoiseMatrix& noise, double tau) {
    if (static_cast<int>(noise.size()) != theta.layers())
        throw ValidationError("gumbel mask: noise has " + std::to_string(noise.size()) +
                              " rows for " + std::to_string(theta.layers()) + " layers");
    GumbelMask mask;
    mask.tau = tau;
    mask.m.resize(theta.layers());
    mask.noise.resize(theta.layers());
    for (int l = 0; l < theta.layers(); ++l) {
        Tensor row = gumbel_softmax(theta.rows[l], noise[l], tau);
        for (int i = 0; i < kNumCandidates; ++i) {
            mask.m[l][i] = row.data()[i];
            mask.noise[l][i] = noise[l][i];
        }
    }
    return mask;
}

Tensor expected_cost(const std::vector<Tensor>& mask_rows, const CostTable& table) {
    if (static_cast<int>(mask_rows.size()) != table.layers())
        throw ValidationError("expected_cost: " + std::to_string(mask_rows.size()) +
                              " mask rows for table with " + std::to_string(table.layers()) +
                              " layers");
    Tensor total;
    for (int l = 0; l < table.layers(); ++l) {
        const Tensor& row = mask_rows[l];
        if (row.size() != kNumCandidates)
            throw ValidationError("expected_cost: mask row " + std::to_string(l) + " has " +
                                  std::to_string(row.size()) + " entries");
        for (int i = 0; i < kNumCandidates; ++i)
            if (!table.present[l][i] && row.data()[i] != 0.0)
                throw ValidationError("expected_cost: mask row " + std::to_string(l) +
                                      " is nonzero at absent cell " + std::to_string(i));
        Tensor term = dot_const(row, table.row_or_zero(l));
        total = total.defined() ? add(total, term) : term;
    }
    return total;
}

double expected_cost(const GumbelMask& mask, const CostTable& table) {
    if (mask.layers() != table.layers())
        throw ValidationError("expected_cost: mask has " + std::to_string(mask.layers()) +
                              " layers, table has " + std::to_string(table.layers()));
    double total = 0.0;
    for (int l = 0; l < table.layers(); ++l)
        for (int i = 0; i < kNumCandidates; ++i) {
            if (!table.present[l][i]) {
                if (mask.m[l][i] != 0.0)
                    throw ValidationError("expected_cost: mask row " + std::to_string(l) +
                                          " is nonzero at absent cell " + std::to_string(i));
                continue;
            }
            total += mask.m[l][i] * table.values[l][i];
        }
    return total;
}

SuperNet SuperNet::init(const MacroArch& arch, Rng& rng) {
    SuperNet net;
    net.arch = arch;
    const int stem_in = arch.stem.in_channels, stem_out = arch.stem.out_channels;
    net.stem_w = he_uniform({stem_out, stem_in, 3, 3}, stem_in * 9, rng);
    net.stem_b = bias_uniform({stem_out}, stem_in * 9, rng);
    net.blocks.resize(arch.num_tbs());
    for (int l = 0; l < arch.num_tbs(); ++l) {
        auto cands = candidate_blocks(arch.tbs_layers[l]);
        for (const auto& cfg : cands)
            net.blocks[l].push_back(init_block_params(cfg, arch.tbs_layers[l], rng));
    }
    const int last = arch.tbs_layers.back().out_channels;
    net.head_w = he_uniform({arch.head_channels, last, 1, 1}, last, rng);
    net.head_b = bias_uniform({arch.head_channels}, last, rng);
    net.fc_w = he_uniform({arch.head_channels, arch.num_classes}, arch.head_channels, rng);
    net.fc_b = bias_uniform({arch.num_classes}, arch.head_channels, rng);
    return net;
}

std::vector<Tensor> SuperNet::weight_params() const {
    std::vector<Tensor> params{stem_w, stem_b};
    for (const auto& layer : blocks)
        for (const auto& block : layer)
            for (const auto& t : block.tensors()) params.push_back(t);
    params.push_back(head_w);
    params.push_back(head_b);
    params.push_back(fc_w);
    params.push_back(fc_b);
    return params;
}

SuperNetOutput supernet_forward(const SuperNet& net, const Tensor& x, const Theta& theta,
                                double tau, const NoiseMatrix& noise, const CostTable& lat_table,
                                const CostTable& ener_table) {
    const MacroArch& arch = net.arch;
    if (!x.defined() || x.shape().size() != 4 || x.shape()[1] != arch.stem.in_channels)
        throw ValidationError("supernet: input must be [N," +
                              std::to_string(arch.stem.in_channels) + ",H,W]");
    if (theta.layers() != arch.num_tbs())
        throw ValidationError("supernet: theta has " + std::to_string(theta.layers()) +
                              " rows for " + std::to_string(arch.num_tbs()) + " TBS layers");
    if (lat_table.layers() != arch.num_tbs() || ener_table.layers() != arch.num_tbs())
        throw ValidationError("supernet: cost tables do not match the architecture");

    SuperNetOutput out;
    Tensor h = relu(conv2d(x, net.stem_w, net.stem_b, 1, 1, 1));
    Tensor lat, ener;
    for (int l = 0; l < arch.num_tbs(); ++l) {
        const LayerSpec& layer = arch.tbs_layers[l];
        Tensor mask = gumbel_softmax(theta.rows[l], noise[l], tau);
        out.masks.push_back(mask);
        auto cands = candidate_blocks(layer);
        Tensor mixed;
        for (std::size_t i = 0; i < cands.size(); ++i) {
            Tensor y = block_forward(cands[i], layer, h, net.blocks[l][i]);
            Tensor term = scale(y, index(mask, static_cast<int>(i)));
            mixed = mixed.defined() ? add(mixed, term) : term;
        }
        h = mixed;
        Tensor lat_term = dot_const(mask, lat_table.row_or_zero(l));
        Tensor ener_term = dot_const(mask, ener_table.row_or_zero(l));
        lat = lat.defined() ? add(lat, lat_term) : lat_term;
        ener = ener.defined() ? add(ener, ener_term) : ener_term;
    }
    h = relu(conv2d(h, net.head_w, net.head_b, 1, 0, 1));
    Tensor pooled = global_avg_pool(h);
    out.logits = linear(pooled, net.fc_w, net.fc_b);
    out.lat = lat;
    out.ener = ener;
    return out;
}

LossBreakdown total_loss(double ce, double lat, double ener, const LossKnobs& knobs) {
    knobs.validate();
    if (!std::isfinite(ce) || !std::isfinite(lat) || !std::isfinite(ener))
        throw NumericError("total_loss: non-finite input (ce=" + std::to_string(ce) + " lat=" +
                           std::to_string(lat) + " ener=" + std::to_string(ener) + ")");
    if (!(lat > 0.0)) throw ValidationError("total_loss: latency must be > 0");
    if (ener < 0.0) throw ValidationError("total_loss: energy must be >= 0");
    LossBreakdown b;
    b.ce = ce;
    b.lat = lat;
    b.ener = ener;
    b.total = ce + knobs.alpha * std::pow(lat, knobs.beta) +
              knobs.gamma * std::pow(std::max(ener, kEnergyFloor), knobs.delta);
    return b;
}

Tensor total_loss_t(const Tensor& ce, const Tensor& lat, const Tensor& ener,
                    const LossKnobs& knobs) {
    total_loss(ce.item(), lat.item(), ener.item(), knobs);  // same validation
    Tensor lat_term = scale_const(pow_const(lat, knobs.beta), knobs.alpha);
    Tensor ener_term = scale_const(pow_const(clamp_min(ener, kEnergyFloor), knobs.delta),
                                   knobs.gamma);
    return add(ce, add(lat_term, ener_term));
}

}  // namespace hanna
