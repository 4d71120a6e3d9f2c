#include "hanna/childnet.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hanna/errors.hpp"

namespace hanna {

ChildNet sample_childnet(const Theta& theta, const MacroArch& arch) {
    if (theta.layers() != arch.num_tbs())
        throw ValidationError("sample_childnet: theta has " + std::to_string(theta.layers()) +
                              " rows, architecture has " + std::to_string(arch.num_tbs()) +
                              " TBS layers");
    ChildNet child;
    child.preset = arch.preset;
    for (int l = 0; l < theta.layers(); ++l) {
        int best = -1;
        for (int i = 0; i < kNumCandidates; ++i) {
            if (!theta.admissible(l, i)) continue;
            if (best < 0 || theta.rows[l].data()[i] > theta.rows[l].data()[best]) best = i;
        }
        if (best < 0)
            throw ValidationError("sample_childnet: row " + std::to_string(l) +
                                  " has no admissible candidate");
        child.choices.push_back(best);
    }
    return child;
}

std::pair<double, double> childnet_cost(const ChildNet& child, const CostTable& lat_table,
                                        const CostTable& ener_table) {
    if (child.layers() != lat_table.layers() || child.layers() != ener_table.layers())
        throw ValidationError("childnet_cost: child has " + std::to_string(child.layers()) +
                              " layers, tables have " + std::to_string(lat_table.layers()) + "/" +
                              std::to_string(ener_table.layers()));
    double lat = 0.0, ener = 0.0;
    for (int l = 0; l < child.layers(); ++l) {
        lat += lat_table.at(l, child.choices[l]);
        ener += ener_table.at(l, child.choices[l]);
    }
    return {lat, ener};
}

void save_childnet(const ChildNet& child, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "# preset=" << child.preset << " layers=" << child.layers() << "\n";
    for (int l = 0; l < child.layers(); ++l) {
        if (l) out << ',';
        out << child.choices[l];
    }
    out << "\n";
    if (!out) throw IoError("write failed for '" + path + "'");
}

ChildNet load_childnet(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string header;
    if (!std::getline(in, header)) throw IoError(path + ":1: missing header");
    std::istringstream hs(header);
    std::string tok;
    hs >> tok;
    if (tok != "#") throw IoError(path + ":1: header must start with '#'");
    ChildNet child;
    int layers = -1;
    while (hs >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) throw IoError(path + ":1: bad header token '" + tok + "'");
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "preset") child.preset = val;
        else if (key == "layers") layers = std::stoi(val);
        else throw IoError(path + ":1: unknown header key '" + key + "'");
    }
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ":2: missing choices row");
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
        try {
            std::size_t pos;
            int v = std::stoi(cell, &pos);
            if (pos != cell.size()) throw std::invalid_argument(cell);
            if (v < 0 || v >= kNumCandidates) throw std::out_of_range(cell);
            child.choices.push_back(v);
        } catch (const std::exception&) {
            throw IoError(path + ":2: bad block index '" + cell + "'");
        }
    }
    if (layers >= 0 && layers != child.layers())
        throw IoError(path + ": header says " + std::to_string(layers) + " layers, row has " +
                      std::to_string(child.layers()));
    return child;
}

ChildModel ChildModel::init(const ChildNet& child, const MacroArch& arch, Rng& rng) {
    if (child.layers() != arch.num_tbs())
        throw ValidationError("childnet: " + std::to_string(child.layers()) +
                              " choices for architecture with " + std::to_string(arch.num_tbs()) +
                              " TBS layers");
    ChildModel model;
    model.arch = arch;
    model.choices = child.choices;
    const int stem_in = arch.stem.in_channels, stem_out = arch.stem.out_channels;
    model.stem_w = he_uniform({stem_out, stem_in, 3, 3}, stem_in * 9, rng);
    model.stem_b = bias_uniform({stem_out}, stem_in * 9, rng);
    for (int l = 0; l < arch.num_tbs(); ++l) {
        auto cands = candidate_blocks(arch.tbs_layers[l]);
        const int c = child.choices[l];
        if (c >= static_cast<int>(cands.size()))
            throw ValidationError("childnet: choice " + std::to_string(c) + " at layer " +
                                  std::to_string(l) + " is not admissible");
        model.blocks.push_back(init_block_params(cands[c], arch.tbs_layers[l], rng));
    }
    const int last = arch.tbs_layers.back().out_channels;
    model.head_w = he_uniform({arch.head_channels, last, 1, 1}, last, rng);
    model.head_b = bias_uniform({arch.head_channels}, last, rng);
    model.fc_w = he_uniform({arch.head_channels, arch.num_classes}, arch.head_channels, rng);
    model.fc_b = bias_uniform({arch.num_classes}, arch.head_channels, rng);
    return model;
}

Tensor ChildModel::forward(const Tensor& x) const {
    Tensor h = relu(conv2d(x, stem_w, stem_b, 1, 1, 1));
    for (int l = 0; l < arch.num_tbs(); ++l) {
        auto cands = candidate_blocks(arch.tbs_layers[l]);
        h = block_forward(cands[choices[l]], arch.tbs_layers[l], h, blocks[l]);
    }
    h = relu(conv2d(h, head_w, head_b, 1, 0, 1));
    return linear(global_avg_pool(h), fc_w, fc_b);
}

std::vector<Tensor> ChildModel::params() const {
    std::vector<Tensor> out{stem_w, stem_b};
    for (const auto& block : blocks)
        for (const auto& t : block.tensors()) out.push_back(t);
    out.push_back(head_w);
    out.push_back(head_b);
    out.push_back(fc_w);
    out.push_back(fc_b);
    return out;
}

double train_childnet(const ChildNet& child, const MacroArch& arch, const SynthData& data,
                      const ChildTrainConfig& config, std::uint64_t seed) {
    if (config.epochs < 1) throw ValidationError("train_childnet: epochs must be >= 1");
    data.train.validate();
    data.test.validate();
    Rng rng(seed);
    ChildModel model = ChildModel::init(child, arch, rng);
    auto params = model.params();
    SgdMomentum sgd(params, config.opt.momentum, config.opt.weight_decay);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double frac = config.epochs == 1
                                ? 0.0
                                : static_cast<double>(epoch) / static_cast<double>(config.epochs - 1);
        const double lr = 0.5 * config.opt.lr * (1.0 + std::cos(3.14159265358979323846 * frac));
        std::vector<int> order(data.train.size());
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        for (int start = 0; start < data.train.size(); start += config.batch_size) {
            const int end = std::min(start + config.batch_size, data.train.size());
            std::vector<int> idx(order.begin() + start, order.begin() + end);
            Tensor logits = model.forward(data.train.batch(idx));
            Tensor loss = softmax_cross_entropy(logits, data.train.batch_labels(idx));
            if (!std::isfinite(loss.item()))
                throw NumericError("train_childnet: non-finite loss at epoch " +
                                   std::to_string(epoch));
            backward(loss);
            sgd.step(lr);
            for (auto& p : params) p.zero_grad();
        }
    }

    // held-out accuracy
    int correct = 0;
    const int eval_batch = 64;
    for (int start = 0; start < data.test.size(); start += eval_batch) {
        const int end = std::min(start + eval_batch, data.test.size());
        std::vector<int> idx(end - start);
        std::iota(idx.begin(), idx.end(), start);
        Tensor logits = model.forward(data.test.batch(idx));
        auto labels = data.test.batch_labels(idx);
        const int k = arch.num_classes;
        for (int i = 0; i < end - start; ++i) {
            int best = 0;
            for (int j = 1; j < k; ++j)
                if (logits.data()[i * k + j] > logits.data()[i * k + best]) best = j;
            if (best == labels[i]) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(data.test.size());
}

}  // namespace hanna
