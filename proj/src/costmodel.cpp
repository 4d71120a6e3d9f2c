#include "hanna/costmodel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hanna/errors.hpp"

namespace hanna {

void DeviceModel::validate() const {
    if (!(idle_current > 0.0) || !(idle_current < max_current))
        throw ValidationError("device: need 0 < idle_current < max_current, got idle=" +
                              std::to_string(idle_current) + " max=" + std::to_string(max_current));
    if (!(throughput > 0.0)) throw ValidationError("device: throughput must be > 0");
    if (!(supply_voltage > 0.0)) throw ValidationError("device: supply_voltage must be > 0");
    if (per_block_overhead < 0.0) throw ValidationError("device: per_block_overhead must be >= 0");
}

double CostTable::at(int layer, int block) const {
    if (!has(layer, block))
        throw ValidationError("cost table: cell (" + std::to_string(layer) + "," +
                              std::to_string(block) + ") is absent");
    return values[layer][block];
}

bool CostTable::has(int layer, int block) const {
    if (layer < 0 || layer >= layers() || block < 0 || block >= kNumCandidates)
        throw ValidationError("cost table: cell (" + std::to_string(layer) + "," +
                              std::to_string(block) + ") out of range for " +
                              std::to_string(layers()) + " layers");
    return present[layer][block];
}

std::vector<double> CostTable::row_or_zero(int layer) const {
    std::vector<double> row(kNumCandidates, 0.0);
    for (int b = 0; b < kNumCandidates; ++b)
        if (present[layer][b]) row[b] = values[layer][b];
    return row;
}

long long block_macs(const BlockConfig& cfg, const LayerSpec& layer, int h, int w) {
    if (cfg.is_skip) {
        if (!layer.skip_admissible())
            throw ValidationError("block_macs: skip not admissible for layer " +
                                  std::to_string(layer.in_channels) + "->" +
                                  std::to_string(layer.out_channels) + " stride " +
                                  std::to_string(layer.stride));
        return 0;
    }
    if (h < 1 || w < 1) throw ValidationError("block_macs: input size must be >= 1");
    const long long cin = layer.in_channels;
    const long long cmid = static_cast<long long>(cfg.expansion) * cin;
    const long long cout = layer.out_channels;
    const long long g = cfg.groups;
    const long long k = cfg.kernel;
    const long long s = layer.stride;
    const long long hw = static_cast<long long>(h) * w;
    const long long hw_out = static_cast<long long>(h / s) * (w / s);
    return hw * cin * cmid / g + hw_out * cmid * k * k + hw_out * cmid * cout / g;
}

double block_latency(const DeviceModel& model, long long macs) {
    if (macs < 0) throw ValidationError("block_latency: negative MAC count");
    return model.per_block_overhead + static_cast<double>(macs) / model.throughput;
}

double block_energy(const DeviceModel& model, long long macs, long long macs_max, double t) {
    if (t < 0.0) throw ValidationError("block_energy: negative time");
    if (macs_max <= 0 || macs <= 0) return 0.0;
    double u = std::min(1.0, static_cast<double>(macs) / static_cast<double>(macs_max));
    u = std::pow(u, model.utilization_exponent);
    const double dynamic = (model.max_current - model.idle_current) * u;
    return dynamic * model.supply_voltage * t;
}

std::pair<CostTable, CostTable> profile(const DeviceModel& model, const MacroArch& arch,
                                        int input_h, int input_w) {
    model.validate();
    const int L = arch.num_tbs();
    CostTable lat, ener;
    lat.metric = CostMetric::latency;
    ener.metric = CostMetric::energy;
    lat.values.assign(L, {});
    ener.values.assign(L, {});
    lat.present.assign(L, {});
    ener.present.assign(L, {});

    // MACs for every admissible cell first; energy needs the table maximum.
    std::vector<std::array<long long, kNumCandidates>> macs(
        L, std::array<long long, kNumCandidates>{});
    long long macs_max = 0;
    int h = input_h, w = input_w;
    for (int l = 0; l < L; ++l) {
        const LayerSpec& layer = arch.tbs_layers[l];
        auto cands = candidate_blocks(layer);
        for (std::size_t b = 0; b < cands.size(); ++b) {
            macs[l][b] = block_macs(cands[b], layer, h, w);
            macs_max = std::max(macs_max, macs[l][b]);
            lat.present[l][b] = ener.present[l][b] = true;
        }
        h = (h - 1) / layer.stride + 1;
        w = (w - 1) / layer.stride + 1;
    }
    for (int l = 0; l < L; ++l)
        for (int b = 0; b < kNumCandidates; ++b)
            if (lat.present[l][b]) {
                const double t = block_latency(model, macs[l][b]);
                lat.values[l][b] = t;
                ener.values[l][b] = block_energy(model, macs[l][b], macs_max, t);
            }
    return {lat, ener};
}

void save_table(const CostTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "# metric=" << (table.metric == CostMetric::latency ? "latency" : "energy")
        << " unit=" << table.unit() << " layers=" << table.layers() << " blocks=" << kNumCandidates
        << "\n";
    char buf[64];
    for (int l = 0; l < table.layers(); ++l) {
        for (int b = 0; b < kNumCandidates; ++b) {
            if (b) out << ' ';
            if (!table.present[l][b]) {
                out << '-';
            } else {
                std::snprintf(buf, sizeof(buf), "%.17g", table.values[l][b]);
                out << buf;
            }
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

CostTable load_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string header;
    if (!std::getline(in, header)) throw IoError(path + ":1: missing header");

    CostTable table;
    int layers = -1, blocks = -1;
    {
        std::istringstream hs(header);
        std::string tok;
        hs >> tok;
        if (tok != "#") throw IoError(path + ":1: header must start with '#'");
        std::string metric, unit;
        while (hs >> tok) {
            auto eq = tok.find('=');
            if (eq == std::string::npos) throw IoError(path + ":1: bad header token '" + tok + "'");
            const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
            if (key == "metric") metric = val;
            else if (key == "unit") unit = val;
            else if (key == "layers") layers = std::stoi(val);
            else if (key == "blocks") blocks = std::stoi(val);
            else throw IoError(path + ":1: unknown header key '" + key + "'");
        }
        if (metric == "latency") table.metric = CostMetric::latency;
        else if (metric == "energy") table.metric = CostMetric::energy;
        else throw IoError(path + ":1: metric must be latency or energy, got '" + metric + "'");
        if (unit != table.unit())
            throw IoError(path + ":1: unit '" + unit + "' does not match metric");
        if (blocks != kNumCandidates)
            throw IoError(path + ":1: blocks must be " + std::to_string(kNumCandidates));
        if (layers < 1) throw IoError(path + ":1: layers must be >= 1");
    }

    table.values.assign(layers, {});
    table.present.assign(layers, {});
    std::string line;
    for (int l = 0; l < layers; ++l) {
        const int lineno = l + 2;
        if (!std::getline(in, line))
            throw IoError(path + ":" + std::to_string(lineno) + ": expected a data row");
        std::istringstream ls(line);
        std::string tok;
        int b = 0;
        while (ls >> tok) {
            if (b >= kNumCandidates)
                throw IoError(path + ":" + std::to_string(lineno) + ": more than " +
                              std::to_string(kNumCandidates) + " columns");
            if (tok == "-") {
                table.present[l][b] = false;
            } else {
                double v;
                try {
                    std::size_t pos;
                    v = std::stod(tok, &pos);
                    if (pos != tok.size()) throw std::invalid_argument(tok);
                } catch (const std::exception&) {
                    throw IoError(path + ":" + std::to_string(lineno) + ": bad value '" + tok + "'");
                }
                if (std::isnan(v))
                    throw IoError(path + ":" + std::to_string(lineno) + ": NaN value");
                if (v < 0.0)
                    throw IoError(path + ":" + std::to_string(lineno) + ": negative value " + tok);
                table.values[l][b] = v;
                table.present[l][b] = true;
            }
            ++b;
        }
        if (b != kNumCandidates)
            throw IoError(path + ":" + std::to_string(lineno) + ": row has " + std::to_string(b) +
                          " columns, expected " + std::to_string(kNumCandidates));
    }
    std::string extra;
    if (std::getline(in, extra) && !extra.empty())
        throw IoError(path + ":" + std::to_string(layers + 2) + ": trailing data");
    return table;
}

}  // namespace hanna
