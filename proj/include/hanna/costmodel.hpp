#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "hanna/searchspace.hpp"

namespace hanna {

// Analytic stand-in for a profiled embedded device. Defaults follow the
// electrical envelope of a Raspberry Pi 3B: 5.1 V supply, 0.24 A idle,
// 0.74 A peak under load.
struct DeviceModel {
    double supply_voltage = 5.1;      // volts
    double idle_current = 0.24;       // amps
    double max_current = 0.74;        // amps
    double throughput = 1e8;          // MAC/s
    double per_block_overhead = 1e-4; // seconds
    double utilization_exponent = 0.5;

    void validate() const;
};

enum class CostMetric { latency, energy };

// Per-(TBS layer, candidate) cost lookup. Inadmissible skip cells are absent.
struct CostTable {
    CostMetric metric = CostMetric::latency;
    std::vector<std::array<double, kNumCandidates>> values;
    std::vector<std::array<bool, kNumCandidates>> present;

    int layers() const { return static_cast<int>(values.size()); }
    const char* unit() const { return metric == CostMetric::latency ? "s" : "J"; }
    double at(int layer, int block) const;  // throws on absent cell
    bool has(int layer, int block) const;
    // Row values with absent cells as 0 (paired with masks that are 0 there).
    std::vector<double> row_or_zero(int layer) const;

    bool operator==(const CostTable&) const = default;
};

// Multiply-accumulate count of one candidate block at the given input size;
// 0 for skip.
long long block_macs(const BlockConfig& cfg, const LayerSpec& layer, int h, int w);

// t = overhead + macs / throughput.
double block_latency(const DeviceModel& model, long long macs);

// Dynamic-current energy: E = (I_block - idle) * V * t, with the current
// rising from idle toward max as utilization (macs / macs_max) grows.
double block_energy(const DeviceModel& model, long long macs, long long macs_max, double t);

// Fills both tables for every admissible cell of the architecture.
// input_hw is the spatial size entering the first TBS layer.
std::pair<CostTable, CostTable> profile(const DeviceModel& model, const MacroArch& arch,
                                        int input_h, int input_w);

void save_table(const CostTable& table, const std::string& path);
CostTable load_table(const std::string& path);

}  // namespace hanna
