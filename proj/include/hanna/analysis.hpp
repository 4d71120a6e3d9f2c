#pragma once

#include <string>
#include <vector>

#include "hanna/childnet.hpp"
#include "hanna/costmodel.hpp"
#include "hanna/dataset.hpp"
#include "hanna/trainer.hpp"

namespace hanna {

struct ModelRecord {
    int model_id = 0;
    LossKnobs knobs;
    double vlat = 0.0;
    double vener = 0.0;
    double accuracy = 0.0;  // fraction
    double latency = 0.0;   // seconds
    double energy = 0.0;    // joules
    std::vector<int> child_choices;
};

struct DominanceLabel {
    bool energy_dominant = false;
    double ratio = 0.0;  // vener / vlat

    const char* name() const { return energy_dominant ? "energy-dominant" : "latency-dominant"; }
};

// vlat = alpha * lat0^beta, vener = gamma * ener0^delta: knob-applied
// initial cost values used to pre-visualize which objective a knob
// configuration emphasizes.
std::pair<double, double> v_metrics(const LossKnobs& knobs, double lat0, double ener0);

// Energy-dominant iff vener/vlat is strictly greater than 1.
DominanceLabel dominance(double vlat, double vener);

// Non-dominated records over (accuracy up, latency down, energy down),
// weak dominance with at least one strict inequality; input order kept.
std::vector<ModelRecord> pareto_front(const std::vector<ModelRecord>& records);

// Expected table costs under uniform theta: the search's starting point,
// used as the (lat0, ener0) baselines for v_metrics.
std::pair<double, double> initial_costs(const MacroArch& arch, const CostTable& lat_table,
                                        const CostTable& ener_table);

// One full search -> sample -> retrain pipeline per knob point. Each point
// gets seed base.seed + index and its own snapshot directory under
// base.log_dir; rows are appended to csv_path as they finish. Failed points
// are reported and skipped.
std::vector<ModelRecord> sweep(const std::vector<LossKnobs>& grid, const SearchConfig& base,
                               const MacroArch& arch, const CostTable& lat_table,
                               const CostTable& ener_table, const SynthData& data,
                               const ChildTrainConfig& child_config, const std::string& csv_path);

void write_records_csv(const std::vector<ModelRecord>& records, const std::string& path);
std::vector<ModelRecord> read_records_csv(const std::string& path);

}  // namespace hanna
