#pragma once

#include <string>
#include <vector>

#include "hanna/childnet.hpp"
#include "hanna/costmodel.hpp"
#include "hanna/dataset.hpp"
#include "hanna/trainer.hpp"

namespace hanna {

// Everything the CLI pipeline needs, loadable from a flat key=value file
// with section prefixes (e.g. "search.epochs=20"). Unknown keys are errors.
struct RunConfig {
    // arch.*
    std::string arch_preset = "desk";
    int num_classes = 4;
    int stem_out = 8;         // custom preset only
    int head_channels = 64;   // custom preset only
    std::vector<LayerSpec> custom_layers;

    // device.*
    DeviceModel device;

    // data.*
    SynthSpec data;
    std::string data_path;  // raw binary dataset; empty -> synthetic
    std::uint64_t data_seed = 7;

    // search.* and knobs.*
    SearchConfig search = SearchConfig::desk();

    // child.*
    ChildTrainConfig child;

    // sweep.* (grid = cross product of the four lists)
    std::vector<double> sweep_alphas{0.0};
    std::vector<double> sweep_betas{1.0};
    std::vector<double> sweep_gammas{0.0};
    std::vector<double> sweep_deltas{1.0};

    // tables.*
    std::string lat_table_path = "lat_lookup.txt";
    std::string ener_table_path = "ener_lookup.txt";

    std::string out_dir = ".";
    bool strict = false;

    MacroArch make_arch() const;
    SynthData make_data() const;
    std::vector<LossKnobs> make_grid() const;
};

RunConfig parse_run_config(const std::string& path);
// Applies one "section.key=value" assignment; throws ValidationError on
// unknown keys or bad values.
void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value);

}  // namespace hanna
