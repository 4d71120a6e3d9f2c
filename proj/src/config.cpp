#include "hanna/config.hpp"

#include <fstream>
#include <sstream>

#include "hanna/errors.hpp"

namespace hanna {

namespace {

double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config: bad number '" + value + "' for key '" + key + "'");
    }
}

int to_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos;
        int v = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config: bad integer '" + value + "' for key '" + key + "'");
    }
}

std::vector<double> to_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::istringstream ss(value);
    std::string cell;
    while (std::getline(ss, cell, ','))
        out.push_back(to_double(key, cell));
    if (out.empty()) throw ValidationError("config: empty list for key '" + key + "'");
    return out;
}

// "in:out:stride,in:out:stride,..."
std::vector<LayerSpec> to_layers(const std::string& key, const std::string& value) {
    std::vector<LayerSpec> out;
    std::istringstream ss(value);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        std::istringstream ls(cell);
        std::string part;
        std::vector<int> nums;
        while (std::getline(ls, part, ':')) nums.push_back(to_int(key, part));
        if (nums.size() != 3)
            throw ValidationError("config: layer spec '" + cell + "' must be in:out:stride");
        out.push_back({nums[0], nums[1], nums[2], true});
    }
    if (out.empty()) throw ValidationError("config: empty layer list for key '" + key + "'");
    return out;
}

}  // namespace

void apply_config_entry(RunConfig& c, const std::string& key, const std::string& value) {
    if (key == "arch.preset") c.arch_preset = value;
    else if (key == "arch.num_classes") c.num_classes = to_int(key, value);
    else if (key == "arch.stem_out") c.stem_out = to_int(key, value);
    else if (key == "arch.head_channels") c.head_channels = to_int(key, value);
    else if (key == "arch.layers") c.custom_layers = to_layers(key, value);
    else if (key == "device.supply_voltage") c.device.supply_voltage = to_double(key, value);
    else if (key == "device.idle_current") c.device.idle_current = to_double(key, value);
    else if (key == "device.max_current") c.device.max_current = to_double(key, value);
    else if (key == "device.throughput") c.device.throughput = to_double(key, value);
    else if (key == "device.overhead") c.device.per_block_overhead = to_double(key, value);
    else if (key == "device.util_exponent") c.device.utilization_exponent = to_double(key, value);
    else if (key == "data.samples") c.data.samples = to_int(key, value);
    else if (key == "data.test_samples") c.data.test_samples = to_int(key, value);
    else if (key == "data.classes") c.data.classes = to_int(key, value);
    else if (key == "data.channels") c.data.channels = to_int(key, value);
    else if (key == "data.height") c.data.height = to_int(key, value);
    else if (key == "data.width") c.data.width = to_int(key, value);
    else if (key == "data.noise") c.data.noise = to_double(key, value);
    else if (key == "data.seed") c.data_seed = static_cast<std::uint64_t>(to_int(key, value));
    else if (key == "data.path") c.data_path = value;
    else if (key == "search.epochs") c.search.epochs = to_int(key, value);
    else if (key == "search.warmup_epochs") c.search.warmup_epochs = to_int(key, value);
    else if (key == "search.batch_size") c.search.batch_size = to_int(key, value);
    else if (key == "search.split") c.search.split = to_double(key, value);
    else if (key == "search.seed") c.search.seed = static_cast<std::uint64_t>(to_int(key, value));
    else if (key == "search.lr") c.search.w_opt.lr = to_double(key, value);
    else if (key == "search.momentum") c.search.w_opt.momentum = to_double(key, value);
    else if (key == "search.weight_decay") c.search.w_opt.weight_decay = to_double(key, value);
    else if (key == "search.theta_lr") c.search.t_opt.lr = to_double(key, value);
    else if (key == "search.theta_weight_decay") c.search.t_opt.weight_decay = to_double(key, value);
    else if (key == "search.tau_init") c.search.tau_init = to_double(key, value);
    else if (key == "search.tau_min") c.search.tau_min = to_double(key, value);
    else if (key == "knobs.alpha") c.search.knobs.alpha = to_double(key, value);
    else if (key == "knobs.beta") c.search.knobs.beta = to_double(key, value);
    else if (key == "knobs.gamma") c.search.knobs.gamma = to_double(key, value);
    else if (key == "knobs.delta") c.search.knobs.delta = to_double(key, value);
    else if (key == "child.epochs") c.child.epochs = to_int(key, value);
    else if (key == "child.batch_size") c.child.batch_size = to_int(key, value);
    else if (key == "child.lr") c.child.opt.lr = to_double(key, value);
    else if (key == "sweep.alphas") c.sweep_alphas = to_list(key, value);
    else if (key == "sweep.betas") c.sweep_betas = to_list(key, value);
    else if (key == "sweep.gammas") c.sweep_gammas = to_list(key, value);
    else if (key == "sweep.deltas") c.sweep_deltas = to_list(key, value);
    else if (key == "tables.lat") c.lat_table_path = value;
    else if (key == "tables.ener") c.ener_table_path = value;
    else if (key == "out.dir") c.out_dir = value;
    else throw ValidationError("config: unknown key '" + key + "'");
}

RunConfig parse_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    RunConfig config;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // strip comments and whitespace
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": expected key=value, got '" + line + "'");
        try {
            apply_config_entry(config, line.substr(0, eq), line.substr(eq + 1));
        } catch (const ValidationError& e) {
            throw ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return config;
}

MacroArch RunConfig::make_arch() const {
    if (arch_preset == "custom")
        return build_macro_custom(stem_out, custom_layers, head_channels, num_classes);
    return build_macro(arch_preset, num_classes);
}

SynthData RunConfig::make_data() const {
    if (!data_path.empty()) {
        LabeledData all = load_raw(data_path);
        // held-out fifth for evaluation
        auto [train, test] = split_dataset(all, 0.8, data_seed);
        return {train, test};
    }
    return make_synthetic(data, data_seed);
}

std::vector<LossKnobs> RunConfig::make_grid() const {
    std::vector<LossKnobs> grid;
    for (double a : sweep_alphas)
        for (double b : sweep_betas)
            for (double g : sweep_gammas)
                for (double d : sweep_deltas) grid.push_back({a, b, g, d});
    return grid;
}

}  // namespace hanna
