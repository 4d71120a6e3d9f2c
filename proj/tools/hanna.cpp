#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hanna/analysis.hpp"
#include "hanna/childnet.hpp"
#include "hanna/config.hpp"
#include "hanna/costmodel.hpp"
#include "hanna/errors.hpp"
#include "hanna/oracle.hpp"
#include "hanna/trainer.hpp"

namespace {

using namespace hanna;

struct GlobalOpts {
    std::string config_path;
    std::string out_dir;
    long long seed = -1;
    bool strict = false;
};

RunConfig resolve_config(const GlobalOpts& opts) {
    RunConfig config;
    if (!opts.config_path.empty()) config = parse_run_config(opts.config_path);
    if (!opts.out_dir.empty()) config.out_dir = opts.out_dir;
    if (opts.seed >= 0) config.search.seed = static_cast<std::uint64_t>(opts.seed);
    config.strict = opts.strict;
    config.search.strict = opts.strict;
    std::filesystem::create_directories(config.out_dir);
    return config;
}

std::pair<CostTable, CostTable> load_tables(const RunConfig& config) {
    return {load_table(config.lat_table_path), load_table(config.ener_table_path)};
}

int cmd_profile(const GlobalOpts& opts) {
    RunConfig config = resolve_config(opts);
    MacroArch arch = config.make_arch();
    auto [lat, ener] = profile(config.device, arch, config.data.height, config.data.width);
    const std::string lat_path = config.out_dir + "/lat_lookup.txt";
    const std::string ener_path = config.out_dir + "/ener_lookup.txt";
    save_table(lat, lat_path);
    save_table(ener, ener_path);
    std::cout << "profiled " << arch.num_tbs() << " TBS layers -> " << lat_path << ", "
              << ener_path << "\n";
    return 0;
}

int cmd_search(const GlobalOpts& opts) {
    RunConfig config = resolve_config(opts);
    MacroArch arch = config.make_arch();
    auto [lat, ener] = load_tables(config);
    SynthData data = config.make_data();
    SearchConfig sc = config.search;
    sc.log_dir = config.out_dir;
    SearchResult result = run_search(sc, arch, lat, ener, data.train);
    const EpochLog& last = result.logs.back();
    std::cout << "search done: " << sc.epochs << " epochs, final " << last.phase
              << "-phase ce=" << last.stats.ce << " lat=" << last.stats.lat
              << " ener=" << last.stats.ener << " acc=" << last.stats.acc << "\n"
              << "theta snapshots and search_log.csv written to " << config.out_dir << "\n";
    return 0;
}

int cmd_sample(const GlobalOpts& opts, const std::string& theta_path) {
    RunConfig config = resolve_config(opts);
    MacroArch arch = config.make_arch();
    ThetaSnapshot snap = load_theta(theta_path);
    if (snap.theta.layers() != arch.num_tbs())
        throw ValidationError("sample: theta file has " + std::to_string(snap.theta.layers()) +
                              " layers, architecture '" + arch.preset + "' has " +
                              std::to_string(arch.num_tbs()));
    ChildNet child = sample_childnet(snap.theta, arch);
    const std::string path = config.out_dir + "/child.txt";
    save_childnet(child, path);
    std::cout << "sampled childnet";
    for (int c : child.choices) std::cout << ' ' << c;
    std::cout << " -> " << path << "\n";
    return 0;
}

int cmd_train_child(const GlobalOpts& opts, const std::string& child_path) {
    RunConfig config = resolve_config(opts);
    MacroArch arch = config.make_arch();
    ChildNet child = load_childnet(child_path);
    if (child.layers() != arch.num_tbs())
        throw ValidationError("train-child: childnet has " + std::to_string(child.layers()) +
                              " layers, architecture has " + std::to_string(arch.num_tbs()));
    auto [lat_table, ener_table] = load_tables(config);
    auto [lat, ener] = childnet_cost(child, lat_table, ener_table);
    SynthData data = config.make_data();
    const double acc = train_childnet(child, arch, data, config.child, config.search.seed);
    std::printf("accuracy %.4f  latency %.6g s  energy %.6g J\n", acc, lat, ener);
    return 0;
}

int cmd_sweep(const GlobalOpts& opts) {
    RunConfig config = resolve_config(opts);
    MacroArch arch = config.make_arch();
    auto [lat, ener] = load_tables(config);
    SynthData data = config.make_data();
    SearchConfig base = config.search;
    base.log_dir = config.out_dir;
    const std::string csv_path = config.out_dir + "/sweep.csv";
    auto records = sweep(config.make_grid(), base, arch, lat, ener, data, config.child, csv_path);
    std::cout << records.size() << "/" << config.make_grid().size() << " sweep points -> "
              << csv_path << "\n";
    return 0;
}

int cmd_pareto(const GlobalOpts& opts, const std::string& csv_path) {
    RunConfig config = resolve_config(opts);
    auto records = read_records_csv(csv_path);
    auto front = pareto_front(records);
    const std::string out_path = config.out_dir + "/pareto.csv";
    write_records_csv(front, out_path);
    std::cout << front.size() << "/" << records.size() << " Pareto-optimal -> " << out_path
              << "\n";
    return 0;
}

int cmd_oracle(const GlobalOpts& opts, int layers, int cands) {
    RunConfig config = resolve_config(opts);
    Rng rng(config.search.seed);
    MicroSpace space;
    space.num_layers = layers;
    space.candidates = cands;
    space.lat.assign(layers, std::vector<double>(cands));
    space.ener.assign(layers, std::vector<double>(cands));
    for (auto& row : space.lat)
        for (double& v : row) v = rng.uniform(0.1, 1.0);
    for (auto& row : space.ener)
        for (double& v : row) v = rng.uniform(0.1, 1.0);

    auto entries = enumerate_space(space);
    std::size_t best_lat = 0, best_ener = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].lat < entries[best_lat].lat) best_lat = i;
        if (entries[i].ener < entries[best_ener].ener) best_ener = i;
        std::printf("arch");
        for (int c : entries[i].choices) std::printf(" %d", c);
        std::printf("  lat=%.6g  ener=%.6g\n", entries[i].lat, entries[i].ener);
    }
    std::vector<std::vector<double>> uniform(layers, std::vector<double>(cands, 1.0));
    std::printf("architectures: %zu\n", entries.size());
    std::printf("min latency: %.6g (arch %zu), min energy: %.6g (arch %zu)\n",
                entries[best_lat].lat, best_lat, entries[best_ener].ener, best_ener);
    std::printf("expected latency under uniform theta: %.6g\n",
                exact_expected_loss(uniform, space, {1.0, 1.0, 0.0, 1.0}));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hardware-aware differentiable architecture search pipeline"};
    app.require_subcommand(1);

    GlobalOpts opts;
    app.add_option("--config", opts.config_path, "Run-config file (key=value lines)");
    app.add_option("--seed", opts.seed, "Override search.seed");
    app.add_option("--out", opts.out_dir, "Output directory (overrides out.dir)");
    app.add_flag("--strict", opts.strict, "Strict single-threaded deterministic mode");

    auto* profile_cmd =
        app.add_subcommand("profile", "Generate latency and energy lookup tables");
    auto* search_cmd = app.add_subcommand("search", "Run the supernet search");
    auto* sample_cmd = app.add_subcommand("sample", "Extract the argmax childnet from a theta file");
    std::string theta_path;
    sample_cmd->add_option("theta", theta_path, "Theta snapshot file")->required();
    auto* train_child_cmd = app.add_subcommand("train-child", "Retrain a childnet from scratch");
    std::string child_path;
    train_child_cmd->add_option("child", child_path, "Childnet file")->required();
    auto* sweep_cmd = app.add_subcommand("sweep", "Search/retrain across the knob grid");
    auto* pareto_cmd = app.add_subcommand("pareto", "Filter a sweep CSV to its Pareto front");
    std::string pareto_csv;
    pareto_cmd->add_option("csv", pareto_csv, "Sweep CSV file")->required();
    auto* oracle_cmd = app.add_subcommand("oracle", "Enumerate a random micro search space");
    int oracle_layers = 3, oracle_cands = 3;
    oracle_cmd->add_option("--layers", oracle_layers, "Micro-space layers (<= 4)");
    oracle_cmd->add_option("--cands", oracle_cands, "Candidates per layer (<= 4)");

    try {
        app.parse(argc, argv);
        if (profile_cmd->parsed()) return cmd_profile(opts);
        if (search_cmd->parsed()) return cmd_search(opts);
        if (sample_cmd->parsed()) return cmd_sample(opts, theta_path);
        if (train_child_cmd->parsed()) return cmd_train_child(opts, child_path);
        if (sweep_cmd->parsed()) return cmd_sweep(opts);
        if (pareto_cmd->parsed()) return cmd_pareto(opts, pareto_csv);
        if (oracle_cmd->parsed()) return cmd_oracle(opts, oracle_layers, oracle_cands);
        return 1;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const hanna::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const hanna::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const hanna::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
