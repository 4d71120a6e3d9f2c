#include "hanna/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "hanna/errors.hpp"

namespace hanna {

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join_choices(const std::vector<int>& choices) {
    std::string out;
    for (std::size_t i = 0; i < choices.size(); ++i) {
        if (i) out += ';';
        out += std::to_string(choices[i]);
    }
    return out;
}

std::vector<int> parse_choices(const std::string& s) {
    std::vector<int> out;
    std::istringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ';')) out.push_back(std::stoi(cell));
    return out;
}

const char* kCsvHeader =
    "model_id,alpha,beta,gamma,delta,vlat,vener,dominance,accuracy,latency_s,energy_j,"
    "child_choices";

// Knob points with alpha == 0 have vlat == 0; classify them directly since
// dominance() requires a positive denominator.
DominanceLabel label_for(double vlat, double vener) {
    if (vlat > 0.0) return dominance(vlat, vener);
    DominanceLabel label;
    label.energy_dominant = vener > 0.0;
    label.ratio = vener > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return label;
}

std::string record_row(const ModelRecord& r) {
    const DominanceLabel dom = label_for(r.vlat, r.vener);
    std::ostringstream os;
    os << r.model_id << ',' << fmt17(r.knobs.alpha) << ',' << fmt17(r.knobs.beta) << ','
       << fmt17(r.knobs.gamma) << ',' << fmt17(r.knobs.delta) << ',' << fmt17(r.vlat) << ','
       << fmt17(r.vener) << ',' << dom.name() << ',' << fmt17(r.accuracy) << ','
       << fmt17(r.latency) << ',' << fmt17(r.energy) << ',' << join_choices(r.child_choices);
    return os.str();
}

}  // namespace

std::pair<double, double> v_metrics(const LossKnobs& knobs, double lat0, double ener0) {
    knobs.validate();
    if (!(lat0 > 0.0) || !(ener0 > 0.0))
        throw ValidationError("v_metrics: baselines must be > 0, got lat0=" +
                              std::to_string(lat0) + " ener0=" + std::to_string(ener0));
    return {knobs.alpha * std::pow(lat0, knobs.beta), knobs.gamma * std::pow(ener0, knobs.delta)};
}

DominanceLabel dominance(double vlat, double vener) {
    if (!(vlat > 0.0)) throw ValidationError("dominance: vlat must be > 0");
    DominanceLabel label;
    label.ratio = vener / vlat;
    label.energy_dominant = label.ratio > 1.0;
    return label;
}

std::vector<ModelRecord> pareto_front(const std::vector<ModelRecord>& records) {
    if (records.empty()) throw ValidationError("pareto_front: empty record list");
    std::vector<ModelRecord> front;
    for (std::size_t i = 0; i < records.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < records.size() && !dominated; ++j) {
            if (i == j) continue;
            const ModelRecord& a = records[j];
            const ModelRecord& b = records[i];
            const bool weak =
                a.accuracy >= b.accuracy && a.latency <= b.latency && a.energy <= b.energy;
            const bool strict =
                a.accuracy > b.accuracy || a.latency < b.latency || a.energy < b.energy;
            dominated = weak && strict;
        }
        if (!dominated) front.push_back(records[i]);
    }
    return front;
}

std::pair<double, double> initial_costs(const MacroArch& arch, const CostTable& lat_table,
                                        const CostTable& ener_table) {
    if (lat_table.layers() != arch.num_tbs() || ener_table.layers() != arch.num_tbs())
        throw ValidationError("initial_costs: tables have " +
                              std::to_string(lat_table.layers()) + "/" +
                              std::to_string(ener_table.layers()) + " layers, architecture has " +
                              std::to_string(arch.num_tbs()));
    auto probs = Theta::uniform(arch).softmax_rows();
    double lat = 0.0, ener = 0.0;
    for (int l = 0; l < arch.num_tbs(); ++l)
        for (int i = 0; i < kNumCandidates; ++i)
            if (lat_table.present[l][i]) {
                lat += probs[l][i] * lat_table.values[l][i];
                ener += probs[l][i] * ener_table.values[l][i];
            }
    return {lat, ener};
}

std::vector<ModelRecord> sweep(const std::vector<LossKnobs>& grid, const SearchConfig& base,
                               const MacroArch& arch, const CostTable& lat_table,
                               const CostTable& ener_table, const SynthData& data,
                               const ChildTrainConfig& child_config, const std::string& csv_path) {
    if (grid.empty()) throw ValidationError("sweep: empty knob grid");
    std::ofstream csv(csv_path);
    if (!csv) throw IoError("cannot open '" + csv_path + "' for writing");
    csv << kCsvHeader << "\n" << std::flush;

    const auto [lat0, ener0] = initial_costs(arch, lat_table, ener_table);
    std::vector<ModelRecord> records;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        try {
            SearchConfig config = base;
            config.knobs = grid[i];
            config.seed = base.seed + i;
            config.log_dir = base.log_dir + "/point_" + std::to_string(i);
            std::filesystem::create_directories(config.log_dir);

            SearchResult search = run_search(config, arch, lat_table, ener_table, data.train);
            ChildNet child = sample_childnet(search.theta, arch);
            auto [lat, ener] = childnet_cost(child, lat_table, ener_table);
            const double acc = train_childnet(child, arch, data, child_config, config.seed);

            ModelRecord rec;
            rec.model_id = static_cast<int>(i);
            rec.knobs = grid[i];
            std::tie(rec.vlat, rec.vener) = v_metrics(grid[i], lat0, ener0);
            rec.accuracy = acc;
            rec.latency = lat;
            rec.energy = ener;
            rec.child_choices = child.choices;
            records.push_back(rec);
            csv << record_row(rec) << "\n" << std::flush;
        } catch (const std::exception& e) {
            std::cerr << "sweep: point " << i << " failed: " << e.what() << "\n";
        }
    }
    return records;
}

void write_records_csv(const std::vector<ModelRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << kCsvHeader << "\n";
    for (const auto& r : records) out << record_row(r) << "\n";
    if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<ModelRecord> read_records_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ":1: missing header");
    if (line != kCsvHeader)
        throw IoError(path + ":1: unexpected header '" + line + "'");
    std::vector<ModelRecord> records;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::vector<std::string> cells;
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 12)
            throw IoError(path + ":" + std::to_string(lineno) + ": expected 12 columns, got " +
                          std::to_string(cells.size()));
        try {
            ModelRecord r;
            r.model_id = std::stoi(cells[0]);
            r.knobs.alpha = std::stod(cells[1]);
            r.knobs.beta = std::stod(cells[2]);
            r.knobs.gamma = std::stod(cells[3]);
            r.knobs.delta = std::stod(cells[4]);
            r.vlat = std::stod(cells[5]);
            r.vener = std::stod(cells[6]);
            // cells[7] is the dominance label, derived from vlat/vener
            r.accuracy = std::stod(cells[8]);
            r.latency = std::stod(cells[9]);
            r.energy = std::stod(cells[10]);
            r.child_choices = parse_choices(cells[11]);
            records.push_back(std::move(r));
        } catch (const IoError&) {
            throw;
        } catch (const std::exception&) {
            throw IoError(path + ":" + std::to_string(lineno) + ": malformed row");
        }
    }
    return records;
}

}  // namespace hanna
