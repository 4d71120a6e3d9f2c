#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hanna/analysis.hpp"
#include "hanna/errors.hpp"
#include "hanna/rng.hpp"

using namespace hanna;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* name) {
    fs::path dir = fs::temp_directory_path() / "hanna_analysis_tests" / name;
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    REQUIRE(f.good());
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

ModelRecord record(int id, double acc, double lat, double ener) {
    ModelRecord r;
    r.model_id = id;
    r.accuracy = acc;
    r.latency = lat;
    r.energy = ener;
    r.child_choices = {0, 1};
    return r;
}

// independent O(n^2) dominance filter
std::vector<ModelRecord> brute_force_pareto(const std::vector<ModelRecord>& records) {
    std::vector<ModelRecord> out;
    for (const auto& r : records) {
        bool dominated = false;
        for (const auto& other : records) {
            const bool weak = other.accuracy >= r.accuracy && other.latency <= r.latency &&
                              other.energy <= r.energy;
            const bool strict = other.accuracy > r.accuracy || other.latency < r.latency ||
                                other.energy < r.energy;
            if (weak && strict) dominated = true;
        }
        if (!dominated) out.push_back(r);
    }
    return out;
}

std::vector<int> ids(const std::vector<ModelRecord>& records) {
    std::vector<int> out;
    for (const auto& r : records) out.push_back(r.model_id);
    return out;
}

}  // namespace

TEST_CASE("v_metrics evaluates the knob expressions") {
    LossKnobs k;
    k.alpha = 0.5;
    k.beta = 1.5;
    k.gamma = 0.5;
    k.delta = 0.5;
    auto [vlat, vener] = v_metrics(k, 3.5, 18.43);
    CHECK(vlat == doctest::Approx(0.5 * std::pow(3.5, 1.5)).epsilon(1e-12));
    CHECK(vlat == doctest::Approx(3.27395).epsilon(1e-5));
    CHECK(vener == doctest::Approx(0.5 * std::pow(18.43, 0.5)).epsilon(1e-12));
    CHECK(vener == doctest::Approx(2.14651).epsilon(1e-5));

    LossKnobs identity;
    identity.alpha = identity.gamma = 1.0;  // beta = delta = 1
    auto [l0, e0] = v_metrics(identity, 1.7, 2.9);
    CHECK(l0 == 1.7);
    CHECK(e0 == 2.9);

    CHECK_THROWS_AS(v_metrics(k, 0.0, 1.0), ValidationError);
    CHECK_THROWS_AS(v_metrics(k, 1.0, -2.0), ValidationError);
}

TEST_CASE("dominance classification") {
    DominanceLabel d = dominance(3.27395, 2.14651);
    CHECK(!d.energy_dominant);
    CHECK(d.ratio == doctest::Approx(0.6557).epsilon(1e-4));
    CHECK(std::string(d.name()) == "latency-dominant");

    CHECK(!dominance(2.0, 2.0).energy_dominant);  // boundary is strict
    DominanceLabel e = dominance(1.0, 4.0);
    CHECK(e.energy_dominant);
    CHECK(e.ratio == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(std::string(e.name()) == "energy-dominant");
}

TEST_CASE("dominance depends only on the powered baselines when alpha==gamma") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        LossKnobs k;
        k.alpha = k.gamma = rng.uniform(0.01, 5.0);
        k.beta = rng.uniform(0.2, 2.0);
        k.delta = rng.uniform(0.2, 2.0);
        const double lat0 = rng.uniform(0.1, 10.0), ener0 = rng.uniform(0.1, 10.0);
        auto [vlat, vener] = v_metrics(k, lat0, ener0);
        const bool expect = std::pow(ener0, k.delta) > std::pow(lat0, k.beta);
        CHECK(dominance(vlat, vener).energy_dominant == expect);
    }
}

TEST_CASE("pareto_front basics and the published fixture") {
    std::vector<ModelRecord> single{record(0, 0.9, 1.0, 1.0)};
    CHECK(ids(pareto_front(single)) == std::vector<int>{0});

    // three published reference points: each trades accuracy for cost
    std::vector<ModelRecord> table{
        record(0, 0.924, 7.10, 18.24),
        record(1, 0.911, 4.83, 9.28),
        record(2, 0.877, 2.88, 4.79),
    };
    CHECK(ids(pareto_front(table)) == std::vector<int>{0, 1, 2});

    // strictly dominated record drops out
    table.push_back(record(3, 0.85, 7.5, 20.0));
    CHECK(ids(pareto_front(table)) == std::vector<int>{0, 1, 2});

    // equal records do not eliminate each other (no strict inequality)
    std::vector<ModelRecord> twins{record(0, 0.9, 1.0, 1.0), record(1, 0.9, 1.0, 1.0)};
    CHECK(ids(pareto_front(twins)) == std::vector<int>{0, 1});

    CHECK_THROWS_AS(pareto_front({}), ValidationError);
}

TEST_CASE("pareto_front matches the brute-force oracle on random sets") {
    Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_int(200));
        std::vector<ModelRecord> records;
        for (int i = 0; i < n; ++i)
            records.push_back(record(i, rng.uniform(0.0, 1.0), rng.uniform(0.5, 5.0),
                                     rng.uniform(0.5, 5.0)));
        auto front = pareto_front(records);
        CHECK(ids(front) == ids(brute_force_pareto(records)));
        // idempotent
        CHECK(ids(pareto_front(front)) == ids(front));
    }
}

TEST_CASE("initial_costs are the uniform-theta expected costs") {
    MacroArch desk = build_macro("desk", 4);
    auto [lat, ener] = profile(DeviceModel{}, desk, 8, 8);
    auto [lat0, ener0] = initial_costs(desk, lat, ener);
    double expect_lat = 0.0, expect_ener = 0.0;
    for (int l = 0; l < desk.num_tbs(); ++l) {
        const int n = desk.num_candidates(l);
        for (int b = 0; b < n; ++b) {
            expect_lat += lat.at(l, b) / n;
            expect_ener += ener.at(l, b) / n;
        }
    }
    CHECK(lat0 == doctest::Approx(expect_lat).epsilon(1e-14));
    CHECK(ener0 == doctest::Approx(expect_ener).epsilon(1e-14));

    MacroArch other = build_macro("desk", 2);
    other.tbs_layers.pop_back();
    CHECK_THROWS_AS(initial_costs(other, lat, ener), ValidationError);
}

TEST_CASE("records CSV round trip") {
    std::vector<ModelRecord> records;
    for (int i = 0; i < 3; ++i) {
        ModelRecord r = record(i, 0.5 + 0.1 * i, 1.0 / 3 + i, 0.1 * i + 0.01);
        r.knobs.alpha = 0.25 * i;
        r.knobs.beta = 1.5;
        r.knobs.gamma = 0.125;
        r.knobs.delta = 0.5;
        r.vlat = 0.123456789012345 + i;
        r.vener = 2.0 + i;
        r.child_choices = {i, 8, 3};
        records.push_back(r);
    }
    const fs::path dir = temp_dir("csv");
    const fs::path p1 = dir / "a.csv", p2 = dir / "b.csv";
    write_records_csv(records, p1.string());
    const std::string text = slurp(p1);
    CHECK(text.rfind("model_id,alpha,beta,gamma,delta,vlat,vener,dominance,accuracy,"
                     "latency_s,energy_j,child_choices\n", 0) == 0);
    CHECK(text.find("0;8;3") != std::string::npos);

    auto loaded = read_records_csv(p1.string());
    REQUIRE(loaded.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(loaded[i].model_id == records[i].model_id);
        CHECK(loaded[i].knobs.alpha == records[i].knobs.alpha);
        CHECK(loaded[i].knobs.delta == records[i].knobs.delta);
        CHECK(loaded[i].vlat == records[i].vlat);
        CHECK(loaded[i].accuracy == records[i].accuracy);
        CHECK(loaded[i].latency == records[i].latency);
        CHECK(loaded[i].energy == records[i].energy);
        CHECK(loaded[i].child_choices == records[i].child_choices);
    }
    write_records_csv(loaded, p2.string());
    CHECK(slurp(p1) == slurp(p2));

    std::ofstream(dir / "bad.csv") << "wrong,header\n";
    CHECK_THROWS_AS(read_records_csv((dir / "bad.csv").string()), IoError);
    CHECK_THROWS_AS(read_records_csv("/nonexistent/records.csv"), IoError);
}

TEST_CASE("sweep runs the full pipeline per knob point") {
    MacroArch arch = build_macro_custom(4, {LayerSpec{4, 4, 1, true}, LayerSpec{4, 6, 2, true}},
                                        8, 2);
    auto [lat, ener] = profile(DeviceModel{}, arch, 6, 6);
    SynthSpec spec;
    spec.samples = 20;
    spec.test_samples = 10;
    spec.height = spec.width = 6;
    SynthData data = make_synthetic(spec, 3);

    const fs::path dir = temp_dir("sweep1");
    SearchConfig base = SearchConfig::desk();
    base.epochs = 4;
    base.warmup_epochs = 1;
    base.batch_size = 8;
    base.seed = 9;
    base.log_dir = dir.string();
    ChildTrainConfig child_cfg;
    child_cfg.epochs = 3;
    child_cfg.batch_size = 8;

    std::vector<LossKnobs> grid(2);
    grid[1].alpha = 0.5;

    const fs::path csv = dir / "sweep.csv";
    auto records = sweep(grid, base, arch, lat, ener, data, child_cfg, csv.string());
    REQUIRE(records.size() == 2);
    for (int i = 0; i < 2; ++i) {
        const ModelRecord& r = records[i];
        CHECK(r.model_id == i);
        CHECK(r.knobs.alpha == grid[i].alpha);
        CHECK(r.accuracy >= 0.0);
        CHECK(r.accuracy <= 1.0);
        // stored costs re-derive exactly from the tables
        ChildNet child;
        child.preset = arch.preset;
        child.choices = r.child_choices;
        auto [cl, ce_] = childnet_cost(child, lat, ener);
        CHECK(std::abs(r.latency - cl) < 1e-12);
        CHECK(std::abs(r.energy - ce_) < 1e-12);
        CHECK(fs::exists(dir / ("point_" + std::to_string(i)) / "search_log.csv"));
    }
    // the incremental CSV holds exactly the returned records
    auto loaded = read_records_csv(csv.string());
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].child_choices == records[0].child_choices);
    CHECK(loaded[1].latency == records[1].latency);

    // identical grid + seed -> byte-identical CSV
    const fs::path dir2 = temp_dir("sweep2");
    SearchConfig base2 = base;
    base2.log_dir = dir2.string();
    const fs::path csv2 = dir2 / "sweep.csv";
    sweep(grid, base2, arch, lat, ener, data, child_cfg, csv2.string());
    CHECK(slurp(csv) == slurp(csv2));

    CHECK_THROWS_AS(sweep({}, base, arch, lat, ener, data, child_cfg, csv.string()),
                    ValidationError);
}
