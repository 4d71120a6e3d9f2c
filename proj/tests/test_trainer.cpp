#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hanna/errors.hpp"
#include "hanna/trainer.hpp"

using namespace hanna;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* name) {
    fs::path dir = fs::temp_directory_path() / "hanna_trainer_tests" / name;
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

// small arch + dataset + tables that run a search in well under a second
struct TinySetup {
    MacroArch arch;
    CostTable lat, ener;
    LabeledData data;

    TinySetup() {
        arch = build_macro_custom(4, {LayerSpec{4, 4, 1, true}, LayerSpec{4, 6, 2, true}}, 8, 2);
        std::tie(lat, ener) = profile(DeviceModel{}, arch, 6, 6);
        SynthSpec spec;
        spec.samples = 20;
        spec.height = spec.width = 6;
        data = make_synthetic(spec, 3).train;
    }
};

SearchConfig tiny_config(const fs::path& dir) {
    SearchConfig c = SearchConfig::desk();
    c.epochs = 5;
    c.warmup_epochs = 2;
    c.batch_size = 8;
    c.seed = 42;
    c.log_dir = dir.string();
    return c;
}

}  // namespace

TEST_CASE("config validation and desk defaults") {
    SearchConfig c;
    CHECK(c.epochs == 90);
    CHECK(c.warmup_epochs == 10);
    CHECK(c.batch_size == 256);
    CHECK(c.split == 0.8);
    CHECK(c.tau_init == 5.0);
    CHECK(c.tau_min == 0.1);
    c.validate();

    SearchConfig d = SearchConfig::desk();
    CHECK(d.epochs == 20);
    CHECK(d.warmup_epochs == 4);
    CHECK(d.batch_size == 64);
    d.validate();

    c.warmup_epochs = 90;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = SearchConfig{};
    c.split = 1.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = SearchConfig{};
    c.tau_min = 0.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("tau schedule endpoints and midpoint") {
    SearchConfig c;
    c.epochs = 21;
    CHECK(tau_at(0, c) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(tau_at(20, c) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(tau_at(10, c) == doctest::Approx((5.0 + 0.1) / 2).epsilon(1e-12));
    for (int e = 1; e <= 20; ++e) CHECK(tau_at(e, c) < tau_at(e - 1, c));
    CHECK_THROWS_AS(tau_at(21, c), ValidationError);
    CHECK_THROWS_AS(tau_at(-1, c), ValidationError);
}

TEST_CASE("lr schedule endpoints") {
    SearchConfig c;
    c.epochs = 11;
    CHECK(lr_at(0, c) == doctest::Approx(c.w_opt.lr).epsilon(1e-15));
    CHECK(lr_at(10, c) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(lr_at(5, c) == doctest::Approx(0.5 * c.w_opt.lr).epsilon(1e-12));
}

TEST_CASE("theta_init gives uniform probabilities") {
    MacroArch desk = build_macro("desk", 4);
    Theta theta = theta_init(desk);
    auto sm = theta.softmax_rows();
    for (int l = 0; l < desk.num_tbs(); ++l) {
        const int n = desk.num_candidates(l);
        for (int b = 0; b < n; ++b) {
            CHECK(theta.rows[l].data()[b] == 1.0);
            CHECK(sm[l][b] == doctest::Approx(1.0 / n).epsilon(1e-12));
        }
    }
}

TEST_CASE("SGD momentum matches a hand-stepped oracle") {
    Tensor p = Tensor::from({2}, {1.0, -2.0}, true);
    SgdMomentum opt({p}, 0.9, 0.01);
    double v0 = 0.0, v1 = 0.0, x0 = 1.0, x1 = -2.0;
    for (int step = 0; step < 3; ++step) {
        p.zero_grad();
        backward(sum(mul(p, p)));  // grad = 2p
        const double g0 = 2 * x0 + 0.01 * x0, g1 = 2 * x1 + 0.01 * x1;
        v0 = 0.9 * v0 + g0;
        v1 = 0.9 * v1 + g1;
        x0 -= 0.05 * v0;
        x1 -= 0.05 * v1;
        opt.step(0.05);
        CHECK(p.data()[0] == doctest::Approx(x0).epsilon(1e-14));
        CHECK(p.data()[1] == doctest::Approx(x1).epsilon(1e-14));
    }
}

TEST_CASE("Adam matches a hand-stepped oracle and preserves -inf") {
    const double inf = std::numeric_limits<double>::infinity();
    Tensor p = Tensor::from({3}, {0.5, -1.5, -inf}, true);
    const double lr = 0.01, wd = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    Adam opt({p}, lr, wd);
    double m[2] = {0, 0}, v[2] = {0, 0}, x[2] = {0.5, -1.5};
    for (int t = 1; t <= 3; ++t) {
        p.zero_grad();
        p.grad().assign(3, 0.0);
        p.grad()[0] = 0.3;
        p.grad()[1] = -0.7;
        for (int j = 0; j < 2; ++j) {
            const double g = j == 0 ? 0.3 : -0.7;
            m[j] = b1 * m[j] + (1 - b1) * g;
            v[j] = b2 * v[j] + (1 - b2) * g * g;
            const double mhat = m[j] / (1 - std::pow(b1, t));
            const double vhat = v[j] / (1 - std::pow(b2, t));
            x[j] -= lr * mhat / (std::sqrt(vhat) + eps);
            x[j] *= (1 - lr * wd);
        }
        opt.step();
        CHECK(p.data()[0] == doctest::Approx(x[0]).epsilon(1e-14));
        CHECK(p.data()[1] == doctest::Approx(x[1]).epsilon(1e-14));
        CHECK(p.data()[2] == -inf);
    }
}

TEST_CASE("theta snapshot round trip is byte identical") {
    MacroArch desk = build_macro("desk", 4);
    Theta theta = theta_init(desk);
    theta.rows[1].data()[3] = -0.123456789012345678;
    const fs::path dir = temp_dir("snapshot");
    const fs::path p1 = dir / "a.txt", p2 = dir / "b.txt";
    save_theta(theta, p1.string(), 7, 2.55);
    ThetaSnapshot snap = load_theta(p1.string());
    CHECK(snap.epoch == 7);
    CHECK(snap.tau == 2.55);
    REQUIRE(snap.theta.layers() == 6);
    for (int l = 0; l < 6; ++l) CHECK(snap.theta.rows[l].data() == theta.rows[l].data());
    save_theta(snap.theta, p2.string(), 7, 2.55);
    CHECK(slurp(p1) == slurp(p2));
    CHECK(slurp(p1).find("-inf") != std::string::npos);
}

TEST_CASE("load_theta rejects malformed snapshots") {
    const fs::path dir = temp_dir("badsnap");
    auto write = [&](const char* name, const std::string& body) {
        const fs::path p = dir / name;
        std::ofstream(p) << body;
        return p.string();
    };
    CHECK_THROWS_WITH_AS(
        load_theta(write("cols.txt", "# layers=1 blocks=9 epoch=0 tau=1\n1 2 3\n")),
        doctest::Contains(":2:"), IoError);
    CHECK_THROWS_AS(load_theta(write("hdr.txt", "layers=1\n")), IoError);
    CHECK_THROWS_AS(
        load_theta(write("val.txt", "# layers=1 blocks=9 epoch=0 tau=1\n1 2 3 4 5 x 7 8 9\n")),
        IoError);
    CHECK_THROWS_AS(load_theta((dir / "missing.txt").string()), IoError);
}

TEST_CASE("run_search structure and logging") {
    TinySetup s;
    const fs::path dir = temp_dir("run");
    SearchConfig c = tiny_config(dir);
    SearchResult r = run_search(c, s.arch, s.lat, s.ener, s.data);

    // warmup epochs log one phase, later epochs two
    REQUIRE(static_cast<int>(r.logs.size()) == c.warmup_epochs + 2 * (c.epochs - c.warmup_epochs));
    int idx = 0;
    for (int e = 0; e < c.epochs; ++e) {
        CHECK(r.logs[idx].epoch == e);
        CHECK(r.logs[idx].phase == "weight");
        CHECK(r.logs[idx].tau == doctest::Approx(tau_at(e, c)).epsilon(1e-15));
        ++idx;
        if (e >= c.warmup_epochs) {
            CHECK(r.logs[idx].epoch == e);
            CHECK(r.logs[idx].phase == "theta");
            ++idx;
        }
    }
    // every logged total re-derives from its parts
    for (const EpochLog& log : r.logs) {
        const double expect = log.stats.ce + c.knobs.alpha * std::pow(log.stats.lat, c.knobs.beta) +
                              c.knobs.gamma * std::pow(log.stats.ener, c.knobs.delta);
        CHECK(std::abs(log.stats.total - expect) < 1e-9);
        CHECK(log.stats.lat > 0.0);
        CHECK(log.stats.acc >= 0.0);
        CHECK(log.stats.acc <= 1.0);
    }

    // snapshots written every epoch; warmup snapshots equal the init
    Theta init = theta_init(s.arch);
    for (int e = 0; e < c.epochs; ++e) {
        ThetaSnapshot snap = load_theta((dir / ("theta_epoch_" + std::to_string(e) + ".txt")).string());
        CHECK(snap.epoch == e);
        if (e < c.warmup_epochs)
            for (int l = 0; l < init.layers(); ++l)
                CHECK(snap.theta.rows[l].data() == init.rows[l].data());
    }
    // theta has moved by the end
    ThetaSnapshot last =
        load_theta((dir / ("theta_epoch_" + std::to_string(c.epochs - 1) + ".txt")).string());
    bool moved = false;
    for (int l = 0; l < init.layers(); ++l)
        if (last.theta.rows[l].data() != init.rows[l].data()) moved = true;
    CHECK(moved);

    // log file matches the returned records
    const std::string log_text = slurp(dir / "search_log.csv");
    CHECK(log_text.rfind("epoch,phase,tau,ce,lat,ener,total,acc\n", 0) == 0);
    std::stringstream ss(log_text);
    std::string line;
    std::getline(ss, line);
    int rows = 0;
    while (std::getline(ss, line))
        if (!line.empty()) ++rows;
    CHECK(rows == static_cast<int>(r.logs.size()));
}

TEST_CASE("run_search is deterministic per seed") {
    TinySetup s;
    const fs::path d1 = temp_dir("det1"), d2 = temp_dir("det2"), d3 = temp_dir("det3");
    SearchConfig c1 = tiny_config(d1), c2 = tiny_config(d2), c3 = tiny_config(d3);
    c3.seed = 43;
    run_search(c1, s.arch, s.lat, s.ener, s.data);
    run_search(c2, s.arch, s.lat, s.ener, s.data);
    run_search(c3, s.arch, s.lat, s.ener, s.data);
    for (int e = 0; e < c1.epochs; ++e) {
        const std::string name = "theta_epoch_" + std::to_string(e) + ".txt";
        CHECK(slurp(d1 / name) == slurp(d2 / name));
    }
    CHECK(slurp(d1 / "search_log.csv") == slurp(d2 / "search_log.csv"));
    CHECK(slurp(d1 / "search_log.csv") != slurp(d3 / "search_log.csv"));
}

TEST_CASE("run_search rejects mismatched inputs") {
    TinySetup s;
    SearchConfig c = tiny_config(temp_dir("rej"));
    MacroArch other = build_macro("desk", 2);
    CHECK_THROWS_AS(run_search(c, other, s.lat, s.ener, s.data), ValidationError);
    LabeledData gray = s.data;
    gray.channels = 1;
    gray.pixels.resize(gray.size() * gray.sample_len());
    CHECK_THROWS_AS(run_search(c, s.arch, s.lat, s.ener, gray), ValidationError);
}
