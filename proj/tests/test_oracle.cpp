#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hanna/errors.hpp"
#include "hanna/oracle.hpp"
#include "hanna/rng.hpp"

using namespace hanna;

namespace {

MicroSpace random_space(int layers, int candidates, Rng& rng, bool with_ce = true) {
    MicroSpace s;
    s.num_layers = layers;
    s.candidates = candidates;
    s.lat.assign(layers, std::vector<double>(candidates));
    s.ener.assign(layers, std::vector<double>(candidates));
    for (int l = 0; l < layers; ++l)
        for (int c = 0; c < candidates; ++c) {
            s.lat[l][c] = rng.uniform(0.1, 2.0);
            s.ener[l][c] = rng.uniform(0.1, 2.0);
        }
    if (with_ce) {
        s.ce.resize(s.total_architectures());
        for (double& v : s.ce) v = rng.uniform(0.0, 3.0);
    }
    return s;
}

std::vector<std::vector<double>> random_theta(int layers, int candidates, Rng& rng) {
    std::vector<std::vector<double>> theta(layers, std::vector<double>(candidates));
    for (auto& row : theta)
        for (double& v : row) v = rng.normal();
    return theta;
}

}  // namespace

TEST_CASE("micro space bookkeeping") {
    Rng rng(1);
    MicroSpace s = random_space(3, 3, rng);
    CHECK(s.total_architectures() == 27);
    s.validate();
    CHECK(s.arch_id({0, 0, 0}) == 0);
    CHECK(s.arch_id({0, 0, 2}) == 2);
    CHECK(s.arch_id({1, 0, 0}) == 9);
    CHECK(s.arch_id({2, 2, 2}) == 26);
    CHECK_THROWS_AS(s.arch_id({0, 0}), ValidationError);
    CHECK_THROWS_AS(s.arch_id({0, 0, 3}), ValidationError);

    MicroSpace big = random_space(4, 4, rng, false);
    CHECK(big.total_architectures() == 256);
    big.validate();
    big.num_layers = 5;
    CHECK_THROWS_AS(big.validate(), ValidationError);
    MicroSpace wide = random_space(2, 4, rng, false);
    wide.candidates = 5;
    CHECK_THROWS_AS(wide.validate(), ValidationError);
    MicroSpace bad_ce = random_space(2, 2, rng);
    bad_ce.ce.pop_back();
    CHECK_THROWS_AS(bad_ce.validate(), ValidationError);
}

TEST_CASE("enumerate_space covers everything in arch_id order") {
    Rng rng(2);
    MicroSpace s = random_space(3, 3, rng);
    auto entries = enumerate_space(s);
    REQUIRE(entries.size() == 27);
    for (long long i = 0; i < 27; ++i) {
        CHECK(s.arch_id(entries[i].choices) == i);
        double lat = 0.0, ener = 0.0;
        for (int l = 0; l < 3; ++l) {
            lat += s.lat[l][entries[i].choices[l]];
            ener += s.ener[l][entries[i].choices[l]];
        }
        CHECK(entries[i].lat == doctest::Approx(lat).epsilon(1e-15));
        CHECK(entries[i].ener == doctest::Approx(ener).epsilon(1e-15));
    }

    // 1x1 space: a single entry holding the lone cells
    MicroSpace one = random_space(1, 1, rng, false);
    auto single = enumerate_space(one);
    REQUIRE(single.size() == 1);
    CHECK(single[0].lat == one.lat[0][0]);
    CHECK(single[0].ener == one.ener[0][0]);
}

TEST_CASE("minimum latency architecture is the per-layer row minimum") {
    Rng rng(3);
    MicroSpace s = random_space(4, 4, rng, false);
    auto entries = enumerate_space(s);
    const auto best = std::min_element(entries.begin(), entries.end(),
                                       [](const EnumEntry& a, const EnumEntry& b) {
                                           return a.lat < b.lat;
                                       });
    double separable = 0.0;
    for (int l = 0; l < 4; ++l)
        separable += *std::min_element(s.lat[l].begin(), s.lat[l].end());
    CHECK(best->lat == doctest::Approx(separable).epsilon(1e-15));
}

TEST_CASE("softmax_rows_plain") {
    auto sm = softmax_rows_plain({{0.0, 0.0, 0.0}, {1000.0, 0.0, 0.0}});
    for (double v : sm[0]) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(sm[1][0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sm[1][1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("exact_expected_loss on a one-hot theta") {
    Rng rng(4);
    MicroSpace s = random_space(3, 3, rng);
    LossKnobs k;
    k.alpha = 0.5;
    k.beta = 1.4;
    k.gamma = 0.3;
    k.delta = 0.8;
    std::vector<int> choices{2, 0, 1};
    std::vector<std::vector<double>> theta(3, std::vector<double>(3, 0.0));
    for (int l = 0; l < 3; ++l) theta[l][choices[l]] = 1000.0;

    const auto entry = enumerate_space(s)[s.arch_id(choices)];
    const double expect = s.ce[s.arch_id(choices)] + k.alpha * std::pow(entry.lat, k.beta) +
                          k.gamma * std::pow(entry.ener, k.delta);
    CHECK(exact_expected_loss(theta, s, k) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("exact_expected_loss under uniform theta with linear knobs") {
    Rng rng(5);
    MicroSpace s = random_space(3, 3, rng, false);
    s.ce.assign(27, 0.7);
    LossKnobs k;
    k.alpha = 1.0;
    k.gamma = 1.0;  // beta = delta = 1
    auto entries = enumerate_space(s);
    double mean = 0.0;
    for (const auto& e : entries) mean += (0.7 + e.lat + e.ener) / 27.0;
    std::vector<std::vector<double>> theta(3, std::vector<double>(3, 0.0));
    CHECK(std::abs(exact_expected_loss(theta, s, k) - mean) < 1e-12);
}

TEST_CASE("linear knobs make the relaxation exact; curved knobs bias it") {
    Rng rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        MicroSpace s = random_space(3, 3, rng, false);
        s.ce.assign(27, 0.0);
        auto theta = random_theta(3, 3, rng);
        auto probs = softmax_rows_plain(theta);

        // mean-mask expected costs
        double elat = 0.0, eener = 0.0;
        for (int l = 0; l < 3; ++l)
            for (int c = 0; c < 3; ++c) {
                elat += probs[l][c] * s.lat[l][c];
                eener += probs[l][c] * s.ener[l][c];
            }

        LossKnobs lin;
        lin.alpha = 0.6;
        lin.gamma = 0.4;
        CHECK(std::abs(exact_expected_loss(theta, s, lin) - (0.6 * elat + 0.4 * eener)) < 1e-12);

        // beta != 1: E[LAT^beta] != E[LAT]^beta in general (Jensen gap)
        LossKnobs curved;
        curved.alpha = 1.0;
        curved.beta = 2.0;
        const double exact = exact_expected_loss(theta, s, curved);
        const double relaxed = std::pow(elat, 2.0);
        CHECK(exact >= relaxed - 1e-12);  // convexity: E[X^2] >= E[X]^2
        CHECK(exact != doctest::Approx(relaxed).epsilon(1e-9));
    }
}

TEST_CASE("exact_expected_loss probabilities are a valid distribution") {
    // sum of P(a) over the enumeration is 1: expected loss of all-ones ce
    // with knobs off is exactly 1
    Rng rng(7);
    MicroSpace s = random_space(4, 3, rng, false);
    s.ce.assign(s.total_architectures(), 1.0);
    auto theta = random_theta(4, 3, rng);
    CHECK(std::abs(exact_expected_loss(theta, s, LossKnobs{}) - 1.0) < 1e-12);
}
