#include "hanna/oracle.hpp"

#include <cmath>

#include "hanna/errors.hpp"

namespace hanna {

long long MicroSpace::total_architectures() const {
    long long total = 1;
    for (int l = 0; l < num_layers; ++l) total *= candidates;
    return total;
}

void MicroSpace::validate() const {
    if (num_layers < 1 || num_layers > 4)
        throw ValidationError("micro space: layers must be in [1,4], got " +
                              std::to_string(num_layers));
    if (candidates < 1 || candidates > 4)
        throw ValidationError("micro space: candidates must be in [1,4], got " +
                              std::to_string(candidates));
    auto check = [&](const std::vector<std::vector<double>>& t, const char* name) {
        if (static_cast<int>(t.size()) != num_layers)
            throw ValidationError(std::string("micro space: ") + name + " table has " +
                                  std::to_string(t.size()) + " rows");
        for (const auto& row : t)
            if (static_cast<int>(row.size()) != candidates)
                throw ValidationError(std::string("micro space: ") + name +
                                      " row width mismatch");
    };
    check(lat, "latency");
    check(ener, "energy");
    if (!ce.empty() && static_cast<long long>(ce.size()) != total_architectures())
        throw ValidationError("micro space: ce proxy list has " + std::to_string(ce.size()) +
                              " entries for " + std::to_string(total_architectures()) +
                              " architectures");
}

long long MicroSpace::arch_id(const std::vector<int>& choices) const {
    if (static_cast<int>(choices.size()) != num_layers)
        throw ValidationError("micro space: " + std::to_string(choices.size()) +
                              " choices for " + std::to_string(num_layers) + " layers");
    long long id = 0;
    for (int c : choices) {
        if (c < 0 || c >= candidates)
            throw ValidationError("micro space: choice " + std::to_string(c) +
                                  " out of range [0," + std::to_string(candidates) + ")");
        id = id * candidates + c;
    }
    return id;
}

std::vector<EnumEntry> enumerate_space(const MicroSpace& space) {
    space.validate();
    const long long total = space.total_architectures();
    std::vector<EnumEntry> out;
    out.reserve(total);
    std::vector<int> choices(space.num_layers, 0);
    for (long long id = 0; id < total; ++id) {
        long long rem = id;
        for (int l = space.num_layers - 1; l >= 0; --l) {
            choices[l] = static_cast<int>(rem % space.candidates);
            rem /= space.candidates;
        }
        EnumEntry e;
        e.choices = choices;
        for (int l = 0; l < space.num_layers; ++l) {
            e.lat += space.lat[l][choices[l]];
            e.ener += space.ener[l][choices[l]];
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<std::vector<double>> softmax_rows_plain(const std::vector<std::vector<double>>& theta) {
    std::vector<std::vector<double>> out(theta.size());
    for (std::size_t l = 0; l < theta.size(); ++l) {
        const auto& row = theta[l];
        double mx = row[0];
        for (double v : row) mx = std::max(mx, v);
        double denom = 0.0;
        out[l].resize(row.size());
        for (std::size_t i = 0; i < row.size(); ++i) denom += std::exp(row[i] - mx);
        for (std::size_t i = 0; i < row.size(); ++i) out[l][i] = std::exp(row[i] - mx) / denom;
    }
    return out;
}

double exact_expected_loss(const std::vector<std::vector<double>>& theta, const MicroSpace& space,
                           const LossKnobs& knobs) {
    space.validate();
    knobs.validate();
    if (static_cast<int>(theta.size()) != space.num_layers)
        throw ValidationError("exact_expected_loss: theta has " + std::to_string(theta.size()) +
                              " rows for " + std::to_string(space.num_layers) + " layers");
    auto probs = softmax_rows_plain(theta);
    double expected = 0.0;
    for (const auto& entry : enumerate_space(space)) {
        double p = 1.0;
        for (int l = 0; l < space.num_layers; ++l) p *= probs[l][entry.choices[l]];
        const double ce = space.ce.empty() ? 0.0 : space.ce[space.arch_id(entry.choices)];
        expected += p * (ce + knobs.alpha * std::pow(entry.lat, knobs.beta) +
                         knobs.gamma * std::pow(std::max(entry.ener, kEnergyFloor), knobs.delta));
    }
    return expected;
}

}  // namespace hanna
