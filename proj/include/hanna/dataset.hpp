#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hanna/tensor.hpp"

namespace hanna {

struct LabeledData {
    int channels = 3;
    int height = 8;
    int width = 8;
    int num_classes = 2;
    std::vector<double> pixels;  // n * channels * height * width, row-major
    std::vector<int> labels;

    int size() const { return static_cast<int>(labels.size()); }
    std::size_t sample_len() const {
        return static_cast<std::size_t>(channels) * height * width;
    }
    Tensor batch(const std::vector<int>& indices) const;
    std::vector<int> batch_labels(const std::vector<int>& indices) const;
    void validate() const;
};

struct SynthSpec {
    int samples = 128;
    int test_samples = 64;
    int classes = 2;
    int channels = 3;
    int height = 8;
    int width = 8;
    double noise = 0.3;  // per-pixel Gaussian noise around the class prototype
};

struct SynthData {
    LabeledData train;
    LabeledData test;
};

// Seeded Gaussian class prototypes plus per-sample noise; train and test
// share the prototypes. Classes are balanced (remainder to the low ids).
SynthData make_synthetic(const SynthSpec& spec, std::uint64_t seed);

// Simple binary image container: magic, dims, int32 labels, f64 pixels.
void save_raw(const LabeledData& data, const std::string& path);
LabeledData load_raw(const std::string& path);

// Stratified, seeded, disjoint and exhaustive split; first part receives
// `split` of each class.
std::pair<LabeledData, LabeledData> split_dataset(const LabeledData& data, double split,
                                                  std::uint64_t seed);

}  // namespace hanna
