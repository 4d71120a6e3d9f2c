#include "hanna/dataset.hpp"

#include <cstring>
#include <fstream>

#include "hanna/errors.hpp"
#include "hanna/rng.hpp"

namespace hanna {

void LabeledData::validate() const {
    if (pixels.size() != sample_len() * labels.size())
        throw ValidationError("dataset: " + std::to_string(labels.size()) + " labels but " +
                              std::to_string(pixels.size()) + " pixel values");
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] < 0 || labels[i] >= num_classes)
            throw ValidationError("dataset: label " + std::to_string(labels[i]) + " at sample " +
                                  std::to_string(i) + " out of range");
}

Tensor LabeledData::batch(const std::vector<int>& indices) const {
    const std::size_t len = sample_len();
    std::vector<double> out(indices.size() * len);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const int idx = indices[i];
        if (idx < 0 || idx >= size())
            throw ValidationError("dataset: sample index " + std::to_string(idx) + " out of range");
        std::copy_n(pixels.begin() + static_cast<std::size_t>(idx) * len, len,
                    out.begin() + i * len);
    }
    return Tensor::from({static_cast<int>(indices.size()), channels, height, width},
                        std::move(out));
}

std::vector<int> LabeledData::batch_labels(const std::vector<int>& indices) const {
    std::vector<int> out(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) out[i] = labels[indices[i]];
    return out;
}

SynthData make_synthetic(const SynthSpec& spec, std::uint64_t seed) {
    if (spec.classes < 2) throw ValidationError("synthetic: need at least 2 classes");
    if (spec.samples < spec.classes || spec.test_samples < spec.classes)
        throw ValidationError("synthetic: need at least one sample per class per split");
    Rng rng(seed);
    const std::size_t len =
        static_cast<std::size_t>(spec.channels) * spec.height * spec.width;
    std::vector<std::vector<double>> protos(spec.classes, std::vector<double>(len));
    for (auto& p : protos)
        for (double& v : p) v = rng.normal();

    auto fill = [&](LabeledData& d, int n) {
        d.channels = spec.channels;
        d.height = spec.height;
        d.width = spec.width;
        d.num_classes = spec.classes;
        d.pixels.resize(static_cast<std::size_t>(n) * len);
        d.labels.resize(n);
        for (int i = 0; i < n; ++i) {
            const int k = i % spec.classes;
            d.labels[i] = k;
            for (std::size_t j = 0; j < len; ++j)
                d.pixels[i * len + j] = protos[k][j] + spec.noise * rng.normal();
        }
    };
    SynthData data;
    fill(data.train, spec.samples);
    fill(data.test, spec.test_samples);
    return data;
}

namespace {
constexpr char kRawMagic[8] = {'H', 'A', 'N', 'N', 'R', 'A', 'W', '1'};
}

void save_raw(const LabeledData& data, const std::string& path) {
    data.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kRawMagic, sizeof(kRawMagic));
    const std::int32_t header[5] = {data.size(), data.channels, data.height, data.width,
                                    data.num_classes};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    std::vector<std::int32_t> labels(data.labels.begin(), data.labels.end());
    out.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size() * sizeof(std::int32_t)));
    out.write(reinterpret_cast<const char*>(data.pixels.data()),
              static_cast<std::streamsize>(data.pixels.size() * sizeof(double)));
    if (!out) throw IoError("write failed for '" + path + "'");
}

LabeledData load_raw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kRawMagic, sizeof(magic)) != 0)
        throw IoError(path + ": not a HANNRAW1 file");
    std::int32_t header[5];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in) throw IoError(path + ": truncated header");
    LabeledData data;
    const std::int32_t n = header[0];
    data.channels = header[1];
    data.height = header[2];
    data.width = header[3];
    data.num_classes = header[4];
    if (n < 1 || data.channels < 1 || data.height < 1 || data.width < 1 || data.num_classes < 2)
        throw IoError(path + ": bad header dimensions");
    std::vector<std::int32_t> labels(n);
    in.read(reinterpret_cast<char*>(labels.data()),
            static_cast<std::streamsize>(labels.size() * sizeof(std::int32_t)));
    data.labels.assign(labels.begin(), labels.end());
    data.pixels.resize(static_cast<std::size_t>(n) * data.sample_len());
    in.read(reinterpret_cast<char*>(data.pixels.data()),
            static_cast<std::streamsize>(data.pixels.size() * sizeof(double)));
    if (!in) throw IoError(path + ": truncated data");
    data.validate();
    return data;
}

std::pair<LabeledData, LabeledData> split_dataset(const LabeledData& data, double split,
                                                  std::uint64_t seed) {
    if (!(split > 0.0 && split < 1.0))
        throw ValidationError("split: fraction must be in (0,1), got " + std::to_string(split));
    data.validate();
    std::vector<std::vector<int>> by_class(data.num_classes);
    for (int i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);

    Rng rng(seed);
    std::vector<int> first_idx, second_idx;
    for (int k = 0; k < data.num_classes; ++k) {
        auto& idx = by_class[k];
        if (idx.size() < 2)
            throw ValidationError("split: class " + std::to_string(k) +
                                  " has fewer than 2 samples");
        rng.shuffle(idx);
        int n_first = static_cast<int>(split * static_cast<double>(idx.size()) + 0.5);
        n_first = std::max(1, std::min(n_first, static_cast<int>(idx.size()) - 1));
        first_idx.insert(first_idx.end(), idx.begin(), idx.begin() + n_first);
        second_idx.insert(second_idx.end(), idx.begin() + n_first, idx.end());
    }

    auto gather = [&](const std::vector<int>& idx) {
        LabeledData d;
        d.channels = data.channels;
        d.height = data.height;
        d.width = data.width;
        d.num_classes = data.num_classes;
        const std::size_t len = data.sample_len();
        d.pixels.resize(idx.size() * len);
        d.labels.resize(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            d.labels[i] = data.labels[idx[i]];
            std::copy_n(data.pixels.begin() + static_cast<std::size_t>(idx[i]) * len, len,
                        d.pixels.begin() + i * len);
        }
        return d;
    };
    return {gather(first_idx), gather(second_idx)};
}

}  // namespace hanna
