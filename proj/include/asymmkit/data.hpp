#pragma once

// Dataset ingestion: a seeded synthetic set (Gaussian images whose per-class
// channel means differ, so a capable model can memorize them with zero
// downloads) and the classic 3073-byte-record binary image format
// (1 label byte + 3x32x32 channel-planar pixels per record).

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "asymmkit/rng.hpp"
#include "asymmkit/tensor.hpp"

namespace asymmkit {

struct Dataset {
    int n = 0, c = 0, h = 0, w = 0;
    int classes = 0;
    std::vector<float> images;  // n * c * h * w, NCHW
    std::vector<int> labels;

    template <typename T>
    Tensor<T> batch(int start, int count) const {
        if (start < 0 || count <= 0 || start + count > n)
            throw std::out_of_range("dataset: batch range out of bounds");
        Tensor<T> out(Shape{count, c, h, w});
        const std::size_t per = static_cast<std::size_t>(c) * h * w;
        for (int i = 0; i < count; ++i) {
            const float* src = images.data() + static_cast<std::size_t>(start + i) * per;
            T* dst = out.data() + static_cast<std::size_t>(i) * per;
            for (std::size_t j = 0; j < per; ++j) dst[j] = static_cast<T>(src[j]);
        }
        return out;
    }

    std::vector<int> batch_labels(int start, int count) const {
        return {labels.begin() + start, labels.begin() + start + count};
    }
};

// Label of sample i is i % classes; image = per-(class, channel) mean shift
// plus N(0, 0.25^2) pixel noise. All draws come from the one seed: class
// means first, then pixels in sample order.
inline Dataset make_synthetic(int count, int classes, int resolution, std::uint64_t seed) {
    if (count <= 0 || classes < 2 || resolution < 8)
        throw std::invalid_argument("synthetic dataset: bad parameters");
    Dataset d;
    d.n = count;
    d.c = 3;
    d.h = d.w = resolution;
    d.classes = classes;
    Rng rng(seed);
    std::vector<float> means(static_cast<std::size_t>(classes) * 3);
    for (float& m : means) m = static_cast<float>(rng.uniform(-1.0, 1.0));
    d.images.resize(static_cast<std::size_t>(count) * 3 * resolution * resolution);
    d.labels.resize(count);
    std::size_t at = 0;
    for (int i = 0; i < count; ++i) {
        const int label = i % classes;
        d.labels[i] = label;
        for (int ch = 0; ch < 3; ++ch) {
            const float mu = means[static_cast<std::size_t>(label) * 3 + ch];
            for (int p = 0; p < resolution * resolution; ++p)
                d.images[at++] = mu + 0.25f * static_cast<float>(rng.normal());
        }
    }
    return d;
}

// Binary records: 1 label byte, then 3072 pixel bytes (channel-planar
// 3x32x32). Pixels normalize to (byte/255 - mean_c) / std_c with the usual
// per-channel constants.
inline Dataset load_cifar10_binary(const std::string& path) {
    static constexpr int record = 3073;
    static constexpr float kMean[3] = {0.4914f, 0.4822f, 0.4465f};
    static constexpr float kStd[3] = {0.2470f, 0.2435f, 0.2616f};

    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw std::runtime_error("cannot open dataset file " + path);
    const std::streamoff size = f.tellg();
    if (size <= 0 || size % record != 0)
        throw std::runtime_error("dataset file " + path + ": size " + std::to_string(size) +
                                 " is not a multiple of " + std::to_string(record));
    f.seekg(0);

    Dataset d;
    d.n = static_cast<int>(size / record);
    d.c = 3;
    d.h = d.w = 32;
    d.classes = 10;
    d.images.resize(static_cast<std::size_t>(d.n) * 3072);
    d.labels.resize(d.n);
    std::vector<unsigned char> buf(record);
    for (int i = 0; i < d.n; ++i) {
        if (!f.read(reinterpret_cast<char*>(buf.data()), record))
            throw std::runtime_error("dataset file " + path + ": truncated record " +
                                     std::to_string(i));
        if (buf[0] > 9)
            throw std::runtime_error("dataset file " + path + ": label " +
                                     std::to_string(int(buf[0])) + " out of range");
        d.labels[i] = buf[0];
        float* out = d.images.data() + static_cast<std::size_t>(i) * 3072;
        for (int ch = 0; ch < 3; ++ch)
            for (int p = 0; p < 1024; ++p)
                out[ch * 1024 + p] =
                    (static_cast<float>(buf[1 + ch * 1024 + p]) / 255.0f - kMean[ch]) /
                    kStd[ch];
    }
    return d;
}

// "synthetic:<count>" (seed supplied by caller) or "cifar10:<path>".
inline Dataset load_dataset(const std::string& source, int classes, int resolution,
                            std::uint64_t seed) {
    const auto colon = source.find(':');
    const std::string kind = source.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : source.substr(colon + 1);
    if (kind == "synthetic") {
        if (arg.empty()) throw std::invalid_argument("synthetic source needs a sample count");
        return make_synthetic(std::stoi(arg), classes, resolution, seed);
    }
    if (kind == "cifar10") {
        if (arg.empty()) throw std::invalid_argument("cifar10 source needs a file path");
        return load_cifar10_binary(arg);
    }
    throw std::invalid_argument("unknown dataset source '" + source + "'");
}

}  // namespace asymmkit
