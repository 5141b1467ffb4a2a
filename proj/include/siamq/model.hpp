#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "siamq/tensor.hpp"

namespace siamq {

enum class HeadKind { None, Regression, BinaryClassification };

struct EncoderConfig {
    std::size_t n_blocks = 2;       // residual blocks, 2..8
    std::size_t base_channels = 8;
    std::size_t embedding_dim = 64;
    std::size_t input_length = 1200;
    std::size_t z_dim = 128;        // projector/predictor width
    HeadKind head = HeadKind::None;

    void validate() const {
        if (n_blocks < 2 || n_blocks > 8)
            throw DataError("n_blocks outside {2..8}");
        if (embedding_dim < 8) throw DataError("embedding_dim < 8");
        if (base_channels == 0 || input_length == 0 || z_dim == 0)
            throw DataError("invalid encoder config");
        if (z_dim % 4 != 0) throw DataError("z_dim must be divisible by 4");
    }

    // Output channels of block i (doubling every 2 blocks).
    std::size_t block_channels(std::size_t i) const {
        return base_channels << (i / 2);
    }
    std::size_t final_channels() const { return block_channels(n_blocks - 1); }
    std::size_t head_outputs() const {
        return head == HeadKind::BinaryClassification ? 2 : 1;
    }
};

// Named parameter tensors in a fixed, deterministic order. The order is the
// checkpoint serialization order and the optimizer traversal order.
template <typename T>
struct ModelBundleT {
    EncoderConfig config;
    std::vector<std::string> names;
    std::vector<ad::TensorT<T>> tensors;

    ad::TensorT<T>& at(const std::string& name) {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return tensors[i];
        throw DataError("unknown parameter: " + name);
    }
    const ad::TensorT<T>& at(const std::string& name) const {
        return const_cast<ModelBundleT*>(this)->at(name);
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& t : tensors) n += t.size();
        return n;
    }

    template <typename U>
    ModelBundleT<U> cast() const {
        ModelBundleT<U> out;
        out.config = config;
        out.names = names;
        for (const auto& t : tensors) out.tensors.push_back(t.template cast<U>());
        return out;
    }
};

using ModelBundle = ModelBundleT<float>;

namespace detail {

// Stem: conv k=7 stride 2. Blocks: conv k=3 stride 2 / conv k=3 stride 1 with
// a 1x1 stride-2 skip projection.
constexpr std::size_t kStemKernel = 7;
constexpr std::size_t kBlockKernel = 3;

template <typename T>
void push_param(ModelBundleT<T>& m, const std::string& name,
                std::vector<std::size_t> shape) {
    m.names.push_back(name);
    m.tensors.emplace_back(std::move(shape));
}

}  // namespace detail

// Allocates the full parameter set (encoder + projector + predictor + head)
// with He-normal weight init and zero biases, seeded and order-deterministic.
template <typename T>
ModelBundleT<T> init_model(const EncoderConfig& config, std::uint64_t seed) {
    config.validate();
    ModelBundleT<T> m;
    m.config = config;

    using detail::push_param;
    push_param(m, "stem.w", {config.base_channels, 1, detail::kStemKernel});
    push_param(m, "stem.b", {config.base_channels});
    std::size_t cin = config.base_channels;
    for (std::size_t i = 0; i < config.n_blocks; ++i) {
        const std::size_t cout = config.block_channels(i);
        const std::string p = "block" + std::to_string(i) + ".";
        push_param(m, p + "conv1.w", {cout, cin, detail::kBlockKernel});
        push_param(m, p + "conv1.b", {cout});
        push_param(m, p + "conv2.w", {cout, cout, detail::kBlockKernel});
        push_param(m, p + "conv2.b", {cout});
        push_param(m, p + "skip.w", {cout, cin, 1});
        push_param(m, p + "skip.b", {cout});
        cin = cout;
    }
    push_param(m, "fc.w", {config.embedding_dim, cin});
    push_param(m, "fc.b", {config.embedding_dim});

    push_param(m, "proj.fc1.w", {config.z_dim, config.embedding_dim});
    push_param(m, "proj.fc1.b", {config.z_dim});
    push_param(m, "proj.fc2.w", {config.z_dim, config.z_dim});
    push_param(m, "proj.fc2.b", {config.z_dim});

    const std::size_t bottleneck = config.z_dim / 4;
    push_param(m, "pred.fc1.w", {bottleneck, config.z_dim});
    push_param(m, "pred.fc1.b", {bottleneck});
    push_param(m, "pred.fc2.w", {config.z_dim, bottleneck});
    push_param(m, "pred.fc2.b", {config.z_dim});

    if (config.head != HeadKind::None) {
        push_param(m, "head.w", {config.head_outputs(), config.embedding_dim});
        push_param(m, "head.b", {config.head_outputs()});
    }

    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < m.names.size(); ++i) {
        auto& t = m.tensors[i];
        if (m.names[i].ends_with(".b")) continue;  // biases stay zero
        // fan_in = product of all dims but the first (conv: cin*k, fc: in)
        const std::size_t fan_in = t.size() / t.shape[0];
        std::normal_distribution<double> dist(
            0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
        for (auto& v : t.data) v = static_cast<T>(dist(rng));
    }
    return m;
}

// Registers every parameter as a graph node; the map keys match bundle names.
template <typename T>
std::unordered_map<std::string, int> register_params(ad::GraphT<T>& g,
                                                     const ModelBundleT<T>& m) {
    std::unordered_map<std::string, int> ids;
    for (std::size_t i = 0; i < m.names.size(); ++i)
        ids[m.names[i]] = g.param(m.tensors[i]);
    return ids;
}

template <typename T>
using ParamIds = std::unordered_map<std::string, int>;

// h = E(x): stem conv -> residual blocks -> global average pool -> affine.
// x is [B, 1, input_length]; h is [B, embedding_dim].
template <typename T>
int encode(ad::GraphT<T>& g, const ParamIds<T>& ids, const EncoderConfig& cfg,
           int x) {
    const auto& xs = g.shape(x);
    if (xs.size() != 3 || xs[1] != 1 || xs[2] != cfg.input_length)
        throw DataError("encode: input shape mismatch");
    int h = g.conv1d(x, ids.at("stem.w"), ids.at("stem.b"), 2,
                     detail::kStemKernel / 2);
    h = g.relu(g.channel_norm(h));
    for (std::size_t i = 0; i < cfg.n_blocks; ++i) {
        const std::string p = "block" + std::to_string(i) + ".";
        int y = g.conv1d(h, ids.at(p + "conv1.w"), ids.at(p + "conv1.b"), 2,
                         detail::kBlockKernel / 2);
        y = g.relu(g.channel_norm(y));
        y = g.conv1d(y, ids.at(p + "conv2.w"), ids.at(p + "conv2.b"), 1,
                     detail::kBlockKernel / 2);
        y = g.channel_norm(y);
        const int skip = g.conv1d(h, ids.at(p + "skip.w"), ids.at(p + "skip.b"), 2, 0);
        h = g.relu(g.add(y, skip));
    }
    h = g.global_avg_pool(h);
    return g.linear(h, ids.at("fc.w"), ids.at("fc.b"));
}

// Per-row normalization of a [B, d] activation: channel_norm on a [B, d, 1]
// view.
template <typename T>
int norm_rows(ad::GraphT<T>& g, int x) {
    const auto s = g.shape(x);
    if (s.size() != 2) throw DataError("norm_rows: rank mismatch");
    return g.reshape(g.channel_norm(g.reshape(x, {s[0], s[1], 1})), s);
}

// z = P(h): affine -> norm -> relu -> affine to z_dim.
template <typename T>
int project(ad::GraphT<T>& g, const ParamIds<T>& ids, int h) {
    int z = g.linear(h, ids.at("proj.fc1.w"), ids.at("proj.fc1.b"));
    z = g.relu(norm_rows(g, z));
    return g.linear(z, ids.at("proj.fc2.w"), ids.at("proj.fc2.b"));
}

// p = D(z): bottleneck z_dim -> z_dim/4 -> relu -> z_dim.
template <typename T>
int predict(ad::GraphT<T>& g, const ParamIds<T>& ids, int z) {
    int p = g.linear(z, ids.at("pred.fc1.w"), ids.at("pred.fc1.b"));
    p = g.relu(p);
    return g.linear(p, ids.at("pred.fc2.w"), ids.at("pred.fc2.b"));
}

// Single affine task head on h.
template <typename T>
int head_forward(ad::GraphT<T>& g, const ParamIds<T>& ids,
                 const EncoderConfig& cfg, int h) {
    if (cfg.head == HeadKind::None) throw DataError("model has no task head");
    return g.linear(h, ids.at("head.w"), ids.at("head.b"));
}

}  // namespace siamq
