#pragma once

// Per-sample inrush segmentation network: five same-padded convolutions with
// two attention blocks and a sigmoid head. Output length equals input length.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "inrush/labeling.hpp"
#include "inrush/nn.hpp"
#include "inrush/util.hpp"
#include "inrush/waveform.hpp"

namespace inrush {

inline constexpr const char* kArchVersion = "afcn-1d/1";

using Layer = std::variant<nn::Conv1d, nn::Cbam>;

struct ArchSpec {
    std::vector<int> channels{1, 16, 32, 32, 16, 1};  ///< conv i maps channels[i] -> channels[i+1]
    int kernel = 3;
    /// Attention blocks follow these conv indices (0-based).
    std::vector<int> cbam_after{1, 3};
    int cbam_reduction = 4;
    int cbam_spatial_kernel = 7;

    void validate() const {
        if (channels.size() < 2 || channels.front() != 1 || channels.back() != 1) {
            throw ValidationError("arch: channel plan must start and end with 1");
        }
        if (kernel < 1 || kernel % 2 == 0) throw ValidationError("arch: kernel must be odd");
        if (cbam_spatial_kernel < 1 || cbam_spatial_kernel % 2 == 0) {
            throw ValidationError("arch: spatial kernel must be odd");
        }
        if (cbam_reduction < 1) throw ValidationError("arch: reduction must be >= 1");
        for (int c : channels) {
            if (c < 1) throw ValidationError("arch: channel counts must be >= 1");
        }
        const int n_conv = static_cast<int>(channels.size()) - 1;
        for (int i : cbam_after) {
            if (i < 0 || i >= n_conv - 1) throw ValidationError("arch: attention position out of range");
        }
    }

    /// Same convolution stack without attention.
    ArchSpec plain() const {
        ArchSpec a = *this;
        a.cbam_after.clear();
        return a;
    }
};

struct SegmenterModel {
    std::string arch_version = kArchVersion;
    ArchSpec arch;
    std::vector<Layer> layers;
    std::vector<double> weights;
    std::uint64_t seed = 0;

    std::size_t param_count() const { return weights.size(); }

    /// Shortest accepted input: the widest kernel in the stack.
    int min_length() const {
        int m = 1;
        for (const auto& l : layers) {
            std::visit(
                [&](const auto& x) {
                    if constexpr (std::is_same_v<std::decay_t<decltype(x)>, nn::Conv1d>) {
                        m = std::max(m, x.kernel);
                    } else {
                        m = std::max(m, x.spatial_kernel);
                    }
                },
                l);
        }
        return m;
    }

    int conv_count() const {
        int n = 0;
        for (const auto& l : layers) n += std::holds_alternative<nn::Conv1d>(l);
        return n;
    }
    int cbam_count() const { return static_cast<int>(layers.size()) - conv_count(); }
    bool has_attention() const { return cbam_count() > 0; }

    /// Mask over `weights`: 1 for kernel weights (subject to L2), 0 for biases.
    std::vector<std::uint8_t> weight_mask() const {
        std::vector<std::uint8_t> m(weights.size(), 0);
        auto mark = [&](std::size_t off, std::size_t n) { std::fill_n(m.begin() + static_cast<long>(off), n, 1); };
        for (const auto& l : layers) {
            if (const auto* c = std::get_if<nn::Conv1d>(&l)) {
                mark(c->offset, c->weight_count());
            } else {
                for (const auto& s : std::get<nn::Cbam>(l).weight_slices()) mark(s.offset, s.count);
            }
        }
        return m;
    }
};

/// Lays out the layers of `arch` with zero weights.
inline SegmenterModel build_model(const ArchSpec& arch) {
    arch.validate();
    SegmenterModel m;
    m.arch = arch;
    std::size_t off = 0;
    const int n_conv = static_cast<int>(arch.channels.size()) - 1;
    for (int i = 0; i < n_conv; ++i) {
        nn::Conv1d c;
        c.in_ch = arch.channels[i];
        c.out_ch = arch.channels[i + 1];
        c.kernel = arch.kernel;
        c.act = i == n_conv - 1 ? nn::Activation::kSigmoid : nn::Activation::kElu;
        c.offset = off;
        off += c.param_count();
        m.layers.emplace_back(c);
        if (std::find(arch.cbam_after.begin(), arch.cbam_after.end(), i) != arch.cbam_after.end()) {
            nn::Cbam b;
            b.channels = c.out_ch;
            b.reduction = arch.cbam_reduction;
            b.spatial_kernel = arch.cbam_spatial_kernel;
            b.offset = off;
            off += b.param_count();
            m.layers.emplace_back(b);
        }
    }
    m.weights.assign(off, 0.0);
    return m;
}

/// Uniform fan-in scaled initialization, U(-sqrt(6/fan_in), +sqrt(6/fan_in)); biases zero.
inline SegmenterModel init_model(const ArchSpec& arch, std::uint64_t seed) {
    SegmenterModel m = build_model(arch);
    m.seed = seed;
    std::mt19937_64 rng(mix_seed(seed, 0x1417ULL));
    auto fill = [&](std::size_t off, std::size_t n, std::size_t fan_in) {
        const double lim = std::sqrt(6.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-lim, lim);
        for (std::size_t k = 0; k < n; ++k) m.weights[off + k] = u(rng);
    };
    for (const auto& l : m.layers) {
        if (const auto* c = std::get_if<nn::Conv1d>(&l)) {
            fill(c->offset, c->weight_count(), c->fan_in());
        } else {
            for (const auto& s : std::get<nn::Cbam>(l).weight_slices()) fill(s.offset, s.count, s.fan_in);
        }
    }
    return m;
}

/// Per-layer caches for one forward pass.
struct ForwardTrace {
    std::vector<std::variant<nn::Conv1d::Cache, nn::Cbam::Cache>> caches;
};

namespace detail {

inline void require_length(const SegmenterModel& m, std::size_t n) {
    if (n < static_cast<std::size_t>(m.min_length())) throw ValidationError("input too short");
}

inline nn::Tensor forward_impl(const SegmenterModel& m, std::span<const double> weights,
                               std::span<const double> x, ForwardTrace* trace) {
    require_length(m, x.size());
    nn::Tensor t(1, static_cast<int>(x.size()));
    std::copy(x.begin(), x.end(), t.data.begin());
    if (trace) trace->caches.clear();
    for (const auto& layer : m.layers) {
        if (const auto* c = std::get_if<nn::Conv1d>(&layer)) {
            nn::Conv1d::Cache cache;
            t = c->forward(weights, t, trace ? &cache : nullptr);
            if (trace) trace->caches.emplace_back(std::move(cache));
        } else {
            nn::Cbam::Cache cache;
            t = std::get<nn::Cbam>(layer).forward(weights, t, trace ? &cache : nullptr);
            if (trace) trace->caches.emplace_back(std::move(cache));
        }
    }
    return t;
}

/// Accumulates d(loss)/d(weights) into `grad` given d(loss)/d(output).
inline void backward_impl(const SegmenterModel& m, std::span<const double> weights,
                          const ForwardTrace& trace, std::span<const double> dout,
                          std::span<double> grad) {
    nn::Tensor d(1, static_cast<int>(dout.size()));
    std::copy(dout.begin(), dout.end(), d.data.begin());
    for (std::size_t i = m.layers.size(); i-- > 0;) {
        const auto& layer = m.layers[i];
        if (const auto* c = std::get_if<nn::Conv1d>(&layer)) {
            d = c->backward(weights, std::get<nn::Conv1d::Cache>(trace.caches[i]), d, grad, i > 0);
        } else {
            d = std::get<nn::Cbam>(layer).backward(weights, std::get<nn::Cbam::Cache>(trace.caches[i]),
                                                   d, grad);
        }
    }
}

} // namespace detail

/// Per-sample probability of the non-inrush class.
inline std::vector<double> forward(const SegmenterModel& m, std::span<const double> i_norm) {
    return detail::forward_impl(m, m.weights, i_norm, nullptr).data;
}

/// Thresholds probabilities at 0.5; a tie maps to 1.
inline LabelSequence threshold_labels(std::span<const double> prob) {
    LabelSequence s;
    s.labels.resize(prob.size());
    for (std::size_t k = 0; k < prob.size(); ++k) s.labels[k] = prob[k] >= 0.5 ? 1 : 0;
    return s;
}

inline LabelSequence predict_labels(const SegmenterModel& m, std::span<const double> i_norm) {
    return threshold_labels(forward(m, i_norm));
}

/// Normalizes a raw current window and segments it. An all-zero window has
/// nothing to segment and is labeled non-inrush throughout.
inline LabelSequence segment(const SegmenterModel& m, std::span<const double> current) {
    std::vector<double> x(current.begin(), current.end());
    if (max_abs(x) == 0.0) {
        LabelSequence s;
        s.labels.assign(x.size(), 1);
        return s;
    }
    normalize_in_place(x);
    return predict_labels(m, x);
}

inline double mse_loss(std::span<const double> target, std::span<const double> prob) {
    if (target.size() != prob.size()) throw ValidationError("mse: length mismatch");
    if (target.empty()) throw ValidationError("mse: empty sequence");
    double s = 0.0;
    for (std::size_t k = 0; k < target.size(); ++k) {
        const double d = target[k] - prob[k];
        s += d * d;
    }
    return s / static_cast<double>(target.size());
}

inline double mse_loss(const LabelSequence& s, std::span<const double> prob) {
    std::vector<double> t(s.labels.begin(), s.labels.end());
    return mse_loss(t, prob);
}

// --- persistence -----------------------------------------------------------

inline nlohmann::ordered_json arch_to_json(const ArchSpec& a) {
    nlohmann::ordered_json j;
    j["channels"] = a.channels;
    j["kernel"] = a.kernel;
    j["cbam_after"] = a.cbam_after;
    j["cbam_reduction"] = a.cbam_reduction;
    j["cbam_spatial_kernel"] = a.cbam_spatial_kernel;
    return j;
}

inline ArchSpec arch_from_json(const nlohmann::json& j) {
    ArchSpec a;
    a.channels = j.at("channels").get<std::vector<int>>();
    a.kernel = j.at("kernel").get<int>();
    a.cbam_after = j.at("cbam_after").get<std::vector<int>>();
    a.cbam_reduction = j.at("cbam_reduction").get<int>();
    a.cbam_spatial_kernel = j.at("cbam_spatial_kernel").get<int>();
    return a;
}

inline std::string weights_blob(const std::vector<double>& w) {
    std::string out(w.size() * 8, '\0');
    for (std::size_t k = 0; k < w.size(); ++k) {
        const auto bits = std::bit_cast<std::uint64_t>(w[k]);
        for (int b = 0; b < 8; ++b) out[k * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
    }
    return out;
}

/// One JSON header line, then the little-endian float64 weights.
inline std::string serialize_model(const SegmenterModel& m, const nlohmann::ordered_json& extra = {}) {
    const std::string blob = weights_blob(m.weights);
    nlohmann::ordered_json h;
    h["format"] = "inrush-model/1";
    h["arch_version"] = m.arch_version;
    h["arch"] = arch_to_json(m.arch);
    h["seed"] = m.seed;
    h["n_params"] = m.weights.size();
    h["weights_hash"] = fnv1a_hex(blob);
    if (!extra.is_null()) h["info"] = extra;
    return h.dump() + "\n" + blob;
}

inline SegmenterModel deserialize_model(const std::string& bytes) {
    const auto nl = bytes.find('\n');
    if (nl == std::string::npos) throw RuntimeError("model file: missing header");
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(bytes.substr(0, nl));
    } catch (const nlohmann::json::exception& e) {
        throw RuntimeError(std::string("model file: malformed header: ") + e.what());
    }
    if (h.value("format", "") != "inrush-model/1") throw RuntimeError("model file: unknown format");
    const std::string ver = h.value("arch_version", "");
    if (ver != kArchVersion) {
        throw RuntimeError("model file: arch_version '" + ver + "' does not match expected '" +
                           kArchVersion + "'");
    }
    SegmenterModel m;
    try {
        m = build_model(arch_from_json(h.at("arch")));
        m.seed = h.at("seed").get<std::uint64_t>();
        if (h.at("n_params").get<std::size_t>() != m.weights.size()) {
            throw RuntimeError("model file: parameter count does not match architecture");
        }
    } catch (const nlohmann::json::exception& e) {
        throw RuntimeError(std::string("model file: ") + e.what());
    } catch (const ValidationError& e) {
        throw RuntimeError(std::string("model file: ") + e.what());
    }
    const std::string blob = bytes.substr(nl + 1);
    if (blob.size() != m.weights.size() * 8) {
        throw RuntimeError("model file: weight blob truncated (" + std::to_string(blob.size()) +
                           " of " + std::to_string(m.weights.size() * 8) + " bytes)");
    }
    if (h.value("weights_hash", "") != fnv1a_hex(blob)) throw RuntimeError("model file: weight hash mismatch");
    for (std::size_t k = 0; k < m.weights.size(); ++k) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) {
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(blob[k * 8 + b])) << (8 * b);
        }
        m.weights[k] = std::bit_cast<double>(bits);
    }
    return m;
}

inline void save_model(const SegmenterModel& m, const std::string& path,
                       const nlohmann::ordered_json& extra = {}) {
    write_file(path, serialize_model(m, extra));
}

inline SegmenterModel load_model(const std::string& path) { return deserialize_model(read_file(path)); }

} // namespace inrush
