#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace inrush {

/// Thrown when an input violates a documented precondition.
/// The CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown for failures that are not caller mistakes (I/O, malformed files).
class RuntimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kSqrt2 = std::numbers::sqrt2;

/// Nominal system frequency. Fixed; off-nominal operation is not modelled.
inline constexpr double kSystemFrequency = 50.0;

enum class ScenarioKind {
    kUnknown,
    kInrush,
    kSymmetricalInrush,
    kFault,
    kMixed,
};

inline const char* to_string(ScenarioKind kind) {
    switch (kind) {
    case ScenarioKind::kInrush: return "inrush";
    case ScenarioKind::kSymmetricalInrush: return "symmetrical_inrush";
    case ScenarioKind::kFault: return "fault";
    case ScenarioKind::kMixed: return "mixed";
    default: return "unknown";
    }
}

/// Ground truth attached to synthesized waveforms.
struct GroundTruth {
    ScenarioKind kind = ScenarioKind::kUnknown;
    /// True RMS of the fundamental (fault) component per sample.
    std::vector<double> true_rms;
    /// 1 = core unsaturated (non-inrush), 0 = inrush.
    std::vector<std::uint8_t> true_mask;
};

/// Uniformly sampled current record in per-unit.
struct Waveform {
    double fs = 2000.0;
    double t0 = 0.0;
    std::vector<double> samples;
    std::optional<GroundTruth> meta;
    std::vector<std::string> warnings;

    std::size_t size() const { return samples.size(); }
    double time_at(std::size_t k) const { return t0 + static_cast<double>(k) / fs; }
    double dt() const { return 1.0 / fs; }

    void validate() const {
        if (!(fs > 0.0) || !std::isfinite(fs)) {
            throw ValidationError("waveform: sampling rate must be positive");
        }
        if (samples.empty()) {
            throw ValidationError("waveform: samples must be non-empty");
        }
        if (meta && !meta->true_mask.empty() && meta->true_mask.size() != samples.size()) {
            throw ValidationError("waveform: ground-truth mask length differs from samples");
        }
    }

    bool has_warning(const std::string& w) const {
        for (const auto& x : warnings) {
            if (x == w) return true;
        }
        return false;
    }
};

/// Per-sample saturation labels: 1 = non-inrush, 0 = inrush.
struct LabelSequence {
    std::vector<std::uint8_t> labels;

    std::size_t size() const { return labels.size(); }
    std::size_t count_ones() const {
        std::size_t n = 0;
        for (auto v : labels) n += (v != 0);
        return n;
    }
};

/// Number of samples in `seconds` at `fs`, rejecting non-integral products.
inline std::size_t samples_in(double seconds, double fs) {
    const double n = seconds * fs;
    const double r = std::round(n);
    if (std::abs(n - r) > 1e-6 * std::max(1.0, n)) {
        throw ValidationError("duration*fs is not an integral sample count");
    }
    return static_cast<std::size_t>(r);
}

/// Uniform time grid t0 + k/fs.
inline std::vector<double> time_grid(std::size_t n, double fs, double t0 = 0.0) {
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) t[k] = t0 + static_cast<double>(k) / fs;
    return t;
}

inline double max_abs(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

inline double rms(std::span<const double> x) {
    if (x.empty()) return 0.0;
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s / static_cast<double>(x.size()));
}

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
    double w = std::remainder(a, kTwoPi);
    if (w <= -kPi) w += kTwoPi;
    return w;
}

/// Copy of samples [first, first+count) as a new waveform, meta sliced along.
inline Waveform slice(const Waveform& w, std::size_t first, std::size_t count) {
    if (first + count > w.size()) {
        throw ValidationError("slice: range exceeds waveform length");
    }
    Waveform out;
    out.fs = w.fs;
    out.t0 = w.time_at(first);
    out.samples.assign(w.samples.begin() + static_cast<std::ptrdiff_t>(first),
                       w.samples.begin() + static_cast<std::ptrdiff_t>(first + count));
    if (w.meta) {
        GroundTruth g;
        g.kind = w.meta->kind;
        auto cut = [&](const auto& v) {
            using V = std::decay_t<decltype(v)>;
            if (v.size() != w.size()) return V{};
            return V(v.begin() + static_cast<std::ptrdiff_t>(first),
                     v.begin() + static_cast<std::ptrdiff_t>(first + count));
        };
        g.true_rms = cut(w.meta->true_rms);
        g.true_mask = cut(w.meta->true_mask);
        out.meta = std::move(g);
    }
    out.warnings = w.warnings;
    return out;
}

} // namespace inrush
