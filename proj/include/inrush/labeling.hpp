#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include "inrush/waveform.hpp"

namespace inrush {

/// Scales a waveform by its peak magnitude m = max|i|. Returns (scaled, m).
inline std::pair<Waveform, double> normalize(const Waveform& w) {
    w.validate();
    const double m = max_abs(w.samples);
    if (m == 0.0) throw ValidationError("degenerate zero waveform");
    Waveform out = w;
    for (auto& v : out.samples) v /= m;
    return {std::move(out), m};
}

/// In-place variant on a raw sample window; returns m.
inline double normalize_in_place(std::span<double> x) {
    const double m = max_abs(x);
    if (m == 0.0) throw ValidationError("degenerate zero waveform");
    for (auto& v : x) v /= m;
    return m;
}

/// Floating labeling threshold chosen from the ratio of the actual peak to the
/// ideal peak. The last bin is closed at 20.
inline double floating_threshold(double peak_ratio) {
    if (peak_ratio < 3.0) return 0.03;
    if (peak_ratio < 10.0) return 0.01;
    if (peak_ratio < 20.0) return 0.005;
    return 0.003;
}

namespace detail {

inline LabelSequence label_with_threshold(const Waveform& w, const Waveform& ideal, double m,
                                          double delta) {
    LabelSequence s;
    s.labels.resize(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double d = std::abs(w.samples[k] / m - ideal.samples[k] / m);
        s.labels[k] = d <= delta ? 1 : 0;
    }
    return s;
}

inline void require_paired(const Waveform& w, const Waveform& ideal) {
    w.validate();
    ideal.validate();
    if (w.size() != ideal.size()) throw ValidationError("labeling: length mismatch");
    if (w.fs != ideal.fs) throw ValidationError("labeling: sampling rate mismatch");
}

} // namespace detail

/// Labels each sample 1 (non-inrush) when the normalized measured current stays
/// within the floating threshold of the normalized never-saturating reference.
inline LabelSequence label_by_ideal(const Waveform& w, const Waveform& ideal) {
    detail::require_paired(w, ideal);
    const double ideal_peak = max_abs(ideal.samples);
    if (ideal_peak == 0.0) throw ValidationError("zero ideal reference");
    const double m = max_abs(w.samples);
    if (m == 0.0) throw ValidationError("degenerate zero waveform");
    return detail::label_with_threshold(w, ideal, m, floating_threshold(m / ideal_peak));
}

/// Dataset labeling. Identical to label_by_ideal except that an all-zero
/// reference (no fault present) is treated as an unbounded peak ratio, which
/// selects the finest threshold.
inline LabelSequence label_window(const Waveform& w, const Waveform& ideal) {
    detail::require_paired(w, ideal);
    if (max_abs(ideal.samples) != 0.0) return label_by_ideal(w, ideal);
    const double m = max_abs(w.samples);
    if (m == 0.0) throw ValidationError("degenerate zero waveform");
    return detail::label_with_threshold(w, ideal, m,
                                        floating_threshold(std::numeric_limits<double>::infinity()));
}

} // namespace inrush
