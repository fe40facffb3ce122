#pragma once

// Sliding-window transformer differential protection.
//
// Proposed: segment each side's latest cycle, fit the fundamental on the
// non-inrush samples, apply the percentage-differential criterion.
// Conventional: full-cycle DFT phasors with second-harmonic blocking.

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "inrush/dft.hpp"
#include "inrush/lm_fit.hpp"
#include "inrush/segmenter.hpp"
#include "inrush/util.hpp"

namespace inrush {

struct RelayConfig {
    double K = 0.7;
    double I_op0 = 0.3;
    double I_res_knee = 1.0;
    double window = 0.02;
    double update_proposed = 0.010;
    double update_dft = 0.002;
    double shr_threshold = 0.2;
    int min_fit_support = 8;

    void validate(double fs) const {
        if (!(K > 0.0 && K < 1.0)) throw ValidationError("relay: K must lie in (0, 1)");
        if (!(I_op0 > 0.0)) throw ValidationError("relay: I_op0 must be > 0");
        if (!(I_res_knee >= 0.0)) throw ValidationError("relay: I_res_knee must be >= 0");
        if (!(shr_threshold > 0.0)) throw ValidationError("relay: shr_threshold must be > 0");
        if (min_fit_support < 1) throw ValidationError("relay: min_fit_support must be >= 1");
        samples_in(window, fs);
        samples_in(update_proposed, fs);
        samples_in(update_dft, fs);
        if (samples_in(update_proposed, fs) == 0 || samples_in(update_dft, fs) == 0) {
            throw ValidationError("relay: update period shorter than one sample");
        }
    }
};

struct CriterionResult {
    double I_op = 0.0;
    double I_res = 0.0;
    bool trip = false;
};

/// Percentage differential with a knee: below I_res_knee only the pickup
/// I_op >= I_op0 applies; above it the slope I_op >= K * I_res applies as well.
inline CriterionResult differential_criterion(std::complex<double> I1, std::complex<double> I2,
                                              const RelayConfig& cfg) {
    CriterionResult r;
    r.I_op = std::abs(I1 + I2);
    r.I_res = std::abs(I1 - I2);
    r.trip = r.I_op >= cfg.I_op0 && (r.I_res <= cfg.I_res_knee || r.I_op >= cfg.K * r.I_res);
    return r;
}

struct RelayDecision {
    double t = 0.0;  ///< window end time
    double I_op = 0.0;
    double I_res = 0.0;
    double shr = std::numeric_limits<double>::quiet_NaN();  ///< conventional only
    bool trip = false;
    bool blocked = false;
    bool fallback_used = false;
    double i1_rms = 0.0;  ///< side-1 fundamental estimate (p.u. rms)
    double i2_rms = 0.0;
    double i1_phase = 0.0;  ///< rad, referenced to the window's first sample
};

struct TripLog {
    std::string relay;
    std::vector<RelayDecision> decisions;
    std::optional<double> first_trip_time;
};

/// Labels one raw current window (1 = non-inrush). `first` is the index of
/// the window's first sample in `record`.
using WindowSegmenter =
    std::function<LabelSequence(std::span<const double> window, const Waveform& record, std::size_t first)>;

inline WindowSegmenter model_segmenter(const SegmenterModel& m) {
    return [&m](std::span<const double> w, const Waveform&, std::size_t) { return segment(m, w); };
}

/// Reads labels from the synthesis ground truth; for reference runs.
inline WindowSegmenter truth_segmenter() {
    return [](std::span<const double> w, const Waveform& rec, std::size_t first) {
        if (!rec.meta || rec.meta->true_mask.size() != rec.size()) {
            throw ValidationError("truth segmenter: record has no ground-truth mask");
        }
        LabelSequence s;
        s.labels.assign(rec.meta->true_mask.begin() + static_cast<long>(first),
                        rec.meta->true_mask.begin() + static_cast<long>(first + w.size()));
        return s;
    };
}

namespace detail {

inline void require_pair(const Waveform& i1, const Waveform& i2, std::size_t win) {
    i1.validate();
    i2.validate();
    if (i1.size() != i2.size()) throw ValidationError("relay: side currents differ in length");
    if (i1.fs != i2.fs) throw ValidationError("relay: side currents differ in sampling rate");
    if (i1.size() < win) throw ValidationError("relay: record shorter than one window");
}

/// End indices (exclusive) of windows: win, win + step, ... <= n.
inline std::vector<std::size_t> window_ends(std::size_t n, std::size_t win, std::size_t step) {
    std::vector<std::size_t> ends;
    for (std::size_t e = win; e <= n; e += step) ends.push_back(e);
    return ends;
}

struct SideEstimate {
    std::complex<double> phasor;
    double rms = 0.0;
    bool ok = false;
};

inline SideEstimate fit_side(std::span<const double> window, const LabelSequence& labels, double fs,
                             const RelayConfig& cfg) {
    SideEstimate s;
    if (labels.count_ones() < static_cast<std::size_t>(cfg.min_fit_support)) return s;
    LMConfig lm;
    lm.min_support = cfg.min_fit_support;
    const auto est = fit_lm(MaskedWindow::from_labels(window, labels, fs), lm);
    s.phasor = est.phasor();
    s.rms = est.rms;
    s.ok = true;
    return s;
}

inline void latch(TripLog& log, RelayDecision& d) {
    if (log.first_trip_time) {
        d.trip = true;
        d.blocked = false;
    } else if (d.trip) {
        log.first_trip_time = d.t;
    }
}

} // namespace detail

/// Segment -> mask -> fit -> differential criterion, every update_proposed.
/// Windows where either side keeps fewer than min_fit_support samples restrain
/// and carry the previous phasor magnitudes for reporting.
inline TripLog run_proposed(const Waveform& i1, const Waveform& i2, const WindowSegmenter& seg,
                            const RelayConfig& cfg) {
    cfg.validate(i1.fs);
    const std::size_t win = samples_in(cfg.window, i1.fs);
    detail::require_pair(i1, i2, win);
    TripLog log;
    log.relay = "proposed";
    double prev1 = 0.0, prev2 = 0.0, prev_phase = 0.0;
    for (std::size_t end : detail::window_ends(i1.size(), win, samples_in(cfg.update_proposed, i1.fs))) {
        const std::span<const double> w1(i1.samples.data() + end - win, win);
        const std::span<const double> w2(i2.samples.data() + end - win, win);
        RelayDecision d;
        d.t = i1.t0 + static_cast<double>(end) / i1.fs;
        const auto s1 = detail::fit_side(w1, seg(w1, i1, end - win), i1.fs, cfg);
        const auto s2 = detail::fit_side(w2, seg(w2, i2, end - win), i2.fs, cfg);
        if (s1.ok && s2.ok) {
            const auto c = differential_criterion(s1.phasor, s2.phasor, cfg);
            d.I_op = c.I_op;
            d.I_res = c.I_res;
            d.trip = c.trip;
            d.i1_rms = prev1 = s1.rms;
            d.i2_rms = prev2 = s2.rms;
            d.i1_phase = prev_phase = std::arg(s1.phasor);
        } else {
            d.fallback_used = true;
            d.i1_rms = prev1;
            d.i2_rms = prev2;
            d.i1_phase = prev_phase;
        }
        detail::latch(log, d);
        log.decisions.push_back(d);
    }
    return log;
}

inline TripLog run_proposed(const Waveform& i1, const Waveform& i2, const SegmenterModel& model,
                            const RelayConfig& cfg) {
    return run_proposed(i1, i2, model_segmenter(model), cfg);
}

/// Full-cycle DFT phasors every update_dft; blocks while the differential
/// current's second-harmonic ratio is at or above the threshold.
inline TripLog run_conventional(const Waveform& i1, const Waveform& i2, const RelayConfig& cfg) {
    cfg.validate(i1.fs);
    const std::size_t win = samples_in(cfg.window, i1.fs);
    detail::require_pair(i1, i2, win);
    if (win != cycle_samples(i1.fs)) throw ValidationError("relay: DFT window must be one cycle");
    TripLog log;
    log.relay = "conventional";
    std::vector<double> diff(win);
    for (std::size_t end : detail::window_ends(i1.size(), win, samples_in(cfg.update_dft, i1.fs))) {
        const std::span<const double> w1(i1.samples.data() + end - win, win);
        const std::span<const double> w2(i2.samples.data() + end - win, win);
        for (std::size_t k = 0; k < win; ++k) diff[k] = w1[k] + w2[k];
        const auto p1 = dft_fundamental(w1, i1.fs);
        const auto p2 = dft_fundamental(w2, i2.fs);
        RelayDecision d;
        d.t = i1.t0 + static_cast<double>(end) / i1.fs;
        d.shr = shr(diff, i1.fs);
        const auto c = differential_criterion(p1.phasor(), p2.phasor(), cfg);
        d.I_op = c.I_op;
        d.I_res = c.I_res;
        d.i1_rms = p1.rms;
        d.i2_rms = p2.rms;
        d.i1_phase = p1.phase;
        d.blocked = d.shr >= cfg.shr_threshold;
        d.trip = c.trip && !d.blocked;
        detail::latch(log, d);
        log.decisions.push_back(d);
    }
    return log;
}

/// Longest run of consecutive blocked decisions, in seconds of window-end time.
inline double longest_block(const TripLog& log, double update) {
    std::size_t best = 0, run = 0;
    for (const auto& d : log.decisions) {
        run = d.blocked ? run + 1 : 0;
        best = std::max(best, run);
    }
    return static_cast<double>(best) * update;
}

inline std::string trip_log_csv(const TripLog& log) {
    std::string out = "t,I_op,I_res,shr,trip,blocked,fallback_used,i1_rms,i2_rms,i1_phase\n";
    for (const auto& d : log.decisions) {
        out += fmt_double(d.t) + "," + fmt_double(d.I_op) + "," + fmt_double(d.I_res) + "," +
               (std::isnan(d.shr) ? std::string() : fmt_double(d.shr)) + "," + (d.trip ? "1" : "0") + "," +
               (d.blocked ? "1" : "0") + "," + (d.fallback_used ? "1" : "0") + "," + fmt_double(d.i1_rms) +
               "," + fmt_double(d.i2_rms) + "," + fmt_double(d.i1_phase) + "\n";
    }
    return out;
}

} // namespace inrush
