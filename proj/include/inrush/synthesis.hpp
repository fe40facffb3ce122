#pragma once

// Closed-form synthesis of transformer energization transients.
//
// Flux model (lossless single-phase energization, offset decaying with
// tau_decay):
//
//   psi(t) = -psi_m cos(wt + a) + (psi_r + psi_m cos a) exp(-t / tau_decay)
//
// which satisfies psi(0) = psi_r. The excitation branch draws current only
// while psi >= psi_s:
//
//   i(t) = Um / (w L) * (psi(t) - psi_s) / psi_m_nominal     (psi >= psi_s)
//
// Fluxes in InrushParams are fractions of the nominal peak flux
// psi_m_nominal = L Um / sqrt(r^2 + (w L)^2); over-excitation scales the
// applied voltage and hence the flux swing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "inrush/waveform.hpp"

namespace inrush {

struct SourceCircuit {
    double Um = 1.0;                  ///< peak source voltage (p.u.)
    double omega = kTwoPi * kSystemFrequency;
    double r = 0.005;                 ///< total series resistance (p.u.)
    double L = 0.25 / (kTwoPi * kSystemFrequency); ///< total series inductance (p.u.)

    void validate() const {
        if (!(Um > 0.0)) throw ValidationError("source circuit: Um must be > 0");
        if (!(omega > 0.0)) throw ValidationError("source circuit: omega must be > 0");
        if (!(L > 0.0)) throw ValidationError("source circuit: L must be > 0");
        if (!(r >= 0.0)) throw ValidationError("source circuit: r must be >= 0");
    }

    /// Nominal peak flux linkage.
    double psi_m() const { return L * Um / std::hypot(r, omega * L); }

    /// Scale of the saturated-branch current, Um / (w L).
    double current_scale() const { return Um / (omega * L); }
};

struct InrushParams {
    double alpha = 0.0;         ///< switching angle (rad)
    double psi_r = 0.0;         ///< remanence, fraction of psi_m
    double psi_s = 1.15;        ///< saturation flux, fraction of psi_m
    double overexcitation = 1.0;
    double tau_decay = 0.3;     ///< offset-flux decay time constant (s)

    void validate() const {
        if (!(psi_s > 0.0)) throw ValidationError("inrush params: psi_s must be > 0");
        if (!(psi_r >= 0.0 && psi_r < 1.0)) {
            throw ValidationError("inrush params: psi_r must lie in [0, 1)");
        }
        if (!(overexcitation >= 1.0)) {
            throw ValidationError("inrush params: overexcitation must be >= 1");
        }
        if (!(tau_decay > 0.0)) throw ValidationError("inrush params: tau_decay must be > 0");
    }
};

struct FaultParams {
    double As = 0.0;      ///< fundamental peak amplitude (p.u.)
    double Ds = 0.0;      ///< dc amplitude (p.u.)
    double Ts = 0.05;     ///< dc decay time constant (s)
    double alpha = 0.0;   ///< phase (rad)
    double f1 = kSystemFrequency;

    void validate() const {
        if (!(As >= 0.0)) throw ValidationError("fault params: As must be >= 0");
        if (!(Ts > 0.0)) throw ValidationError("fault params: Ts must be > 0");
        if (f1 != kSystemFrequency) throw ValidationError("fault params: f1 must be 50 Hz");
    }

    double value(double t) const {
        return As * std::cos(kTwoPi * f1 * t + alpha) + Ds * std::exp(-t / Ts);
    }
};

inline constexpr const char* kWarnNoSaturation = "no saturation";
inline constexpr const char* kWarnZeroRms = "zero rms";

namespace detail {

inline void require_uniform(std::span<const double> t) {
    if (t.size() < 2) return;
    const double h = t[1] - t[0];
    if (!(h > 0.0)) throw ValidationError("irregular sampling");
    const double tol = 1e-9 * std::max(1.0, std::abs(t.back()));
    for (std::size_t k = 1; k < t.size(); ++k) {
        if (std::abs((t[k] - t[k - 1]) - h) > tol) {
            throw ValidationError("irregular sampling");
        }
    }
}

/// Flux with an explicit initial offset (absolute flux units).
inline double flux_at(const SourceCircuit& c, double psi_m, double angle,
                      double offset, double tau, double t) {
    return -psi_m * std::cos(c.omega * t + angle) + offset * std::exp(-t / tau);
}

struct InrushComponent {
    std::vector<double> current;
    std::vector<std::uint8_t> saturated;
};

/// One saturating core leg with switching angle `angle` and initial flux offset
/// `offset` (fraction of nominal psi_m).
inline InrushComponent inrush_component(const SourceCircuit& c, const InrushParams& p,
                                        double angle, double offset_frac,
                                        std::span<const double> t) {
    const double psi_nom = c.psi_m();
    const double psi_m = p.overexcitation * psi_nom;
    const double offset = offset_frac * psi_nom;
    const double psi_s = p.psi_s * psi_nom;
    const double scale = c.current_scale() / psi_nom;
    InrushComponent out;
    out.current.resize(t.size(), 0.0);
    out.saturated.resize(t.size(), 0);
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double psi = flux_at(c, psi_m, angle, offset, p.tau_decay, t[k]);
        if (psi >= psi_s) {
            out.current[k] = scale * (psi - psi_s);
            out.saturated[k] = 1;
        }
    }
    return out;
}

inline std::size_t checked_count(double duration, double fs, double min_duration) {
    if (!(fs > 0.0)) throw ValidationError("sampling rate must be > 0");
    if (!(duration > 0.0) || duration + 1e-12 < min_duration) {
        throw ValidationError("duration too short");
    }
    return samples_in(duration, fs);
}

} // namespace detail

/// Flux linkage psi(t) in absolute units on a uniform grid.
inline std::vector<double> flux_trajectory(const SourceCircuit& circ, const InrushParams& p,
                                           std::span<const double> t) {
    circ.validate();
    p.validate();
    detail::require_uniform(t);
    const double psi_nom = circ.psi_m();
    const double psi_m = p.overexcitation * psi_nom;
    const double offset = p.psi_r * psi_nom + psi_m * std::cos(p.alpha);
    std::vector<double> psi(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
        psi[k] = detail::flux_at(circ, psi_m, p.alpha, offset, p.tau_decay, t[k]);
    }
    return psi;
}

/// Magnetizing inrush of an unloaded transformer switched in at t = 0.
inline Waveform gen_inrush(const SourceCircuit& circ, const InrushParams& p, double fs,
                           double duration) {
    circ.validate();
    p.validate();
    const std::size_t n = detail::checked_count(duration, fs, 1.0 / kSystemFrequency);
    const auto t = time_grid(n, fs);
    const double offset = p.psi_r + p.overexcitation * std::cos(p.alpha);
    auto comp = detail::inrush_component(circ, p, p.alpha, offset, t);

    Waveform w;
    w.fs = fs;
    w.samples = std::move(comp.current);
    GroundTruth g;
    g.kind = ScenarioKind::kInrush;
    g.true_rms.assign(n, 0.0);
    g.true_mask.resize(n);
    bool any = false;
    for (std::size_t k = 0; k < n; ++k) {
        g.true_mask[k] = comp.saturated[k] ? 0 : 1;
        any = any || comp.saturated[k];
    }
    w.meta = std::move(g);
    if (!any) w.warnings.emplace_back(kWarnNoSaturation);
    return w;
}

/// Internal fault current: fundamental plus decaying dc.
inline Waveform gen_fault(const FaultParams& p, double fs, double duration) {
    p.validate();
    const std::size_t n = detail::checked_count(duration, fs, 0.0);
    Waveform w;
    w.fs = fs;
    w.samples.resize(n);
    for (std::size_t k = 0; k < n; ++k) w.samples[k] = p.value(w.time_at(k));
    GroundTruth g;
    g.kind = ScenarioKind::kFault;
    g.true_rms.assign(n, p.As / kSqrt2);
    g.true_mask.assign(n, 1);
    w.meta = std::move(g);
    return w;
}

/// Slight internal fault energized together with inrush: pointwise sum.
inline Waveform gen_mixed(const SourceCircuit& circ, const InrushParams& inrush_p,
                          const FaultParams& fault_p, double fs, double duration) {
    Waveform inr = gen_inrush(circ, inrush_p, fs, duration);
    const Waveform flt = gen_fault(fault_p, fs, duration);
    for (std::size_t k = 0; k < inr.size(); ++k) inr.samples[k] += flt.samples[k];
    inr.meta->kind = ScenarioKind::kMixed;
    inr.meta->true_rms = flt.meta->true_rms;
    return inr;
}

/// Inrush with alternating-polarity pulses, as seen in delta line currents.
///
/// Sum of a positive-saturating leg (angle alpha, remanence +psi_r) and a
/// reversed leg energized half a cycle later with remanence -psi_r. With
/// psi_r = 0 the second leg is the first delayed by T/2, so the result is
/// half-wave antisymmetric up to the offset decay.
inline Waveform gen_symmetrical_inrush(const SourceCircuit& circ, const InrushParams& p,
                                       double fs, double duration) {
    circ.validate();
    p.validate();
    const std::size_t n = detail::checked_count(duration, fs, 1.0 / kSystemFrequency);
    const auto t = time_grid(n, fs);
    const double swing = p.overexcitation * std::cos(p.alpha);
    const auto a = detail::inrush_component(circ, p, p.alpha, swing + p.psi_r, t);
    const auto b = detail::inrush_component(circ, p, p.alpha + kPi, swing - p.psi_r, t);

    Waveform w;
    w.fs = fs;
    w.samples.resize(n);
    GroundTruth g;
    g.kind = ScenarioKind::kSymmetricalInrush;
    g.true_rms.assign(n, 0.0);
    g.true_mask.resize(n);
    bool any = false;
    for (std::size_t k = 0; k < n; ++k) {
        w.samples[k] = a.current[k] - b.current[k];
        const bool sat = a.saturated[k] || b.saturated[k];
        g.true_mask[k] = sat ? 0 : 1;
        any = any || sat;
    }
    w.meta = std::move(g);
    if (!any) w.warnings.emplace_back(kWarnNoSaturation);
    return w;
}

/// Measuring-CT saturation surrogate.
///
/// A single normalized core-flux state lambda integrates the secondary current
/// (lambda' = w * i_s). Inside |lambda| <= sat_level the CT is ideal. Beyond it
/// the magnetizing branch takes i_m = (lambda -+ sat_level) / (w * tau_ct), so
/// the secondary decays toward zero with time constant tau_ct and swings
/// negative when the primary falls, until the core leaves saturation.
/// Integrated with backward Euler, which is exact in closed form per step.
inline Waveform apply_ct_saturation(const Waveform& w, double sat_level, double tau_ct) {
    w.validate();
    if (!(sat_level > 0.0)) throw ValidationError("ct saturation: sat_level must be > 0");
    if (!(tau_ct > 0.0)) throw ValidationError("ct saturation: tau_ct must be > 0");
    Waveform out = w;
    if (std::isinf(sat_level)) return out;

    const double omega = kTwoPi * kSystemFrequency;
    const double h = w.dt();
    const double ratio = h / tau_ct;
    double lambda = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double ip = w.samples[k];
        const double pred = lambda + omega * h * ip;
        if (std::abs(pred) <= sat_level) {
            lambda = pred;
            out.samples[k] = ip;
            continue;
        }
        const double s = pred > 0.0 ? 1.0 : -1.0;
        lambda = (pred + s * sat_level * ratio) / (1.0 + ratio);
        const double im = (lambda - s * sat_level) / (omega * tau_ct);
        out.samples[k] = ip - im;
    }

    if (out.meta && out.meta->true_mask.size() == out.size()) {
        constexpr double kDistortionThreshold = 0.003;
        const double m = max_abs(out.samples);
        for (std::size_t k = 0; k < out.size(); ++k) {
            if (std::abs(out.samples[k] - w.samples[k]) > kDistortionThreshold * m) {
                out.meta->true_mask[k] = 0;
            }
        }
    }
    return out;
}

/// Additive white Gaussian noise at `snr_db` relative to the waveform RMS.
/// snr_db = +inf leaves the waveform untouched.
inline Waveform add_noise(const Waveform& w, double snr_db, std::uint64_t seed) {
    w.validate();
    if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
        throw ValidationError("add_noise: snr_db must be finite or +inf");
    }
    Waveform out = w;
    if (std::isinf(snr_db)) return out;
    const double signal_rms = rms(w.samples);
    if (signal_rms == 0.0) {
        out.warnings.emplace_back(kWarnZeroRms);
        return out;
    }
    const double sigma = signal_rms / std::pow(10.0, snr_db / 20.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (auto& v : out.samples) v += noise(rng);
    return out;
}

} // namespace inrush
