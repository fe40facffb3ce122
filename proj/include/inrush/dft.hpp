#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <span>

#include "inrush/waveform.hpp"

namespace inrush {

struct DftPhasor {
    double rms = 0.0;
    double phase = 0.0;  ///< rad, referenced to the first sample of the window

    std::complex<double> phasor() const { return std::polar(rms, phase); }
};

/// Samples in one fundamental cycle; rejects rates that do not divide evenly.
inline std::size_t cycle_samples(double fs) {
    return samples_in(1.0 / kSystemFrequency, fs);
}

namespace detail {

inline void require_one_cycle(std::span<const double> x, double fs) {
    if (x.size() != cycle_samples(fs)) {
        throw ValidationError("dft: window must hold exactly one fundamental cycle");
    }
}

} // namespace detail

/// Full-cycle DFT coefficient of harmonic `h` scaled to peak amplitude:
/// X_h = (2/N) sum x[n] exp(-j 2 pi h n / N).
inline std::complex<double> dft_bin(std::span<const double> x, int h) {
    const auto n = static_cast<double>(x.size());
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double arg = -kTwoPi * h * static_cast<double>(k) / n;
        acc += x[k] * std::complex<double>(std::cos(arg), std::sin(arg));
    }
    return acc * (2.0 / n);
}

inline DftPhasor dft_fundamental(std::span<const double> window, double fs) {
    detail::require_one_cycle(window, fs);
    const auto x1 = dft_bin(window, 1);
    return {std::abs(x1) / kSqrt2, std::abs(x1) == 0.0 ? 0.0 : std::arg(x1)};
}

/// Second-harmonic ratio |X2| / |X1|; +inf when the fundamental vanishes.
inline double shr(std::span<const double> window, double fs) {
    detail::require_one_cycle(window, fs);
    const double m1 = std::abs(dft_bin(window, 1));
    const double m2 = std::abs(dft_bin(window, 2));
    if (m1 < 1e-9) return std::numeric_limits<double>::infinity();
    return m2 / m1;
}

} // namespace inrush
