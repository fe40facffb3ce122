#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "inrush/dft.hpp"
#include "inrush/synthesis.hpp"

using namespace inrush;

namespace {

constexpr double kFs = 2000.0;

InrushParams inrush_params(double alpha, double psi_r, double psi_s = 1.15, double tau = 0.3) {
    InrushParams p;
    p.alpha = alpha;
    p.psi_r = psi_r;
    p.psi_s = psi_s;
    p.tau_decay = tau;
    return p;
}

std::vector<double> per_cycle_peaks(const std::vector<double>& x, std::size_t cycle) {
    std::vector<double> peaks;
    for (std::size_t s = 0; s + cycle <= x.size(); s += cycle) {
        peaks.push_back(*std::max_element(x.begin() + static_cast<long>(s),
                                          x.begin() + static_cast<long>(s + cycle)));
    }
    return peaks;
}

} // namespace

TEST(Flux, ContinuousAtSwitching) {
    SourceCircuit c;
    for (double rem : {0.0, 0.3, 0.8}) {
        for (double alpha : {0.0, 1.0, 2.5}) {
            const std::vector<double> t{0.0, 1.0 / kFs};
            const auto psi = flux_trajectory(c, inrush_params(alpha, rem), t);
            EXPECT_NEAR(psi[0], rem * c.psi_m(), 1e-15);
        }
    }
}

TEST(Flux, QuadratureSwitchingHasNoOffset) {
    SourceCircuit c;
    const auto t = time_grid(400, kFs);
    const auto psi = flux_trajectory(c, inrush_params(kPi / 2, 0.0), t);
    for (double v : psi) EXPECT_LE(std::abs(v), c.psi_m() * (1.0 + 1e-12));
    EXPECT_NEAR(*std::max_element(psi.begin(), psi.end()), c.psi_m(), 1e-12);
}

// Worst-case switching: flux swings twice the steady-state peak on top of the
// remanence, so the first half-cycle peak is (2 + psi_r) psi_m.
TEST(Flux, ZeroAngleWithRemanencePeaksAtHalfCycle) {
    SourceCircuit c;
    const double omega = c.omega;
    const std::vector<double> t{0.0, kPi / omega};
    const auto psi = flux_trajectory(c, inrush_params(0.0, 0.8, 1.15, 1e9), t);
    EXPECT_NEAR(psi[1], 2.8 * c.psi_m(), 1e-9 * c.psi_m());

    const auto grid = time_grid(40, kFs);
    const auto cyc = flux_trajectory(c, inrush_params(0.0, 0.8, 1.15, 1e9), grid);
    const auto peak = std::max_element(cyc.begin(), cyc.end());
    EXPECT_EQ(peak - cyc.begin(), 20);
}

TEST(Flux, OverexcitationScalesSwing) {
    SourceCircuit c;
    auto p = inrush_params(kPi / 2, 0.0);
    p.overexcitation = 1.3;
    const auto psi = flux_trajectory(c, p, time_grid(40, kFs));
    EXPECT_NEAR(*std::max_element(psi.begin(), psi.end()), 1.3 * c.psi_m(), 1e-12);
}

TEST(Flux, IrregularGridIsRejected) {
    SourceCircuit c;
    const std::vector<double> t{0.0, 0.0005, 0.0011, 0.0015};
    try {
        flux_trajectory(c, inrush_params(0.0, 0.0), t);
        FAIL() << "expected a validation error";
    } catch (const ValidationError& e) {
        EXPECT_STREQ(e.what(), "irregular sampling");
    }
}

TEST(GenInrush, SaturationAboveSwingGivesZeroAndWarning) {
    SourceCircuit c;
    const auto w = gen_inrush(c, inrush_params(0.0, 0.8, 3.0), kFs, 0.2);
    for (double v : w.samples) EXPECT_EQ(v, 0.0);
    EXPECT_TRUE(w.has_warning(kWarnNoSaturation));
    for (auto m : w.meta->true_mask) EXPECT_EQ(m, 1);
}

TEST(GenInrush, PulsesExactlyWhereFluxExceedsSaturation) {
    SourceCircuit c;
    const auto p = inrush_params(0.0, 0.4);
    const auto w = gen_inrush(c, p, kFs, 0.2);
    const auto psi = flux_trajectory(c, p, time_grid(w.size(), kFs));
    const double psi_s = p.psi_s * c.psi_m();
    std::size_t pulses = 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const bool sat = psi[k] >= psi_s;
        EXPECT_EQ(w.samples[k] > 0.0 || (sat && psi[k] == psi_s), sat) << k;
        EXPECT_GE(w.samples[k], 0.0);
        EXPECT_EQ(w.meta->true_mask[k], sat ? 0 : 1);
        EXPECT_EQ(w.meta->true_rms[k], 0.0);
        if (sat && (k == 0 || psi[k - 1] < psi_s)) ++pulses;
    }
    EXPECT_EQ(pulses, 10u);  // one per cycle over 0.2 s
}

TEST(GenInrush, MatchesSaturatedBranchFormula) {
    // With no offset decay the current has a closed form.
    SourceCircuit c;
    const auto p = inrush_params(0.6, 0.5, 1.15, 1e12);
    const auto w = gen_inrush(c, p, kFs, 0.1);
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double wt = c.omega * w.time_at(k);
        const double closed = c.current_scale() *
                              (-std::cos(wt + p.alpha) + std::cos(p.alpha) + p.psi_r - p.psi_s);
        if (w.meta->true_mask[k] == 0) {
            EXPECT_NEAR(w.samples[k], closed, 1e-9);
        } else {
            EXPECT_EQ(w.samples[k], 0.0);
        }
    }
}

TEST(GenInrush, CyclePeaksDecay) {
    SourceCircuit c;
    const auto w = gen_inrush(c, inrush_params(0.0, 0.6, 1.15, 0.1), kFs, 0.3);
    const auto peaks = per_cycle_peaks(w.samples, 40);
    ASSERT_GT(peaks.size(), 3u);
    for (std::size_t j = 1; j < peaks.size(); ++j) {
        if (peaks[j - 1] == 0.0) break;
        EXPECT_LT(peaks[j], peaks[j - 1]) << "cycle " << j;
    }
}

TEST(GenInrush, RejectsSubCycleDuration) {
    SourceCircuit c;
    EXPECT_THROW(gen_inrush(c, inrush_params(0.0, 0.0), kFs, 0.01), ValidationError);
    EXPECT_THROW(gen_inrush(c, inrush_params(0.0, 1.0), kFs, 0.1), ValidationError);
}

TEST(GenFault, UnitRmsCycle) {
    FaultParams f;
    f.As = std::sqrt(2.0);
    const auto w = gen_fault(f, kFs, 0.1);
    for (std::size_t s = 0; s + 40 <= w.size(); s += 40) {
        EXPECT_NEAR(rms(std::span<const double>(w.samples.data() + s, 40)), 1.0, 1e-12);
    }
    EXPECT_NEAR(w.meta->true_rms.front(), 1.0, 1e-15);
}

TEST(GenFault, PureExponential) {
    FaultParams f;
    f.Ds = 1.0;
    f.Ts = 0.05;
    const auto w = gen_fault(f, kFs, 0.1);
    EXPECT_NEAR(w.samples[100], std::exp(-1.0), 1e-15);
    EXPECT_NEAR(w.samples[100], 0.36787944117144233, 1e-15);
}

TEST(GenFault, MatchesIndependentEvaluation) {
    FaultParams f;
    f.As = 2.0;
    f.alpha = 0.5;
    f.Ds = 1.5;
    f.Ts = 0.05;
    const auto w = gen_fault(f, kFs, 0.2);
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double t = static_cast<double>(k) / 2000.0;
        const double want = 2.0 * std::cos(2.0 * 3.141592653589793 * 50.0 * t + 0.5) +
                            1.5 * std::exp(-t / 0.05);
        EXPECT_NEAR(w.samples[k], want, 1e-13);
        EXPECT_EQ(w.meta->true_mask[k], 1);
    }
}

TEST(GenFault, InvalidParams) {
    FaultParams f;
    f.As = -1.0;
    EXPECT_THROW(gen_fault(f, kFs, 0.1), ValidationError);
    f.As = 1.0;
    f.f1 = 60.0;
    EXPECT_THROW(gen_fault(f, kFs, 0.1), ValidationError);
}

TEST(GenMixed, ZeroFaultEqualsInrush) {
    SourceCircuit c;
    const auto p = inrush_params(0.3, 0.5);
    const auto a = gen_mixed(c, p, FaultParams{}, kFs, 0.2);
    const auto b = gen_inrush(c, p, kFs, 0.2);
    EXPECT_EQ(a.samples, b.samples);
    EXPECT_EQ(a.meta->true_mask, b.meta->true_mask);
}

TEST(GenMixed, UnsaturatedInrushEqualsFault) {
    SourceCircuit c;
    FaultParams f;
    f.As = 1.0;
    f.alpha = 0.2;
    f.Ds = 0.4;
    const auto a = gen_mixed(c, inrush_params(0.0, 0.0, 5.0), f, kFs, 0.2);
    const auto b = gen_fault(f, kFs, 0.2);
    EXPECT_EQ(a.samples, b.samples);
}

TEST(GenMixed, ExactFaultCurrentOffSaturation) {
    SourceCircuit c;
    FaultParams f;
    f.As = 0.5;
    f.alpha = kPi;
    f.Ds = 0.5;
    const auto m = gen_mixed(c, inrush_params(0.0, 0.8), f, kFs, 0.2);
    const auto fw = gen_fault(f, kFs, 0.2);
    std::size_t ones = 0;
    for (std::size_t k = 0; k < m.size(); ++k) {
        if (m.meta->true_mask[k]) {
            ++ones;
            EXPECT_EQ(m.samples[k], fw.samples[k]);
        }
    }
    EXPECT_GT(ones, 0u);
    EXPECT_LT(ones, m.size());
    EXPECT_EQ(m.meta->kind, ScenarioKind::kMixed);
    EXPECT_NEAR(m.meta->true_rms.front(), 0.5 / std::sqrt(2.0), 1e-15);
}

TEST(CtSaturation, InfiniteLevelIsIdentity) {
    SourceCircuit c;
    const auto w = gen_inrush(c, inrush_params(0.0, 0.8), kFs, 0.2);
    const auto out = apply_ct_saturation(w, std::numeric_limits<double>::infinity(), 0.005);
    EXPECT_EQ(out.samples, w.samples);
}

TEST(CtSaturation, SmallSignalIsIdentity) {
    FaultParams f;
    f.As = 0.1;
    const auto w = gen_fault(f, kFs, 0.2);
    const auto out = apply_ct_saturation(w, 10.0, 0.005);
    EXPECT_EQ(out.samples, w.samples);
    EXPECT_EQ(out.meta->true_mask, w.meta->true_mask);
}

TEST(CtSaturation, PeakCollapsesAndReverses) {
    SourceCircuit c;
    const auto w = gen_inrush(c, inrush_params(0.0, 0.8), kFs, 0.2);
    const auto out = apply_ct_saturation(w, 5.0, 0.005);
    EXPECT_LT(max_abs(out.samples), max_abs(w.samples));
    EXPECT_LT(*std::min_element(out.samples.begin(), out.samples.end()), 0.0);
    EXPECT_GE(*std::min_element(w.samples.begin(), w.samples.end()), 0.0);
    // Mask grows to cover the distorted samples.
    EXPECT_LT(std::count(out.meta->true_mask.begin(), out.meta->true_mask.end(), 1),
              std::count(w.meta->true_mask.begin(), w.meta->true_mask.end(), 1));
}

TEST(SymmetricalInrush, HalfWaveAntisymmetric) {
    SourceCircuit c;
    const auto w = gen_symmetrical_inrush(c, inrush_params(0.0, 0.0, 1.15, 1e12), kFs, 0.2);
    const double peak = max_abs(w.samples);
    ASSERT_GT(peak, 0.0);
    for (std::size_t k = 0; k + 20 < w.size(); ++k) {
        EXPECT_NEAR(w.samples[k + 20], -w.samples[k], 1e-9 * peak) << k;
    }
    EXPECT_LT(*std::min_element(w.samples.begin(), w.samples.end()), 0.0);
    EXPECT_GT(*std::max_element(w.samples.begin(), w.samples.end()), 0.0);
}

TEST(SymmetricalInrush, UnsaturatedIsZero) {
    SourceCircuit c;
    const auto w = gen_symmetrical_inrush(c, inrush_params(0.0, 0.5, 4.0), kFs, 0.1);
    for (double v : w.samples) EXPECT_EQ(v, 0.0);
    EXPECT_TRUE(w.has_warning(kWarnNoSaturation));
}

TEST(SymmetricalInrush, LowerSecondHarmonicThanUnipolar) {
    SourceCircuit c;
    const auto p = inrush_params(0.0, 0.0, 1.15, 1e12);
    const auto sym = gen_symmetrical_inrush(c, p, kFs, 0.04);
    const auto uni = gen_inrush(c, p, kFs, 0.04);
    const std::span<const double> cs(sym.samples.data() + 40, 40);
    const std::span<const double> cu(uni.samples.data() + 40, 40);
    EXPECT_LT(shr(cs, kFs), shr(cu, kFs));
    EXPECT_LT(std::abs(dft_bin(cs, 2)), std::abs(dft_bin(cu, 2)));
}

TEST(Noise, InfiniteSnrIsIdentity) {
    FaultParams f;
    f.As = 1.0;
    const auto w = gen_fault(f, kFs, 0.1);
    EXPECT_EQ(add_noise(w, std::numeric_limits<double>::infinity(), 1).samples, w.samples);
}

TEST(Noise, SameSeedBitIdentical) {
    FaultParams f;
    f.As = 1.0;
    const auto w = gen_fault(f, kFs, 0.1);
    EXPECT_EQ(add_noise(w, 30.0, 99).samples, add_noise(w, 30.0, 99).samples);
    EXPECT_NE(add_noise(w, 30.0, 99).samples, add_noise(w, 30.0, 100).samples);
}

TEST(Noise, FortyDbOnUnitRms) {
    FaultParams f;
    f.As = std::sqrt(2.0);
    const auto w = gen_fault(f, kFs, 2.0);
    const auto n = add_noise(w, 40.0, 5);
    std::vector<double> diff(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) diff[k] = n.samples[k] - w.samples[k];
    EXPECT_NEAR(rms(diff), 0.01, 0.001);
}

TEST(Noise, ZeroRmsAndBadSnr) {
    Waveform w;
    w.samples.assign(40, 0.0);
    const auto out = add_noise(w, 40.0, 1);
    EXPECT_EQ(out.samples, w.samples);
    EXPECT_TRUE(out.has_warning(kWarnZeroRms));
    EXPECT_THROW(add_noise(w, std::nan(""), 1), ValidationError);
    EXPECT_THROW(add_noise(w, -std::numeric_limits<double>::infinity(), 1), ValidationError);
}

// Across the energization grid, a nonzero inrush sample only appears where the
// flux is at or above saturation.
TEST(Properties, BranchConsistencyOverGrid) {
    SourceCircuit c;
    for (int a = 0; a < 12; ++a) {
        for (int r = 0; r <= 8; ++r) {
            for (double ox : {1.0, 1.2, 1.5}) {
                auto p = inrush_params(a * kPi / 6.0, r / 10.0);
                p.overexcitation = ox;
                const auto w = gen_inrush(c, p, kFs, 0.1);
                const auto psi = flux_trajectory(c, p, time_grid(w.size(), kFs));
                for (std::size_t k = 0; k < w.size(); ++k) {
                    if (w.samples[k] != 0.0) {
                        ASSERT_GE(psi[k], p.psi_s * c.psi_m());
                    }
                }
            }
        }
    }
}

TEST(Properties, GeneratorsAreBitReproducible) {
    SourceCircuit c;
    const auto p = inrush_params(1.1, 0.7);
    FaultParams f;
    f.As = 0.7;
    f.Ds = 0.3;
    EXPECT_EQ(gen_inrush(c, p, kFs, 0.2).samples, gen_inrush(c, p, kFs, 0.2).samples);
    EXPECT_EQ(gen_mixed(c, p, f, kFs, 0.2).samples, gen_mixed(c, p, f, kFs, 0.2).samples);
    EXPECT_EQ(gen_symmetrical_inrush(c, p, kFs, 0.2).samples,
              gen_symmetrical_inrush(c, p, kFs, 0.2).samples);
    const auto w = gen_inrush(c, p, kFs, 0.2);
    EXPECT_EQ(apply_ct_saturation(w, 10.0, 0.005).samples, apply_ct_saturation(w, 10.0, 0.005).samples);
}
