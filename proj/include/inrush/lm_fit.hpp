#pragma once

// Fundamental-phasor extraction from the non-inrush part of a current window.
//
// Model on the retained samples:
//   i'(t) = A cos(2 pi f1 t + alpha) + D exp(-t / T)
// fitted by Levenberg-Marquardt with Marquardt diagonal scaling. T is carried
// internally as log T, clamped to [t_min, t_max].

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "inrush/waveform.hpp"

namespace inrush {

class InsufficientSupport : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Window with inrush samples zeroed. Times are window-relative.
struct MaskedWindow {
    std::vector<double> t;
    std::vector<double> i_prime;
    LabelSequence mask;
    double fs = 2000.0;

    std::size_t n_used() const { return mask.count_ones(); }

    /// i' = S * i on a window starting at t = 0.
    static MaskedWindow from_labels(std::span<const double> current, const LabelSequence& labels,
                                    double fs) {
        if (current.size() != labels.size()) {
            throw ValidationError("masked window: length mismatch");
        }
        MaskedWindow w;
        w.fs = fs;
        w.t = time_grid(current.size(), fs);
        w.i_prime.resize(current.size());
        w.mask = labels;
        for (std::size_t k = 0; k < current.size(); ++k) {
            w.i_prime[k] = labels.labels[k] ? current[k] : 0.0;
        }
        return w;
    }

    /// Window holding only the supplied (time, value) pairs, all retained.
    static MaskedWindow from_points(std::vector<double> t, std::vector<double> values, double fs) {
        if (t.size() != values.size()) throw ValidationError("masked window: length mismatch");
        MaskedWindow w;
        w.fs = fs;
        w.mask.labels.assign(t.size(), 1);
        w.t = std::move(t);
        w.i_prime = std::move(values);
        return w;
    }
};

/// x = [A', alpha', D', T'].
using FitParams = std::array<double, 4>;

struct LMConfig {
    int max_iter = 100;
    double damping0 = 1e-3;
    double damping_up = 10.0;
    double damping_down = 0.1;
    double tol_grad = 1e-10;
    double tol_step = 1e-12;
    double tol_residual = 1e-24;
    double t_min = 1e-3;
    double t_max = 10.0;
    int min_support = 8;
    double f1 = kSystemFrequency;

    void validate() const {
        if (max_iter <= 0 || !(damping0 > 0.0) || !(damping_up > 1.0) ||
            !(damping_down > 0.0 && damping_down < 1.0) || !(tol_grad > 0.0) ||
            !(tol_step > 0.0) || !(tol_residual > 0.0) || !(t_min > 0.0) || !(t_max > t_min) ||
            min_support < 1) {
            throw ValidationError("lm config: invalid settings");
        }
    }
};

/// kStalled: no damping level yields a decrease, i.e. a numerical minimum.
enum class FitStatus { kConvergedGradient, kConvergedStep, kConvergedResidual, kMaxIter, kStalled };

inline const char* to_string(FitStatus s) {
    switch (s) {
    case FitStatus::kConvergedGradient: return "gradient";
    case FitStatus::kConvergedStep: return "step";
    case FitStatus::kConvergedResidual: return "residual";
    case FitStatus::kMaxIter: return "max-iter";
    case FitStatus::kStalled: return "stalled";
    }
    return "unknown";
}

struct PhasorEstimate {
    double A_prime = 0.0;
    double alpha_prime = 0.0;
    double D_prime = 0.0;
    double T_prime = 0.05;
    double rms = 0.0;
    double residual_norm = 0.0;
    std::size_t n_used = 0;
    int iterations = 0;
    FitStatus status = FitStatus::kConvergedResidual;
    /// Cost 0.5*|F|^2 after the initial guess and after every accepted step.
    std::vector<double> cost_history;

    std::complex<double> phasor() const { return std::polar(rms, alpha_prime); }
    bool converged() const { return status != FitStatus::kMaxIter; }
};

namespace detail {

struct Support {
    std::vector<double> t;
    std::vector<double> y;
};

inline Support support_of(const MaskedWindow& win) {
    if (win.t.size() != win.i_prime.size() || win.t.size() != win.mask.size()) {
        throw ValidationError("masked window: length mismatch");
    }
    Support s;
    for (std::size_t k = 0; k < win.t.size(); ++k) {
        if (win.mask.labels[k]) {
            s.t.push_back(win.t[k]);
            s.y.push_back(win.i_prime[k]);
        }
    }
    if (s.t.empty()) throw ValidationError("empty fit support");
    return s;
}

inline double model_at(const FitParams& x, double omega, double t) {
    return x[0] * std::cos(omega * t + x[1]) + x[2] * std::exp(-t / x[3]);
}

} // namespace detail

/// F_j = i'[k_j] - model(t[k_j]) over retained samples.
inline std::vector<double> residual(const FitParams& x, const MaskedWindow& win,
                                    double f1 = kSystemFrequency) {
    const auto s = detail::support_of(win);
    const double omega = kTwoPi * f1;
    std::vector<double> f(s.t.size());
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = s.y[j] - detail::model_at(x, omega, s.t[j]);
    return f;
}

/// dF/dx with respect to (A', alpha', D', T').
inline Eigen::MatrixX4d residual_jacobian(const FitParams& x, const MaskedWindow& win,
                                          double f1 = kSystemFrequency) {
    const auto s = detail::support_of(win);
    const double omega = kTwoPi * f1;
    Eigen::MatrixX4d J(static_cast<Eigen::Index>(s.t.size()), 4);
    for (std::size_t j = 0; j < s.t.size(); ++j) {
        const auto r = static_cast<Eigen::Index>(j);
        const double th = omega * s.t[j] + x[1];
        const double e = std::exp(-s.t[j] / x[3]);
        J(r, 0) = -std::cos(th);
        J(r, 1) = x[0] * std::sin(th);
        J(r, 2) = -e;
        J(r, 3) = -x[2] * e * s.t[j] / (x[3] * x[3]);
    }
    return J;
}

/// Heuristic start: peak magnitude, projected phase, mean value, 50 ms.
inline FitParams initial_guess(const MaskedWindow& win, double f1 = kSystemFrequency) {
    const auto s = detail::support_of(win);
    const double omega = kTwoPi * f1;
    double peak = 0.0, c = 0.0, sn = 0.0, mean = 0.0;
    for (std::size_t j = 0; j < s.t.size(); ++j) {
        peak = std::max(peak, std::abs(s.y[j]));
        c += s.y[j] * std::cos(omega * s.t[j]);
        sn += s.y[j] * std::sin(omega * s.t[j]);
        mean += s.y[j];
    }
    mean /= static_cast<double>(s.t.size());
    const double phase = (c == 0.0 && sn == 0.0) ? 0.0 : std::atan2(-sn, c);
    return {peak, phase, mean, 0.05};
}

/// Levenberg-Marquardt fit of the fundamental-plus-decaying-dc model.
inline PhasorEstimate fit_lm(const MaskedWindow& win, const LMConfig& cfg = {}) {
    cfg.validate();
    const auto s = detail::support_of(win);
    const auto n = static_cast<Eigen::Index>(s.t.size());
    if (n < cfg.min_support) {
        throw InsufficientSupport("insufficient support: " + std::to_string(n) +
                                  " retained samples, need " + std::to_string(cfg.min_support));
    }
    const double omega = kTwoPi * cfg.f1;
    const double u_min = std::log(cfg.t_min);
    const double u_max = std::log(cfg.t_max);

    // p = [A, alpha, D, log T]
    auto evaluate = [&](const Eigen::Vector4d& p, Eigen::VectorXd& f, Eigen::MatrixX4d* J) {
        const double T = std::exp(p[3]);
        f.resize(n);
        if (J) J->resize(n, 4);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double t = s.t[static_cast<std::size_t>(j)];
            const double th = omega * t + p[1];
            const double e = std::exp(-t / T);
            const double c = std::cos(th);
            f[j] = s.y[static_cast<std::size_t>(j)] - (p[0] * c + p[2] * e);
            if (J) {
                (*J)(j, 0) = -c;
                (*J)(j, 1) = p[0] * std::sin(th);
                (*J)(j, 2) = -e;
                (*J)(j, 3) = -p[2] * e * t / T;
            }
        }
        return 0.5 * f.squaredNorm();
    };

    const FitParams x0 = initial_guess(win, cfg.f1);
    Eigen::Vector4d p(x0[0], x0[1], x0[2], std::clamp(std::log(x0[3]), u_min, u_max));
    Eigen::VectorXd f;
    Eigen::MatrixX4d J;
    double cost = evaluate(p, f, &J);

    PhasorEstimate est;
    est.n_used = static_cast<std::size_t>(n);
    est.cost_history.push_back(cost);
    est.status = FitStatus::kMaxIter;
    double lambda = cfg.damping0;
    Eigen::Vector4d scale = Eigen::Vector4d::Zero();

    int iter = 0;
    if (cost <= cfg.tol_residual) est.status = FitStatus::kConvergedResidual;
    while (est.status == FitStatus::kMaxIter && iter < cfg.max_iter) {
        ++iter;
        const Eigen::Vector4d g = J.transpose() * f;
        if (g.cwiseAbs().maxCoeff() <= cfg.tol_grad) {
            est.status = FitStatus::kConvergedGradient;
            break;
        }
        const Eigen::Matrix4d H = J.transpose() * J;
        // Moré scaling: running maximum of the column norms.
        scale = scale.cwiseMax(H.diagonal());
        const double floor = 1e-12 * std::max(1.0, scale.maxCoeff());
        const Eigen::Vector4d d = scale.cwiseMax(floor);

        bool accepted = false;
        while (!accepted) {
            Eigen::Matrix4d A = H;
            A.diagonal() += lambda * d;
            const Eigen::Vector4d step = A.ldlt().solve(-g);
            Eigen::Vector4d trial = p + step;
            trial[3] = std::clamp(trial[3], u_min, u_max);
            Eigen::VectorXd f_trial;
            Eigen::MatrixX4d J_trial;
            const double c_trial = evaluate(trial, f_trial, &J_trial);
            if (std::isfinite(c_trial) && c_trial < cost) {
                const double step_norm = (trial - p).norm();
                p = trial;
                f = std::move(f_trial);
                J = std::move(J_trial);
                cost = c_trial;
                est.cost_history.push_back(cost);
                lambda = std::max(lambda * cfg.damping_down, 1e-15);
                accepted = true;
                if (cost <= cfg.tol_residual) {
                    est.status = FitStatus::kConvergedResidual;
                } else if (step_norm <= cfg.tol_step * (p.norm() + cfg.tol_step)) {
                    est.status = FitStatus::kConvergedStep;
                }
            } else {
                lambda *= cfg.damping_up;
                if (lambda > 1e16) {
                    est.status = FitStatus::kStalled;
                    break;
                }
            }
        }
    }

    double A = p[0];
    double alpha = p[1];
    if (A < 0.0) {
        A = -A;
        alpha += kPi;
    }
    est.A_prime = A;
    est.alpha_prime = wrap_angle(alpha);
    est.D_prime = p[2];
    est.T_prime = std::exp(p[3]);
    est.rms = A / kSqrt2;
    est.residual_norm = std::sqrt(2.0 * cost);
    est.iterations = iter;
    return est;
}

} // namespace inrush
