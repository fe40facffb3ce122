#pragma once

// Training, evaluation and gradient verification for the segmentation network.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "inrush/dataset.hpp"
#include "inrush/segmenter.hpp"

namespace inrush {

struct TrainConfig {
    double lr0 = 0.001;
    double l2_lambda = 0.001;
    int max_epochs = 300;
    int patience = 30;
    int batch_size = 32;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const {
        if (!(lr0 > 0.0)) throw ValidationError("train: lr0 must be > 0");
        if (!(l2_lambda >= 0.0)) throw ValidationError("train: l2_lambda must be >= 0");
        if (max_epochs < 1) throw ValidationError("train: max_epochs must be >= 1");
        if (patience < 1) throw ValidationError("train: patience must be >= 1");
        if (batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
    }
};

struct TrainReport {
    std::vector<double> train_loss_curve;
    std::vector<double> test_loss_curve;
    int best_epoch = 0;
    bool stopped_early = false;
    double best_test_loss = 0.0;
};

struct MetricsReport {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    std::size_t total() const { return tp + fp + tn + fn; }
};

/// A normalized input window and its target labels.
struct Example {
    std::vector<double> x;
    std::vector<double> target;
};

inline Example make_example(std::span<const double> current, const LabelSequence& labels) {
    if (current.size() != labels.size()) throw ValidationError("example: length mismatch");
    Example e;
    e.x.assign(current.begin(), current.end());
    normalize_in_place(e.x);
    e.target.assign(labels.labels.begin(), labels.labels.end());
    return e;
}

inline std::vector<Example> make_examples(const Dataset& ds, Split s) {
    std::vector<Example> out;
    for (const auto* w : ds.split(s)) out.push_back(make_example(w->current, w->label));
    return out;
}

/// Adam on the data gradient plus an L2 penalty lambda * sum(w^2) over kernel
/// weights (biases are not penalized).
class AdamL2 {
public:
    AdamL2(const TrainConfig& cfg, std::vector<std::uint8_t> penalized)
        : cfg_(cfg), mask_(std::move(penalized)), m_(mask_.size(), 0.0), v_(mask_.size(), 0.0) {}

    void step(std::vector<double>& w, std::span<const double> data_grad) {
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
        const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
        for (std::size_t k = 0; k < w.size(); ++k) {
            const double g = data_grad[k] + (mask_[k] ? 2.0 * cfg_.l2_lambda * w[k] : 0.0);
            m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * g;
            v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * g * g;
            w[k] -= cfg_.lr0 * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + cfg_.eps);
        }
    }

    long steps() const { return t_; }

private:
    TrainConfig cfg_;
    std::vector<std::uint8_t> mask_;
    std::vector<double> m_, v_;
    long t_ = 0;
};

/// MSE of one example; when `grad` is given, adds scale * d(mse)/d(weights).
inline double example_loss(const SegmenterModel& m, std::span<const double> weights, const Example& e,
                           std::span<double> grad = {}, double scale = 1.0) {
    if (grad.empty()) {
        return mse_loss(e.target, detail::forward_impl(m, weights, e.x, nullptr).data);
    }
    ForwardTrace trace;
    const auto y = detail::forward_impl(m, weights, e.x, &trace).data;
    const double n = static_cast<double>(y.size());
    std::vector<double> dout(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) dout[k] = scale * 2.0 * (y[k] - e.target[k]) / n;
    detail::backward_impl(m, weights, trace, dout, grad);
    return mse_loss(e.target, y);
}

inline double mean_loss(const SegmenterModel& m, const std::vector<Example>& xs) {
    if (xs.empty()) throw ValidationError("loss: empty split");
    double s = 0.0;
    for (const auto& e : xs) s += example_loss(m, m.weights, e);
    return s / static_cast<double>(xs.size());
}

using EpochCallback = std::function<void(int epoch, double train_loss, double test_loss)>;

/// Minibatch Adam with early stopping on the test loss. Returns the model at
/// the best test-loss epoch.
inline std::pair<SegmenterModel, TrainReport> train(SegmenterModel model, const std::vector<Example>& train_set,
                                                    const std::vector<Example>& test_set,
                                                    const TrainConfig& cfg, const EpochCallback& on_epoch = {}) {
    cfg.validate();
    if (train_set.empty() || test_set.empty()) throw ValidationError("train: empty split");
    AdamL2 opt(cfg, model.weight_mask());
    TrainReport rep;
    std::vector<double> best = model.weights;
    double best_loss = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> grad(model.weights.size());

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::mt19937_64 rng(mix_seed(cfg.seed, 0xe90c0000ULL + static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
            const double scale = 1.0 / static_cast<double>(e - b);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t k = b; k < e; ++k) {
                loss_sum += example_loss(model, model.weights, train_set[order[k]], grad, scale);
            }
            opt.step(model.weights, grad);
        }
        const double train_loss = loss_sum / static_cast<double>(order.size());
        const double test_loss = mean_loss(model, test_set);
        rep.train_loss_curve.push_back(train_loss);
        rep.test_loss_curve.push_back(test_loss);
        if (on_epoch) on_epoch(epoch, train_loss, test_loss);
        if (test_loss < best_loss) {
            best_loss = test_loss;
            best = model.weights;
            rep.best_epoch = epoch;
        } else if (epoch - rep.best_epoch >= cfg.patience) {
            rep.stopped_early = epoch + 1 < cfg.max_epochs;
            break;
        }
    }
    model.weights = std::move(best);
    rep.best_test_loss = best_loss;
    return {std::move(model), std::move(rep)};
}

inline std::pair<SegmenterModel, TrainReport> train(SegmenterModel model, const Dataset& ds,
                                                    const TrainConfig& cfg, const EpochCallback& on_epoch = {}) {
    return train(std::move(model), make_examples(ds, Split::kTrain), make_examples(ds, Split::kTest), cfg,
                 on_epoch);
}

inline std::string training_log_csv(const TrainReport& r) {
    std::string out = "epoch,train_loss,test_loss\n";
    for (std::size_t k = 0; k < r.train_loss_curve.size(); ++k) {
        out += std::to_string(k) + "," + fmt_double(r.train_loss_curve[k]) + "," +
               fmt_double(r.test_loss_curve[k]) + "\n";
    }
    return out;
}

/// Largest relative discrepancy between the analytic gradient of the example
/// MSE and central differences with step h. Entries where both magnitudes are
/// below `floor` are compared on an absolute scale of `floor`.
inline double gradients_check(const SegmenterModel& m, const Example& e, double h = 1e-5,
                              double floor = 1e-6) {
    std::vector<double> grad(m.weights.size(), 0.0);
    example_loss(m, m.weights, e, grad);
    std::vector<double> w = m.weights;
    double worst = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double keep = w[k];
        w[k] = keep + h;
        const double lp = example_loss(m, w, e);
        w[k] = keep - h;
        const double lm = example_loss(m, w, e);
        w[k] = keep;
        const double fd = (lp - lm) / (2.0 * h);
        const double denom = std::max({std::abs(fd), std::abs(grad[k]), floor});
        worst = std::max(worst, std::abs(fd - grad[k]) / denom);
    }
    return worst;
}

inline MetricsReport metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
    MetricsReport r;
    r.tp = tp;
    r.fp = fp;
    r.tn = tn;
    r.fn = fn;
    const auto tot = static_cast<double>(r.total());
    r.accuracy = tot > 0 ? static_cast<double>(tp + tn) / tot : 0.0;
    r.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    r.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    r.f1 = r.precision + r.recall > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

/// Confusion counts with non-inrush (label 1) as the positive class.
inline MetricsReport score_labels(const std::vector<LabelSequence>& truth, const std::vector<LabelSequence>& pred) {
    if (truth.size() != pred.size()) throw ValidationError("metrics: count mismatch");
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i].size() != pred[i].size()) throw ValidationError("metrics: length mismatch");
        for (std::size_t k = 0; k < truth[i].size(); ++k) {
            const bool t = truth[i].labels[k] != 0;
            const bool p = pred[i].labels[k] != 0;
            if (t && p) ++tp;
            else if (!t && p) ++fp;
            else if (!t && !p) ++tn;
            else ++fn;
        }
    }
    return metrics_from_counts(tp, fp, tn, fn);
}

inline MetricsReport evaluate(const SegmenterModel& m, const std::vector<Example>& xs) {
    if (xs.empty()) throw ValidationError("evaluate: empty split");
    std::vector<LabelSequence> truth, pred;
    for (const auto& e : xs) {
        LabelSequence t;
        t.labels.assign(e.target.begin(), e.target.end());
        truth.push_back(std::move(t));
        pred.push_back(predict_labels(m, e.x));
    }
    return score_labels(truth, pred);
}

inline MetricsReport evaluate(const SegmenterModel& m, const Dataset& ds, Split s) {
    return evaluate(m, make_examples(ds, s));
}

} // namespace inrush
