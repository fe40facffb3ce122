#pragma once

// 1-D building blocks for the segmentation network: same-padded convolution
// and the convolutional block attention module (channel then spatial
// attention). Each layer reads its parameters from a flat store at a fixed
// offset and keeps whatever it needs for the backward pass in a cache.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "inrush/waveform.hpp"

namespace inrush::nn {

/// Channel-major feature map, data[c * len + l].
struct Tensor {
    int channels = 0;
    int len = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int c, int l) : channels(c), len(l), data(static_cast<std::size_t>(c) * l, 0.0) {}

    double* row(int c) { return data.data() + static_cast<std::size_t>(c) * len; }
    const double* row(int c) const { return data.data() + static_cast<std::size_t>(c) * len; }
    double& at(int c, int l) { return data[static_cast<std::size_t>(c) * len + l]; }
    double at(int c, int l) const { return data[static_cast<std::size_t>(c) * len + l]; }
};

enum class Activation { kNone, kElu, kSigmoid };

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double elu(double z) { return z > 0.0 ? z : std::expm1(z); }
inline double elu_grad(double z) { return z > 0.0 ? 1.0 : std::exp(z); }

inline double activate(Activation a, double z) {
    switch (a) {
    case Activation::kElu: return elu(z);
    case Activation::kSigmoid: return sigmoid(z);
    case Activation::kNone: break;
    }
    return z;
}

/// d(act)/dz from the pre-activation z and the output y.
inline double activate_grad(Activation a, double z, double y) {
    switch (a) {
    case Activation::kElu: return elu_grad(z);
    case Activation::kSigmoid: return y * (1.0 - y);
    case Activation::kNone: break;
    }
    return 1.0;
}

namespace detail {

// y[o] += sum_i sum_j w[o,i,j] x[i, l + j - pad], zero outside [0, len).
inline void conv_accumulate(const double* w, int in_ch, int out_ch, int k, const Tensor& x,
                            Tensor& y) {
    const int pad = (k - 1) / 2;
    const int n = x.len;
    for (int o = 0; o < out_ch; ++o) {
        double* yo = y.row(o);
        for (int i = 0; i < in_ch; ++i) {
            const double* xi = x.row(i);
            const double* wk = w + (static_cast<std::size_t>(o) * in_ch + i) * k;
            for (int j = 0; j < k; ++j) {
                const int s = j - pad;
                const double wv = wk[j];
                const int lo = std::max(0, -s);
                const int hi = std::min(n, n - s);
                for (int l = lo; l < hi; ++l) yo[l] += wv * xi[l + s];
            }
        }
    }
}

inline void conv_backward(const double* w, int in_ch, int out_ch, int k, const Tensor& x,
                          const Tensor& dz, double* dw, Tensor* dx) {
    const int pad = (k - 1) / 2;
    const int n = x.len;
    for (int o = 0; o < out_ch; ++o) {
        const double* go = dz.row(o);
        for (int i = 0; i < in_ch; ++i) {
            const double* xi = x.row(i);
            const std::size_t base = (static_cast<std::size_t>(o) * in_ch + i) * k;
            for (int j = 0; j < k; ++j) {
                const int s = j - pad;
                const int lo = std::max(0, -s);
                const int hi = std::min(n, n - s);
                double acc = 0.0;
                for (int l = lo; l < hi; ++l) acc += go[l] * xi[l + s];
                dw[base + j] += acc;
                if (dx) {
                    double* dxi = dx->row(i);
                    const double wv = w[base + j];
                    for (int l = lo; l < hi; ++l) dxi[l + s] += wv * go[l];
                }
            }
        }
    }
}

} // namespace detail

/// Same-padded 1-D convolution, stride 1, followed by an activation.
/// Parameters: weights [out][in][k], then bias [out].
struct Conv1d {
    int in_ch = 1;
    int out_ch = 1;
    int kernel = 3;
    Activation act = Activation::kNone;
    std::size_t offset = 0;

    struct Cache {
        Tensor x;
        Tensor z;
        Tensor y;
    };

    std::size_t weight_count() const { return static_cast<std::size_t>(out_ch) * in_ch * kernel; }
    std::size_t param_count() const { return weight_count() + static_cast<std::size_t>(out_ch); }
    std::size_t fan_in() const { return static_cast<std::size_t>(in_ch) * kernel; }

    Tensor forward(std::span<const double> p, const Tensor& x, Cache* cache) const {
        const double* w = p.data() + offset;
        const double* b = w + weight_count();
        Tensor z(out_ch, x.len);
        for (int o = 0; o < out_ch; ++o) std::fill(z.row(o), z.row(o) + x.len, b[o]);
        detail::conv_accumulate(w, in_ch, out_ch, kernel, x, z);
        Tensor y = z;
        if (act != Activation::kNone) {
            for (auto& v : y.data) v = activate(act, v);
        }
        if (cache) {
            cache->x = x;
            cache->z = z;
            cache->y = y;
        }
        return y;
    }

    Tensor backward(std::span<const double> p, const Cache& c, const Tensor& dy,
                    std::span<double> g, bool need_dx = true) const {
        Tensor dz = dy;
        if (act != Activation::kNone) {
            for (std::size_t k = 0; k < dz.data.size(); ++k) {
                dz.data[k] *= activate_grad(act, c.z.data[k], c.y.data[k]);
            }
        }
        double* dw = g.data() + offset;
        double* db = dw + weight_count();
        for (int o = 0; o < out_ch; ++o) {
            double s = 0.0;
            const double* r = dz.row(o);
            for (int l = 0; l < dz.len; ++l) s += r[l];
            db[o] += s;
        }
        Tensor dx(in_ch, c.x.len);
        detail::conv_backward(p.data() + offset, in_ch, out_ch, kernel, c.x, dz, dw,
                              need_dx ? &dx : nullptr);
        return dx;
    }
};

/// Convolutional block attention module on a [C, L] map.
///
/// Channel attention: Mc = sigmoid(mlp(avg_l F) + mlp(max_l F)) with a shared
/// two-layer mlp C -> C/r -> C. Spatial attention: Ms = sigmoid(conv_k([avg_c
/// G; max_c G])) with G = Mc * F. Output Ms * G.
///
/// Parameters: W1 [h][C], b1 [h], W2 [C][h], b2 [C], Ws [1][2][k], bs [1].
struct Cbam {
    int channels = 16;
    int reduction = 4;
    int spatial_kernel = 7;
    std::size_t offset = 0;

    int hidden() const { return std::max(1, channels / reduction); }

    struct Cache {
        Tensor f;
        std::vector<double> avg, mx;
        std::vector<int> mx_idx;
        std::vector<double> z_avg, z_mx;  // mlp hidden pre-activations
        std::vector<double> mc;
        Tensor g;
        Tensor pooled;                    // [2, L]
        std::vector<int> cmax_idx;
        Conv1d::Cache spatial;
        std::vector<double> ms;
    };

    Conv1d spatial_conv() const {
        Conv1d c;
        c.in_ch = 2;
        c.out_ch = 1;
        c.kernel = spatial_kernel;
        c.act = Activation::kSigmoid;
        c.offset = offset + mlp_count();
        return c;
    }

    std::size_t mlp_count() const {
        const auto h = static_cast<std::size_t>(hidden());
        const auto c = static_cast<std::size_t>(channels);
        return h * c + h + c * h + c;
    }
    std::size_t param_count() const { return mlp_count() + spatial_conv().param_count(); }

    /// Weight slices (for initialization and L2): {offset, count, fan_in}.
    struct Slice {
        std::size_t offset, count, fan_in;
    };
    std::vector<Slice> weight_slices() const {
        const auto h = static_cast<std::size_t>(hidden());
        const auto c = static_cast<std::size_t>(channels);
        const Conv1d sc = spatial_conv();
        return {{offset, h * c, c}, {offset + h * c + h, c * h, h}, {sc.offset, sc.weight_count(), sc.fan_in()}};
    }

    Tensor forward(std::span<const double> p, const Tensor& f, Cache* cache) const {
        const int C = channels, L = f.len, H = hidden();
        const double* w1 = p.data() + offset;
        const double* b1 = w1 + static_cast<std::size_t>(H) * C;
        const double* w2 = b1 + H;
        const double* b2 = w2 + static_cast<std::size_t>(C) * H;

        std::vector<double> avg(C, 0.0), mx(C), z_avg(H), z_mx(H), mc(C);
        std::vector<int> mx_idx(C, 0);
        for (int c = 0; c < C; ++c) {
            const double* r = f.row(c);
            double s = 0.0, m = r[0];
            int mi = 0;
            for (int l = 0; l < L; ++l) {
                s += r[l];
                if (r[l] > m) {
                    m = r[l];
                    mi = l;
                }
            }
            avg[c] = s / L;
            mx[c] = m;
            mx_idx[c] = mi;
        }
        for (int h = 0; h < H; ++h) {
            double sa = b1[h], sm = b1[h];
            for (int c = 0; c < C; ++c) {
                sa += w1[h * C + c] * avg[c];
                sm += w1[h * C + c] * mx[c];
            }
            z_avg[h] = sa;
            z_mx[h] = sm;
        }
        for (int c = 0; c < C; ++c) {
            double s = 2.0 * b2[c];
            for (int h = 0; h < H; ++h) s += w2[c * H + h] * (elu(z_avg[h]) + elu(z_mx[h]));
            mc[c] = sigmoid(s);
        }

        Tensor g(C, L);
        for (int c = 0; c < C; ++c) {
            const double* r = f.row(c);
            double* gr = g.row(c);
            for (int l = 0; l < L; ++l) gr[l] = mc[c] * r[l];
        }
        Tensor pooled(2, L);
        std::vector<int> cmax_idx(L, 0);
        for (int l = 0; l < L; ++l) {
            double s = 0.0, m = g.at(0, l);
            int mi = 0;
            for (int c = 0; c < C; ++c) {
                const double v = g.at(c, l);
                s += v;
                if (v > m) {
                    m = v;
                    mi = c;
                }
            }
            pooled.at(0, l) = s / C;
            pooled.at(1, l) = m;
            cmax_idx[l] = mi;
        }
        Conv1d::Cache sc;
        const Tensor msT = spatial_conv().forward(p, pooled, cache ? &sc : nullptr);

        Tensor out(C, L);
        for (int c = 0; c < C; ++c) {
            const double* gr = g.row(c);
            double* o = out.row(c);
            for (int l = 0; l < L; ++l) o[l] = msT.data[l] * gr[l];
        }
        if (cache) {
            cache->f = f;
            cache->avg = std::move(avg);
            cache->mx = std::move(mx);
            cache->mx_idx = std::move(mx_idx);
            cache->z_avg = std::move(z_avg);
            cache->z_mx = std::move(z_mx);
            cache->mc = std::move(mc);
            cache->g = std::move(g);
            cache->pooled = std::move(pooled);
            cache->cmax_idx = std::move(cmax_idx);
            cache->spatial = std::move(sc);
            cache->ms = msT.data;
        }
        return out;
    }

    Tensor backward(std::span<const double> p, const Cache& k, const Tensor& dout,
                    std::span<double> grad) const {
        const int C = channels, L = dout.len, H = hidden();
        const double* w1 = p.data() + offset;
        const double* w2 = w1 + static_cast<std::size_t>(H) * C + H;
        double* gw1 = grad.data() + offset;
        double* gb1 = gw1 + static_cast<std::size_t>(H) * C;
        double* gw2 = gb1 + H;
        double* gb2 = gw2 + static_cast<std::size_t>(C) * H;

        // out = ms * g
        Tensor dms(1, L);
        Tensor dg(C, L);
        for (int c = 0; c < C; ++c) {
            const double* d = dout.row(c);
            const double* gr = k.g.row(c);
            double* dgr = dg.row(c);
            for (int l = 0; l < L; ++l) {
                dms.data[l] += d[l] * gr[l];
                dgr[l] = d[l] * k.ms[l];
            }
        }
        const Tensor dpooled = spatial_conv().backward(p, k.spatial, dms, grad);
        for (int l = 0; l < L; ++l) {
            const double da = dpooled.at(0, l) / C;
            for (int c = 0; c < C; ++c) dg.at(c, l) += da;
            dg.at(k.cmax_idx[l], l) += dpooled.at(1, l);
        }

        // g = mc * f
        Tensor df(C, L);
        std::vector<double> dpre(C);
        for (int c = 0; c < C; ++c) {
            const double* dgr = dg.row(c);
            const double* fr = k.f.row(c);
            double* dfr = df.row(c);
            double s = 0.0;
            for (int l = 0; l < L; ++l) {
                s += dgr[l] * fr[l];
                dfr[l] = dgr[l] * k.mc[c];
            }
            dpre[c] = s * k.mc[c] * (1.0 - k.mc[c]);
        }

        // Shared mlp applied to avg and max descriptors.
        std::vector<double> dz_avg(H, 0.0), dz_mx(H, 0.0);
        for (int c = 0; c < C; ++c) {
            gb2[c] += 2.0 * dpre[c];
            for (int h = 0; h < H; ++h) {
                gw2[c * H + h] += dpre[c] * (elu(k.z_avg[h]) + elu(k.z_mx[h]));
                dz_avg[h] += w2[c * H + h] * dpre[c];
                dz_mx[h] += w2[c * H + h] * dpre[c];
            }
        }
        for (int h = 0; h < H; ++h) {
            dz_avg[h] *= elu_grad(k.z_avg[h]);
            dz_mx[h] *= elu_grad(k.z_mx[h]);
            gb1[h] += dz_avg[h] + dz_mx[h];
        }
        for (int c = 0; c < C; ++c) {
            double dv_avg = 0.0, dv_mx = 0.0;
            for (int h = 0; h < H; ++h) {
                gw1[h * C + c] += dz_avg[h] * k.avg[c] + dz_mx[h] * k.mx[c];
                dv_avg += w1[h * C + c] * dz_avg[h];
                dv_mx += w1[h * C + c] * dz_mx[h];
            }
            double* dfr = df.row(c);
            const double share = dv_avg / L;
            for (int l = 0; l < L; ++l) dfr[l] += share;
            dfr[k.mx_idx[c]] += dv_mx;
        }
        return df;
    }
};

} // namespace inrush::nn
