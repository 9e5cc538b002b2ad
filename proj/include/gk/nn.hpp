#pragma once

// Layer zoo with hand-written backward passes. Every layer caches what its
// backward needs, so instances are single-stream; clone the model for
// concurrent inference.

#include <cmath>
#include <random>

#include "gk/error.hpp"
#include "gk/image.hpp"
#include "gk/rng.hpp"
#include "gk/tensor.hpp"

namespace gk {

// ---------------------------------------------------------------- init

template <typename T>
void fill_he_uniform(TensorT<T>& w, std::size_t fan_in, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (auto& v : w.data) v = static_cast<T>(u(rng));
}

// Normal(0, sigma) with resampling beyond 2 sigma.
template <typename T>
void fill_trunc_normal(TensorT<T>& w, double sigma, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, sigma);
    for (auto& v : w.data) {
        double x = n(rng);
        while (std::abs(x) > 2.0 * sigma) x = n(rng);
        v = static_cast<T>(x);
    }
}

// ---------------------------------------------------------------- ops

// Cross-correlation of input [C,H,W] with kernels [K,C,kh,kw], zero padding.
template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& kernels, int stride, int pad) {
    if (input.shape.size() != 3 || kernels.shape.size() != 4)
        throw std::invalid_argument("conv2d: want input [C,H,W], kernels [K,C,kh,kw]");
    const int C = int(input.dim(0)), H = int(input.dim(1)), W = int(input.dim(2));
    const int K = int(kernels.dim(0)), kh = int(kernels.dim(2)), kw = int(kernels.dim(3));
    if (int(kernels.dim(1)) != C) throw std::invalid_argument("conv2d: channel mismatch");
    if (kh % 2 == 0 || kw % 2 == 0) throw std::invalid_argument("conv2d: kernel dims must be odd");
    if (stride < 1 || pad < 0) throw std::invalid_argument("conv2d: bad stride/pad");
    if ((H + 2 * pad - kh) % stride != 0 || (W + 2 * pad - kw) % stride != 0)
        throw std::invalid_argument("conv2d: non-integral output dims");
    const int OH = (H + 2 * pad - kh) / stride + 1;
    const int OW = (W + 2 * pad - kw) / stride + 1;

    TensorT<T> out({std::size_t(K), std::size_t(OH), std::size_t(OW)});
    for (int k = 0; k < K; ++k)
        for (int c = 0; c < C; ++c) {
            const T* in = input.data.data() + std::size_t(c) * H * W;
            const T* ker = kernels.data.data() + (std::size_t(k) * C + c) * kh * kw;
            T* o = out.data.data() + std::size_t(k) * OH * OW;
            for (int oh = 0; oh < OH; ++oh)
                for (int ow = 0; ow < OW; ++ow) {
                    T acc = 0;
                    for (int r = 0; r < kh; ++r) {
                        const int ih = oh * stride + r - pad;
                        if (ih < 0 || ih >= H) continue;
                        for (int s = 0; s < kw; ++s) {
                            const int iw = ow * stride + s - pad;
                            if (iw < 0 || iw >= W) continue;
                            acc += in[std::size_t(ih) * W + iw] * ker[std::size_t(r) * kw + s];
                        }
                    }
                    o[std::size_t(oh) * OW + ow] += acc;
                }
        }
    return out;
}

// Per-window max over non-overlapping size x size windows.
template <typename T>
TensorT<T> maxpool(const TensorT<T>& input, int size = 2) {
    if (input.shape.size() != 3) throw std::invalid_argument("maxpool: want [C,H,W]");
    const int C = int(input.dim(0)), H = int(input.dim(1)), W = int(input.dim(2));
    if (H % size != 0 || W % size != 0)
        throw std::invalid_argument("maxpool: dims not divisible by window");
    TensorT<T> out({std::size_t(C), std::size_t(H / size), std::size_t(W / size)});
    for (int c = 0; c < C; ++c)
        for (int oh = 0; oh < H / size; ++oh)
            for (int ow = 0; ow < W / size; ++ow) {
                T best = input.data[(std::size_t(c) * H + oh * size) * W + ow * size];
                for (int r = 0; r < size; ++r)
                    for (int s = 0; s < size; ++s)
                        best = std::max(best, input.data[(std::size_t(c) * H + oh * size + r) * W +
                                                         ow * size + s]);
                out.data[(std::size_t(c) * (H / size) + oh) * (W / size) + ow] = best;
            }
    return out;
}

// Numerically stable softmax cross-entropy for one sample.
template <typename T>
std::pair<double, TensorT<T>> softmax_xent(const TensorT<T>& logits, int target) {
    const std::size_t n = logits.numel();
    if (target < 0 || std::size_t(target) >= n)
        throw std::invalid_argument("softmax_xent: target out of range");
    T mx = logits.data[0];
    for (auto v : logits.data) mx = std::max(mx, v);
    double denom = 0.0;
    TensorT<T> grad(logits.shape);
    for (std::size_t i = 0; i < n; ++i) denom += std::exp(double(logits.data[i] - mx));
    const double log_denom = std::log(denom);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = std::exp(double(logits.data[i] - mx) - log_denom);
        grad.data[i] = static_cast<T>(p);
    }
    const double loss = -(double(logits.data[target] - mx) - log_denom);
    grad.data[target] -= T(1);
    return {loss, std::move(grad)};
}

// Batched: logits [B,n], loss = mean over rows, dlogits scaled by 1/B.
template <typename T>
double softmax_xent_batch(const TensorT<T>& logits, const std::vector<int>& targets,
                          TensorT<T>& dlogits, int* correct = nullptr) {
    const std::size_t B = logits.dim(0), n = logits.dim(1);
    dlogits = TensorT<T>(logits.shape);
    double total = 0.0;
    int hit = 0;
    for (std::size_t b = 0; b < B; ++b) {
        const T* row = logits.data.data() + b * n;
        T mx = row[0];
        std::size_t arg = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (row[i] > mx) {
                mx = row[i];
                arg = i;
            }
        if (int(arg) == targets[b]) hit++;
        double denom = 0.0;
        for (std::size_t i = 0; i < n; ++i) denom += std::exp(double(row[i] - mx));
        const double log_denom = std::log(denom);
        for (std::size_t i = 0; i < n; ++i)
            dlogits.data[b * n + i] =
                static_cast<T>(std::exp(double(row[i] - mx) - log_denom) / double(B));
        dlogits.data[b * n + targets[b]] -= T(1) / T(B);
        total += -(double(row[targets[b]] - mx) - log_denom);
    }
    if (correct) *correct = hit;
    return total / double(B);
}

// ---------------------------------------------------------------- layers

template <typename T>
struct Linear {
    TensorT<T> w;  // [in, out]
    TensorT<T> b;  // [out]
    TensorT<T> dw, db;
    TensorT<T> cached_x;

    Linear() = default;
    Linear(std::size_t in, std::size_t out) : w({in, out}), b({out}), dw({in, out}), db({out}) {}

    std::size_t in() const { return w.dim(0); }
    std::size_t out() const { return w.dim(1); }

    // x: [M, in] -> [M, out]
    TensorT<T> forward(const TensorT<T>& x, bool cache) {
        const std::size_t M = x.numel() / in();
        TensorT<T> y({M, out()});
        gemm(x.data.data(), w.data.data(), y.data.data(), M, in(), out());
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t o = 0; o < out(); ++o) y.data[m * out() + o] += b.data[o];
        if (cache) cached_x = x;
        return y;
    }

    TensorT<T> backward(const TensorT<T>& dy) {
        const std::size_t M = dy.numel() / out();
        gemm(cached_x.data.data(), dy.data.data(), dw.data.data(), in(), M, out(), true, false,
             true);
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t o = 0; o < out(); ++o) db.data[o] += dy.data[m * out() + o];
        TensorT<T> dx({M, in()});
        gemm(dy.data.data(), w.data.data(), dx.data.data(), M, out(), in(), false, true);
        return dx;
    }

    void collect(const std::string& prefix, std::vector<ParamRef<T>>& out_refs) {
        out_refs.push_back({prefix + ".w", &w, &dw});
        out_refs.push_back({prefix + ".b", &b, &db});
    }
};

template <typename T>
struct ReLU {
    TensorT<T> cached_x;
    TensorT<T> forward(TensorT<T> x, bool cache) {
        if (cache) cached_x = x;
        for (auto& v : x.data) v = v > T(0) ? v : T(0);
        return x;
    }
    TensorT<T> backward(TensorT<T> dy) {
        for (std::size_t i = 0; i < dy.data.size(); ++i)
            if (cached_x.data[i] <= T(0)) dy.data[i] = T(0);
        return dy;
    }
};

template <typename T>
struct GeLU {
    TensorT<T> cached_x;
    static T phi(T x) { return T(0.5) * (T(1) + std::erf(x / T(std::sqrt(2.0)))); }
    TensorT<T> forward(TensorT<T> x, bool cache) {
        if (cache) cached_x = x;
        for (auto& v : x.data) v = v * phi(v);
        return x;
    }
    TensorT<T> backward(TensorT<T> dy) {
        constexpr double inv_sqrt_2pi = 0.3989422804014327;
        for (std::size_t i = 0; i < dy.data.size(); ++i) {
            const T x = cached_x.data[i];
            const T pdf = T(inv_sqrt_2pi * std::exp(-0.5 * double(x) * double(x)));
            dy.data[i] *= phi(x) + x * pdf;
        }
        return dy;
    }
};

// Normalizes the trailing dim of [M, D] rows.
template <typename T>
struct LayerNorm {
    TensorT<T> gamma, beta, dgamma, dbeta;
    TensorT<T> cached_xhat, cached_inv_sd;
    static constexpr double kEps = 1e-5;

    LayerNorm() = default;
    explicit LayerNorm(std::size_t d) : gamma({d}), beta({d}), dgamma({d}), dbeta({d}) {
        std::fill(gamma.data.begin(), gamma.data.end(), T(1));
    }
    std::size_t dimension() const { return gamma.dim(0); }

    TensorT<T> forward(const TensorT<T>& x, bool cache) {
        const std::size_t D = dimension(), M = x.numel() / D;
        TensorT<T> y({M, D});
        if (cache) {
            cached_xhat = TensorT<T>({M, D});
            cached_inv_sd = TensorT<T>({M});
        }
        for (std::size_t m = 0; m < M; ++m) {
            const T* row = x.data.data() + m * D;
            double mu = 0.0;
            for (std::size_t i = 0; i < D; ++i) mu += row[i];
            mu /= double(D);
            double var = 0.0;
            for (std::size_t i = 0; i < D; ++i) var += (row[i] - mu) * (row[i] - mu);
            var /= double(D);
            const double inv_sd = 1.0 / std::sqrt(var + kEps);
            for (std::size_t i = 0; i < D; ++i) {
                const T xhat = static_cast<T>((row[i] - mu) * inv_sd);
                if (cache) cached_xhat.data[m * D + i] = xhat;
                y.data[m * D + i] = xhat * gamma.data[i] + beta.data[i];
            }
            if (cache) cached_inv_sd.data[m] = static_cast<T>(inv_sd);
        }
        return y;
    }

    TensorT<T> backward(const TensorT<T>& dy) {
        const std::size_t D = dimension(), M = dy.numel() / D;
        TensorT<T> dx({M, D});
        for (std::size_t m = 0; m < M; ++m) {
            const T* dyr = dy.data.data() + m * D;
            const T* xh = cached_xhat.data.data() + m * D;
            double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
            for (std::size_t i = 0; i < D; ++i) {
                const double dxhat = double(dyr[i]) * double(gamma.data[i]);
                sum_dxhat += dxhat;
                sum_dxhat_xhat += dxhat * double(xh[i]);
                dgamma.data[i] += dyr[i] * xh[i];
                dbeta.data[i] += dyr[i];
            }
            const double inv_sd = cached_inv_sd.data[m];
            for (std::size_t i = 0; i < D; ++i) {
                const double dxhat = double(dyr[i]) * double(gamma.data[i]);
                dx.data[m * D + i] = static_cast<T>(
                    inv_sd * (dxhat - sum_dxhat / double(D) -
                              double(xh[i]) * sum_dxhat_xhat / double(D)));
            }
        }
        return dx;
    }

    void collect(const std::string& prefix, std::vector<ParamRef<T>>& out_refs) {
        out_refs.push_back({prefix + ".g", &gamma, &dgamma});
        out_refs.push_back({prefix + ".b", &beta, &dbeta});
    }
};

// Inverted dropout; active only when forward is called in training mode.
template <typename T>
struct Dropout {
    double rate = 0.0;
    std::vector<std::uint8_t> mask;

    TensorT<T> forward(TensorT<T> x, bool train, std::mt19937_64& rng) {
        if (!train || rate <= 0.0) {
            mask.clear();
            return x;
        }
        mask.assign(x.data.size(), 0);
        std::bernoulli_distribution keep(1.0 - rate);
        const T scale = T(1.0 / (1.0 - rate));
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            if (keep(rng)) {
                mask[i] = 1;
                x.data[i] *= scale;
            } else {
                x.data[i] = T(0);
            }
        }
        return x;
    }

    TensorT<T> backward(TensorT<T> dy) {
        if (mask.empty()) return dy;
        const T scale = T(1.0 / (1.0 - rate));
        for (std::size_t i = 0; i < dy.data.size(); ++i)
            dy.data[i] = mask[i] ? dy.data[i] * scale : T(0);
        return dy;
    }
};

// Multi-head self-attention over [B, P, D] with per-head scaled dot-product
// (scale 1/sqrt(D/heads)), softmax over keys, concatenated heads, output
// projection.
template <typename T>
struct Mhsa {
    int heads = 1;
    Linear<T> wq, wk, wv, wo;
    TensorT<T> q, k, v, probs, concat;  // caches
    std::size_t cached_b = 0, cached_p = 0;

    Mhsa() = default;
    Mhsa(std::size_t d, int h) : heads(h), wq(d, d), wk(d, d), wv(d, d), wo(d, d) {
        if (d % std::size_t(h) != 0) throw std::invalid_argument("mhsa: heads must divide dim");
    }
    std::size_t dimension() const { return wq.in(); }

    // x: [B*P, D] with row b*P+p
    TensorT<T> forward(const TensorT<T>& x, std::size_t B, std::size_t P, bool cache) {
        const std::size_t D = dimension(), dh = D / heads;
        const T scale = T(1.0 / std::sqrt(double(dh)));
        q = wq.forward(x, cache);
        k = wk.forward(x, cache);
        v = wv.forward(x, cache);
        concat = TensorT<T>({B * P, D});
        if (cache) probs = TensorT<T>({B * std::size_t(heads) * P * P});
        std::vector<T> qh(P * dh), kh(P * dh), vh(P * dh), sc(P * P), oh(P * dh);
        for (std::size_t b = 0; b < B; ++b)
            for (int h = 0; h < heads; ++h) {
                const std::size_t off = std::size_t(h) * dh;
                for (std::size_t p = 0; p < P; ++p)
                    for (std::size_t i = 0; i < dh; ++i) {
                        qh[p * dh + i] = q.data[(b * P + p) * D + off + i];
                        kh[p * dh + i] = k.data[(b * P + p) * D + off + i];
                        vh[p * dh + i] = v.data[(b * P + p) * D + off + i];
                    }
                gemm(qh.data(), kh.data(), sc.data(), P, dh, P, false, true);
                for (std::size_t p = 0; p < P; ++p) {
                    T* row = sc.data() + p * P;
                    T mx = row[0];
                    for (std::size_t j = 0; j < P; ++j) {
                        row[j] *= scale;
                        mx = std::max(mx, row[j]);
                    }
                    double denom = 0.0;
                    for (std::size_t j = 0; j < P; ++j) denom += std::exp(double(row[j] - mx));
                    for (std::size_t j = 0; j < P; ++j)
                        row[j] = static_cast<T>(std::exp(double(row[j] - mx)) / denom);
                }
                if (cache) {
                    T* dst = probs.data.data() + ((b * heads + h) * P * P);
                    std::copy(sc.begin(), sc.end(), dst);
                }
                gemm(sc.data(), vh.data(), oh.data(), P, P, dh);
                for (std::size_t p = 0; p < P; ++p)
                    for (std::size_t i = 0; i < dh; ++i)
                        concat.data[(b * P + p) * D + off + i] = oh[p * dh + i];
            }
        cached_b = B;
        cached_p = P;
        return wo.forward(concat, cache);
    }

    TensorT<T> backward(const TensorT<T>& dy) {
        const std::size_t D = dimension(), dh = D / heads;
        const std::size_t B = cached_b, P = cached_p;
        const T scale = T(1.0 / std::sqrt(double(dh)));
        TensorT<T> dconcat = wo.backward(dy);
        TensorT<T> dq({B * P, D}), dk({B * P, D}), dv({B * P, D});
        std::vector<T> qh(P * dh), kh(P * dh), vh(P * dh), doh(P * dh);
        std::vector<T> dp(P * P), da(P * P), dqh(P * dh), dkh(P * dh), dvh(P * dh);
        for (std::size_t b = 0; b < B; ++b)
            for (int h = 0; h < heads; ++h) {
                const std::size_t off = std::size_t(h) * dh;
                for (std::size_t p = 0; p < P; ++p)
                    for (std::size_t i = 0; i < dh; ++i) {
                        qh[p * dh + i] = q.data[(b * P + p) * D + off + i];
                        kh[p * dh + i] = k.data[(b * P + p) * D + off + i];
                        vh[p * dh + i] = v.data[(b * P + p) * D + off + i];
                        doh[p * dh + i] = dconcat.data[(b * P + p) * D + off + i];
                    }
                const T* pr = probs.data.data() + ((b * heads + h) * P * P);
                // dV = P^T dO ; dP = dO V^T
                gemm(pr, doh.data(), dvh.data(), P, P, dh, true, false);
                gemm(doh.data(), vh.data(), dp.data(), P, dh, P, false, true);
                // softmax backward per row, then undo the scale
                for (std::size_t p = 0; p < P; ++p) {
                    double dot = 0.0;
                    for (std::size_t j = 0; j < P; ++j)
                        dot += double(dp[p * P + j]) * double(pr[p * P + j]);
                    for (std::size_t j = 0; j < P; ++j)
                        da[p * P + j] = static_cast<T>(
                            double(pr[p * P + j]) * (double(dp[p * P + j]) - dot) * double(scale));
                }
                gemm(da.data(), kh.data(), dqh.data(), P, P, dh);
                gemm(da.data(), qh.data(), dkh.data(), P, P, dh, true, false);
                for (std::size_t p = 0; p < P; ++p)
                    for (std::size_t i = 0; i < dh; ++i) {
                        dq.data[(b * P + p) * D + off + i] = dqh[p * dh + i];
                        dk.data[(b * P + p) * D + off + i] = dkh[p * dh + i];
                        dv.data[(b * P + p) * D + off + i] = dvh[p * dh + i];
                    }
            }
        TensorT<T> dx = wq.backward(dq);
        TensorT<T> dxk = wk.backward(dk);
        TensorT<T> dxv = wv.backward(dv);
        for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += dxk.data[i] + dxv.data[i];
        return dx;
    }

    void collect(const std::string& prefix, std::vector<ParamRef<T>>& out_refs) {
        wq.collect(prefix + ".q", out_refs);
        wk.collect(prefix + ".k", out_refs);
        wv.collect(prefix + ".v", out_refs);
        wo.collect(prefix + ".o", out_refs);
    }
};

// ---------------------------------------------------------------- adam

template <typename T>
struct AdamState {
    std::vector<TensorT<T>> m, v;
    long t = 0;

    void init(const std::vector<ParamRef<T>>& params) {
        m.clear();
        v.clear();
        for (const auto& p : params) {
            m.emplace_back(p.value->shape);
            v.emplace_back(p.value->shape);
        }
        t = 0;
    }
};

// Bias-corrected Adam update; gradients are consumed (zeroed) by the caller.
template <typename T>
void adam_step(const std::vector<ParamRef<T>>& params, AdamState<T>& state, double lr,
               double beta1, double beta2, double eps) {
    state.t += 1;
    const double bc1 = 1.0 - std::pow(beta1, double(state.t));
    const double bc2 = 1.0 - std::pow(beta2, double(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        TensorT<T>& p = *params[i].value;
        TensorT<T>& g = *params[i].grad;
        TensorT<T>& m = state.m[i];
        TensorT<T>& v = state.v[i];
        for (std::size_t j = 0; j < p.data.size(); ++j) {
            const double gj = g.data[j];
            m.data[j] = static_cast<T>(beta1 * m.data[j] + (1.0 - beta1) * gj);
            v.data[j] = static_cast<T>(beta2 * v.data[j] + (1.0 - beta2) * gj * gj);
            const double mhat = m.data[j] / bc1;
            const double vhat = v.data[j] / bc2;
            p.data[j] = static_cast<T>(p.data[j] - lr * mhat / (std::sqrt(vhat) + eps));
        }
    }
}

}  // namespace gk
