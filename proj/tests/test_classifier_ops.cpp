#include <catch_amalgamated.hpp>

#include <random>

#include "gk/models.hpp"

using namespace gk;

namespace {

template <typename T>
TensorT<T> random_tensor(std::vector<std::size_t> shape, std::mt19937& rng, double lo = -1,
                         double hi = 1) {
    TensorT<T> t(std::move(shape));
    std::uniform_real_distribution<double> u(lo, hi);
    for (auto& v : t.data) v = T(u(rng));
    return t;
}

// Six nested loops, straight from the definition.
template <typename T>
TensorT<T> conv_oracle(const TensorT<T>& in, const TensorT<T>& ker, int stride, int pad) {
    const int C = int(in.dim(0)), H = int(in.dim(1)), W = int(in.dim(2));
    const int K = int(ker.dim(0)), kh = int(ker.dim(2)), kw = int(ker.dim(3));
    const int OH = (H + 2 * pad - kh) / stride + 1;
    const int OW = (W + 2 * pad - kw) / stride + 1;
    TensorT<T> out({std::size_t(K), std::size_t(OH), std::size_t(OW)});
    for (int k = 0; k < K; ++k)
        for (int oh = 0; oh < OH; ++oh)
            for (int ow = 0; ow < OW; ++ow) {
                double acc = 0;
                for (int c = 0; c < C; ++c)
                    for (int r = 0; r < kh; ++r)
                        for (int s = 0; s < kw; ++s) {
                            const int ih = oh * stride + r - pad, iw = ow * stride + s - pad;
                            if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                            acc += double(in.data[(std::size_t(c) * H + ih) * W + iw]) *
                                   double(ker.data[((std::size_t(k) * C + c) * kh + r) * kw + s]);
                        }
                out.data[(std::size_t(k) * OH + oh) * OW + ow] = T(acc);
            }
    return out;
}

}  // namespace

TEST_CASE("conv2d identity kernel") {
    std::mt19937 rng(1);
    auto in = random_tensor<float>({2, 5, 5}, rng);
    TensorT<float> ker({2, 2, 3, 3});
    ker.data[(0 * 2 + 0) * 9 + 4] = 1.0f;  // center tap, k=0 reads c=0
    ker.data[(1 * 2 + 1) * 9 + 4] = 1.0f;  // k=1 reads c=1
    auto out = conv2d(in, ker, 1, 1);
    REQUIRE(out.shape == in.shape);
    for (std::size_t i = 0; i < in.data.size(); ++i)
        CHECK(out.data[i] == Catch::Approx(in.data[i]));
}

TEST_CASE("conv2d all-ones 3x3 on all-ones 3x3") {
    TensorT<float> in({1, 3, 3});
    TensorT<float> ker({1, 1, 3, 3});
    std::fill(in.data.begin(), in.data.end(), 1.0f);
    std::fill(ker.data.begin(), ker.data.end(), 1.0f);
    auto out = conv2d(in, ker, 1, 0);
    REQUIRE(out.numel() == 1);
    CHECK(out.data[0] == Catch::Approx(9.0f));
}

TEST_CASE("conv2d matches loop oracle") {
    std::mt19937 rng(2);
    auto in = random_tensor<float>({2, 5, 5}, rng);
    auto ker = random_tensor<float>({3, 2, 3, 3}, rng);
    for (int pad : {0, 1, 2}) {
        auto a = conv2d(in, ker, 1, pad);
        auto b = conv_oracle(in, ker, 1, pad);
        REQUIRE(a.shape == b.shape);
        for (std::size_t i = 0; i < a.data.size(); ++i)
            CHECK(a.data[i] == Catch::Approx(b.data[i]).margin(1e-5));
    }
}

TEST_CASE("conv2d rejects non-integral output dims") {
    TensorT<float> in({1, 6, 6});
    TensorT<float> ker({1, 1, 3, 3});
    CHECK_THROWS_AS(conv2d(in, ker, 2, 0), std::invalid_argument);  // (6-3)%2 != 0
}

TEST_CASE("maxpool") {
    TensorT<float> c({1, 2, 2});
    c.data = {1, 2, 3, 4};
    auto out = maxpool(c, 2);
    REQUIRE(out.numel() == 1);
    CHECK(out.data[0] == 4.0f);

    TensorT<float> k({3, 4, 4});
    std::fill(k.data.begin(), k.data.end(), 7.0f);
    auto ko = maxpool(k, 2);
    for (auto v : ko.data) CHECK(v == 7.0f);

    std::mt19937 rng(3);
    auto in = random_tensor<float>({2, 6, 8}, rng);
    auto mp = maxpool(in, 2);
    for (std::size_t ch = 0; ch < 2; ++ch)
        for (int oh = 0; oh < 3; ++oh)
            for (int ow = 0; ow < 4; ++ow) {
                float want = -1e9f;
                for (int r = 0; r < 2; ++r)
                    for (int s = 0; s < 2; ++s)
                        want = std::max(want, in.data[(ch * 6 + oh * 2 + r) * 8 + ow * 2 + s]);
                CHECK(mp.data[(ch * 3 + oh) * 4 + ow] == want);
            }

    TensorT<float> odd({1, 3, 4});
    CHECK_THROWS_AS(maxpool(odd, 2), std::invalid_argument);
}

TEST_CASE("softmax_xent") {
    SECTION("uniform logits, n=10") {
        TensorT<float> logits({10});
        auto [loss, grad] = softmax_xent(logits, 3);
        CHECK(loss == Catch::Approx(std::log(10.0)).epsilon(1e-6));
        for (int i = 0; i < 10; ++i)
            CHECK(grad.data[i] == Catch::Approx(0.1 - (i == 3 ? 1.0 : 0.0)).margin(1e-6));
    }
    SECTION("shift invariance") {
        std::mt19937 rng(4);
        auto logits = random_tensor<float>({6}, rng, -3, 3);
        auto shifted = logits;
        for (auto& v : shifted.data) v += 17.5f;
        auto [l1, g1] = softmax_xent(logits, 2);
        auto [l2, g2] = softmax_xent(shifted, 2);
        CHECK(l1 == Catch::Approx(l2).margin(1e-5));
        for (std::size_t i = 0; i < g1.data.size(); ++i)
            CHECK(g1.data[i] == Catch::Approx(g2.data[i]).margin(1e-5));
    }
    SECTION("gradient matches central differences") {
        std::mt19937 rng(5);
        auto logits = random_tensor<double>({7}, rng, -2, 2);
        auto [loss, grad] = softmax_xent(logits, 4);
        const double h = 1e-5;
        for (std::size_t i = 0; i < logits.numel(); ++i) {
            auto lp = logits, lm = logits;
            lp.data[i] += h;
            lm.data[i] -= h;
            const double num =
                (softmax_xent(lp, 4).first - softmax_xent(lm, 4).first) / (2 * h);
            const double rel = std::abs(num - grad.data[i]) /
                               std::max({std::abs(num), std::abs(double(grad.data[i])), 1e-4});
            CHECK(rel < 1e-4);
        }
    }
}

TEST_CASE("adam_step") {
    SECTION("zero gradient leaves parameters unchanged") {
        TensorT<float> p({3});
        p.data = {1.0f, -2.0f, 0.5f};
        TensorT<float> g({3});
        std::vector<ParamRef<float>> refs{{"p", &p, &g}};
        AdamState<float> st;
        st.init(refs);
        adam_step(refs, st, 1e-3, 0.9, 0.99, 1e-8);
        CHECK(p.data[0] == 1.0f);
        CHECK(p.data[1] == -2.0f);
        CHECK(p.data[2] == 0.5f);
    }
    SECTION("first step with unit gradient moves by about lr") {
        // bias-corrected first step: mhat = 1, vhat = 1 -> delta = lr/(1+eps)
        TensorT<float> p({1});
        TensorT<float> g({1});
        g.data[0] = 1.0f;
        std::vector<ParamRef<float>> refs{{"p", &p, &g}};
        AdamState<float> st;
        st.init(refs);
        adam_step(refs, st, 1e-3, 0.9, 0.99, 1e-8);
        CHECK(double(p.data[0]) == Catch::Approx(-1e-3).epsilon(1e-4));
    }
    SECTION("identical scalar problems share a trajectory") {
        auto run = [] {
            TensorT<float> p({1});
            p.data[0] = 2.0f;
            TensorT<float> g({1});
            std::vector<ParamRef<float>> refs{{"p", &p, &g}};
            AdamState<float> st;
            st.init(refs);
            std::vector<float> traj;
            for (int t = 0; t < 25; ++t) {
                g.data[0] = 2.0f * p.data[0];  // d/dp of p^2
                adam_step(refs, st, 1e-2, 0.9, 0.99, 1e-8);
                traj.push_back(p.data[0]);
            }
            return traj;
        };
        CHECK(run() == run());
    }
}

TEST_CASE("patchify") {
    SECTION("side 64 patch 8") {
        BinaryMask m(64, 64, 255);
        auto t = patchify(m, 8);
        CHECK(t.dim(0) == 64);
        CHECK(t.dim(1) == 64);
        for (auto v : t.data) CHECK(v == 1.0f);
    }
    SECTION("side 64 patch 6 pads to 66 -> 121 patches") {
        BinaryMask m(64, 64, 255);
        auto t = patchify(m, 6);
        CHECK(t.dim(0) == 121);
        CHECK(t.dim(1) == 36);
        // padded rows/cols are zero: last patch row includes source rows 60..65
        // where 64,65 are padding
        const std::size_t last = 120;  // bottom-right patch
        double sum = 0;
        for (std::size_t i = 0; i < 36; ++i) sum += t.data[last * 36 + i];
        CHECK(sum == 16.0);  // 4x4 real pixels of the 6x6 tile
    }
    SECTION("all zero mask") {
        BinaryMask m(64, 64);
        auto t = patchify(m, 6);
        for (auto v : t.data) CHECK(v == 0.0f);
    }
    SECTION("row-major patch order") {
        BinaryMask m(4, 4);
        m.at(0, 2) = 255;  // second patch (row 0, col 1) for patch=2
        auto t = patchify(m, 2);
        CHECK(t.dim(0) == 4);
        CHECK(t.data[1 * 4 + 0] == 1.0f);
    }
}

TEST_CASE("mhsa") {
    SECTION("single token with identity projections is the identity") {
        Mhsa<double> attn(4, 2);
        for (std::size_t i = 0; i < 4; ++i) {
            attn.wq.w.data[i * 4 + i] = 1.0;
            attn.wk.w.data[i * 4 + i] = 1.0;
            attn.wv.w.data[i * 4 + i] = 1.0;
            attn.wo.w.data[i * 4 + i] = 1.0;
        }
        TensorT<double> x({1, 4});
        x.data = {0.3, -1.2, 0.7, 2.0};
        auto y = attn.forward(x, 1, 1, false);
        for (int i = 0; i < 4; ++i) CHECK(y.data[i] == Catch::Approx(x.data[i]).margin(1e-12));
    }
    SECTION("attention rows sum to one") {
        std::mt19937 rng(6);
        Mhsa<double> attn(4, 2);
        for (auto* w : {&attn.wq.w, &attn.wk.w, &attn.wv.w, &attn.wo.w})
            for (auto& v : w->data) v = std::uniform_real_distribution<double>(-1, 1)(rng);
        TensorT<double> x = random_tensor<double>({3, 4}, rng);
        attn.forward(x, 1, 3, true);
        // probs cache: [1*heads, 3, 3]
        for (int h = 0; h < 2; ++h)
            for (int p = 0; p < 3; ++p) {
                double sum = 0;
                for (int j = 0; j < 3; ++j) sum += attn.probs.data[(h * 3 + p) * 3 + j];
                CHECK(sum == Catch::Approx(1.0).margin(1e-9));
            }
    }
    SECTION("matches direct formula evaluation, T=3 d=4 heads=2") {
        std::mt19937 rng(7);
        Mhsa<double> attn(4, 2);
        std::uniform_real_distribution<double> u(-1, 1);
        for (auto* w : {&attn.wq.w, &attn.wk.w, &attn.wv.w, &attn.wo.w})
            for (auto& v : w->data) v = u(rng);
        for (auto* b : {&attn.wq.b, &attn.wk.b, &attn.wv.b, &attn.wo.b})
            for (auto& v : b->data) v = u(rng);
        TensorT<double> x = random_tensor<double>({3, 4}, rng);
        auto y = attn.forward(x, 1, 3, false);

        // oracle: explicit per-head computation
        const int T = 3, D = 4, H = 2, dh = 2;
        auto proj = [&](const Linear<double>& lin, int t, int i) {
            double acc = lin.b.data[i];
            for (int j = 0; j < D; ++j) acc += x.data[t * D + j] * lin.w.data[j * D + i];
            return acc;
        };
        std::vector<double> concat(T * D, 0.0);
        for (int h = 0; h < H; ++h) {
            for (int t = 0; t < T; ++t) {
                double scores[3], mx = -1e300;
                for (int s = 0; s < T; ++s) {
                    double dot = 0;
                    for (int i = 0; i < dh; ++i)
                        dot += proj(attn.wq, t, h * dh + i) * proj(attn.wk, s, h * dh + i);
                    scores[s] = dot / std::sqrt(double(dh));
                    mx = std::max(mx, scores[s]);
                }
                double denom = 0;
                for (int s = 0; s < T; ++s) denom += std::exp(scores[s] - mx);
                for (int i = 0; i < dh; ++i) {
                    double acc = 0;
                    for (int s = 0; s < T; ++s)
                        acc += std::exp(scores[s] - mx) / denom * proj(attn.wv, s, h * dh + i);
                    concat[t * D + h * dh + i] = acc;
                }
            }
        }
        for (int t = 0; t < T; ++t)
            for (int i = 0; i < D; ++i) {
                double acc = attn.wo.b.data[i];
                for (int j = 0; j < D; ++j) acc += concat[t * D + j] * attn.wo.w.data[j * D + i];
                CHECK(y.data[t * D + i] == Catch::Approx(acc).margin(1e-9));
            }
    }
}

TEST_CASE("gemm transpose paths agree with naive loops") {
    std::mt19937 rng(8);
    const std::size_t m = 3, k = 4, n = 5;
    auto A = random_tensor<double>({m, k}, rng);
    auto At = random_tensor<double>({k, m}, rng);
    auto B = random_tensor<double>({k, n}, rng);
    auto Bt = random_tensor<double>({n, k}, rng);
    std::vector<double> C(m * n);

    auto naive = [&](auto geta, auto getb) {
        std::vector<double> want(m * n, 0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t l = 0; l < k; ++l) want[i * n + j] += geta(i, l) * getb(l, j);
        return want;
    };

    gemm(A.data.data(), B.data.data(), C.data(), m, k, n);
    auto w1 = naive([&](auto i, auto l) { return A.data[i * k + l]; },
                    [&](auto l, auto j) { return B.data[l * n + j]; });
    for (std::size_t i = 0; i < m * n; ++i) CHECK(C[i] == Catch::Approx(w1[i]));

    gemm(At.data.data(), B.data.data(), C.data(), m, k, n, true, false);
    auto w2 = naive([&](auto i, auto l) { return At.data[l * m + i]; },
                    [&](auto l, auto j) { return B.data[l * n + j]; });
    for (std::size_t i = 0; i < m * n; ++i) CHECK(C[i] == Catch::Approx(w2[i]));

    gemm(A.data.data(), Bt.data.data(), C.data(), m, k, n, false, true);
    auto w3 = naive([&](auto i, auto l) { return A.data[i * k + l]; },
                    [&](auto l, auto j) { return Bt.data[j * k + l]; });
    for (std::size_t i = 0; i < m * n; ++i) CHECK(C[i] == Catch::Approx(w3[i]));
}
