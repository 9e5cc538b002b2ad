#pragma once

// The two desk-scale classifiers: a tiny CNN (3x {conv3x3-ReLU-maxpool} then
// dense-ReLU-dense) and a micro vision transformer (patch embedding, learned
// positional embedding, pre-norm encoder blocks, mean-pooled MLP head).

#include <map>
#include <memory>
#include <variant>

#include "gk/nn.hpp"

namespace gk {

enum class Arch { tiny_cnn, micro_vit };

inline const char* arch_name(Arch a) { return a == Arch::tiny_cnn ? "tiny_cnn" : "micro_vit"; }
inline Arch arch_from_name(const std::string& s) {
    if (s == "tiny_cnn") return Arch::tiny_cnn;
    if (s == "micro_vit") return Arch::micro_vit;
    throw data_error("unknown arch '" + s + "' (want tiny_cnn or micro_vit)");
}

struct ClassifierConfig {
    int n_classes = 4;
    Arch arch = Arch::tiny_cnn;
    int input_side = 64;
    int batch_size = 64;
    int epochs = 30;
    double lr0 = 1e-4;
    double lr_after_epoch10 = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.99;
    double adam_eps = 1e-8;
    int patch = 6;
    int proj_dim = 64;
    int heads = 4;
    int layers = 8;
    double dropout = 0.5;
    std::vector<int> mlp_head = {2048, 1024};
    std::vector<int> conv_channels = {8, 16, 32};
    int cnn_hidden = 64;
    std::uint64_t seed = 0;

    // learning rate jumps from lr0 to lr_after_epoch10 once epoch > 10
    double lr_at_epoch(int epoch_1based) const {
        return epoch_1based <= 10 ? lr0 : lr_after_epoch10;
    }

    void validate() const {
        if (n_classes < 2) throw std::invalid_argument("classifier: n_classes >= 2 required");
        if (proj_dim % heads != 0)
            throw std::invalid_argument("classifier: heads must divide proj_dim");
        if (dropout < 0.0 || dropout >= 1.0)
            throw std::invalid_argument("classifier: dropout must be in [0,1)");
        if (patch < 1) throw std::invalid_argument("classifier: patch must be >= 1");
        if (input_side % 8 != 0)
            throw std::invalid_argument("classifier: input_side must be divisible by 8");
        if (batch_size < 1 || epochs < 1)
            throw std::invalid_argument("classifier: bad batch size or epochs");
        for (int u : mlp_head)
            if (u < 1) throw std::invalid_argument("classifier: bad mlp_head unit");
    }
};

struct GesturePrediction {
    int label_index = 0;
    std::vector<double> probs;
    long frame_index = 0;
    double t_ms = 0.0;
};

// Splits a mask into row-major patch x patch tiles, zero-padding right and
// bottom to the next multiple, flattening each tile, and scaling to {0,1}.
template <typename T = float>
TensorT<T> patchify(const BinaryMask& mask, int patch) {
    if (mask.width != mask.height) throw std::invalid_argument("patchify: mask must be square");
    if (patch < 1) throw std::invalid_argument("patchify: patch must be >= 1");
    const int side = mask.width;
    const int padded = ((side + patch - 1) / patch) * patch;
    if (patch > padded) throw std::invalid_argument("patchify: patch exceeds padded side");
    const int per_axis = padded / patch;
    TensorT<T> out({std::size_t(per_axis) * per_axis, std::size_t(patch) * patch});
    for (int pr = 0; pr < per_axis; ++pr)
        for (int pc = 0; pc < per_axis; ++pc) {
            T* dst = out.data.data() + (std::size_t(pr) * per_axis + pc) * patch * patch;
            for (int r = 0; r < patch; ++r)
                for (int c = 0; c < patch; ++c) {
                    const int sr = pr * patch + r, sc = pc * patch + c;
                    dst[r * patch + c] =
                        (sr < side && sc < side && mask.at(sr, sc) != 0) ? T(1) : T(0);
                }
        }
    return out;
}

// ---------------------------------------------------------------- tiny CNN

template <typename T>
class TinyCnn {
public:
    TinyCnn() = default;
    TinyCnn(const ClassifierConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
        const auto& ch = cfg.conv_channels;
        int in_c = 1;
        for (int c : ch) {
            conv_w_.emplace_back(
                TensorT<T>({std::size_t(c), std::size_t(in_c), 3, 3}));
            conv_b_.emplace_back(TensorT<T>({std::size_t(c)}));
            fill_he_uniform(conv_w_.back(), std::size_t(in_c) * 9, rng);
            in_c = c;
        }
        conv_dw_.resize(ch.size());
        conv_db_.resize(ch.size());
        for (std::size_t i = 0; i < ch.size(); ++i) {
            conv_dw_[i] = TensorT<T>(conv_w_[i].shape);
            conv_db_[i] = TensorT<T>(conv_b_[i].shape);
        }
        const int reduced = cfg.input_side >> int(ch.size());
        flat_dim_ = std::size_t(ch.back()) * reduced * reduced;
        fc1_ = Linear<T>(flat_dim_, std::size_t(cfg.cnn_hidden));
        fc2_ = Linear<T>(std::size_t(cfg.cnn_hidden), std::size_t(cfg.n_classes));
        fill_he_uniform(fc1_.w, flat_dim_, rng);
        fill_he_uniform(fc2_.w, std::size_t(cfg.cnn_hidden), rng);
    }

    // x: [B, side*side] in {0,1}
    TensorT<T> forward(const TensorT<T>& x, bool cache) {
        const std::size_t B = x.dim(0);
        const int side = cfg_.input_side;
        if (x.dim(1) != std::size_t(side) * side)
            throw std::invalid_argument("tiny_cnn: input side mismatch");
        if (cache) {
            pre_relu_.assign(conv_w_.size(), {});
            post_pool_.assign(conv_w_.size() + 1, {});
        }
        std::vector<TensorT<T>> cur(B);
        for (std::size_t b = 0; b < B; ++b) {
            cur[b] = TensorT<T>({1, std::size_t(side), std::size_t(side)});
            std::copy(x.data.begin() + b * cur[b].numel(),
                      x.data.begin() + (b + 1) * cur[b].numel(), cur[b].data.begin());
        }
        if (cache) post_pool_[0] = cur;
        for (std::size_t l = 0; l < conv_w_.size(); ++l) {
            if (cache) pre_relu_[l].resize(B);
            for (std::size_t b = 0; b < B; ++b) {
                TensorT<T> y = conv2d(cur[b], conv_w_[l], 1, 1);
                const std::size_t hw = y.dim(1) * y.dim(2);
                for (std::size_t k = 0; k < y.dim(0); ++k)
                    for (std::size_t i = 0; i < hw; ++i) y.data[k * hw + i] += conv_b_[l].data[k];
                if (cache) pre_relu_[l][b] = y;
                for (auto& v : y.data) v = v > T(0) ? v : T(0);
                cur[b] = maxpool(y, 2);
            }
            if (cache) post_pool_[l + 1] = cur;
        }
        TensorT<T> flat({B, flat_dim_});
        for (std::size_t b = 0; b < B; ++b)
            std::copy(cur[b].data.begin(), cur[b].data.end(), flat.data.begin() + b * flat_dim_);
        TensorT<T> h = fc1_.forward(flat, cache);
        h = relu1_.forward(std::move(h), cache);
        return fc2_.forward(h, cache);
    }

    TensorT<T> backward(const TensorT<T>& dlogits) {
        TensorT<T> dh = fc2_.backward(dlogits);
        dh = relu1_.backward(std::move(dh));
        TensorT<T> dflat = fc1_.backward(dh);
        const std::size_t B = dflat.dim(0);

        std::vector<TensorT<T>> dcur(B);
        for (std::size_t b = 0; b < B; ++b) {
            dcur[b] = TensorT<T>(post_pool_.back()[b].shape);
            std::copy(dflat.data.begin() + b * flat_dim_, dflat.data.begin() + (b + 1) * flat_dim_,
                      dcur[b].data.begin());
        }
        for (int l = int(conv_w_.size()) - 1; l >= 0; --l) {
            for (std::size_t b = 0; b < B; ++b) {
                // unpool: route gradient to the argmax of each 2x2 window
                const TensorT<T>& pre = pre_relu_[l][b];
                const int C = int(pre.dim(0)), H = int(pre.dim(1)), W = int(pre.dim(2));
                TensorT<T> dpre({std::size_t(C), std::size_t(H), std::size_t(W)});
                for (int c = 0; c < C; ++c)
                    for (int oh = 0; oh < H / 2; ++oh)
                        for (int ow = 0; ow < W / 2; ++ow) {
                            // relu applied before pooling: replay it to find the argmax
                            T best = T(-1);
                            int br = 0, bc = 0;
                            for (int r = 0; r < 2; ++r)
                                for (int s = 0; s < 2; ++s) {
                                    T v = pre.data[(std::size_t(c) * H + oh * 2 + r) * W + ow * 2 +
                                                   s];
                                    v = v > T(0) ? v : T(0);
                                    if (v > best) {
                                        best = v;
                                        br = r;
                                        bc = s;
                                    }
                                }
                            dpre.data[(std::size_t(c) * H + oh * 2 + br) * W + ow * 2 + bc] =
                                dcur[b].data[(std::size_t(c) * (H / 2) + oh) * (W / 2) + ow];
                        }
                // relu backward
                for (std::size_t i = 0; i < dpre.data.size(); ++i)
                    if (pre.data[i] <= T(0)) dpre.data[i] = T(0);
                // conv backward: bias, weights, input
                const TensorT<T>& in = post_pool_[l][b];
                const int IC = int(in.dim(0)), IH = int(in.dim(1)), IW = int(in.dim(2));
                const int K = int(conv_w_[l].dim(0));
                for (int k = 0; k < K; ++k) {
                    T acc = 0;
                    for (int i = 0; i < H * W; ++i) acc += dpre.data[std::size_t(k) * H * W + i];
                    conv_db_[l].data[k] += acc;
                }
                TensorT<T> din({std::size_t(IC), std::size_t(IH), std::size_t(IW)});
                for (int k = 0; k < K; ++k)
                    for (int c = 0; c < IC; ++c) {
                        const T* dout = dpre.data.data() + std::size_t(k) * H * W;
                        const T* input = in.data.data() + std::size_t(c) * IH * IW;
                        T* dker = conv_dw_[l].data.data() + (std::size_t(k) * IC + c) * 9;
                        const T* ker = conv_w_[l].data.data() + (std::size_t(k) * IC + c) * 9;
                        T* dinp = din.data.data() + std::size_t(c) * IH * IW;
                        for (int oh = 0; oh < H; ++oh)
                            for (int ow = 0; ow < W; ++ow) {
                                const T g = dout[std::size_t(oh) * W + ow];
                                if (g == T(0)) continue;
                                for (int r = 0; r < 3; ++r) {
                                    const int ih = oh + r - 1;
                                    if (ih < 0 || ih >= IH) continue;
                                    for (int s = 0; s < 3; ++s) {
                                        const int iw = ow + s - 1;
                                        if (iw < 0 || iw >= IW) continue;
                                        dker[r * 3 + s] += input[std::size_t(ih) * IW + iw] * g;
                                        dinp[std::size_t(ih) * IW + iw] += ker[r * 3 + s] * g;
                                    }
                                }
                            }
                    }
                dcur[b] = std::move(din);
            }
        }
        TensorT<T> dx({B, std::size_t(cfg_.input_side) * cfg_.input_side});
        for (std::size_t b = 0; b < B; ++b)
            std::copy(dcur[b].data.begin(), dcur[b].data.end(),
                      dx.data.begin() + b * dcur[b].numel());
        return dx;
    }

    std::vector<ParamRef<T>> params() {
        std::vector<ParamRef<T>> refs;
        for (std::size_t l = 0; l < conv_w_.size(); ++l) {
            refs.push_back({"conv" + std::to_string(l) + ".w", &conv_w_[l], &conv_dw_[l]});
            refs.push_back({"conv" + std::to_string(l) + ".b", &conv_b_[l], &conv_db_[l]});
        }
        fc1_.collect("fc1", refs);
        fc2_.collect("fc2", refs);
        return refs;
    }

    // Hash of the ReLU on/off bits and maxpool argmax choices. The loss is
    // only differentiable where this pattern is locally constant; the
    // finite-difference harness skips perturbations that flip it.
    std::uint64_t pattern_signature(const TensorT<T>& x) {
        forward(x, true);
        std::uint64_t hash = 1469598103934665603ULL;
        auto mix = [&hash](std::uint64_t v) {
            hash ^= v;
            hash *= 1099511628211ULL;
        };
        for (std::size_t l = 0; l < pre_relu_.size(); ++l)
            for (const auto& pre : pre_relu_[l]) {
                const int C = int(pre.dim(0)), H = int(pre.dim(1)), W = int(pre.dim(2));
                for (std::size_t i = 0; i < pre.data.size(); ++i)
                    mix(pre.data[i] > T(0) ? i * 2 + 1 : i * 2);
                for (int c = 0; c < C; ++c)
                    for (int oh = 0; oh < H / 2; ++oh)
                        for (int ow = 0; ow < W / 2; ++ow) {
                            T best = T(-1);
                            int arg = 0;
                            for (int r = 0; r < 2; ++r)
                                for (int s = 0; s < 2; ++s) {
                                    T v = pre.data[(std::size_t(c) * H + oh * 2 + r) * W +
                                                   ow * 2 + s];
                                    v = v > T(0) ? v : T(0);
                                    if (v > best) {
                                        best = v;
                                        arg = r * 2 + s;
                                    }
                                }
                            mix(std::uint64_t(arg) + 11400714819323198485ULL);
                        }
            }
        return hash;
    }

private:
    ClassifierConfig cfg_;
    std::vector<TensorT<T>> conv_w_, conv_b_, conv_dw_, conv_db_;
    Linear<T> fc1_, fc2_;
    ReLU<T> relu1_;
    std::size_t flat_dim_ = 0;
    std::vector<std::vector<TensorT<T>>> pre_relu_;   // per layer, per sample
    std::vector<std::vector<TensorT<T>>> post_pool_;  // layer inputs (0 = network input)
};

// ---------------------------------------------------------------- micro ViT

template <typename T>
class MicroVit {
public:
    MicroVit() = default;
    MicroVit(const ClassifierConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
        const int padded = ((cfg.input_side + cfg.patch - 1) / cfg.patch) * cfg.patch;
        per_axis_ = padded / cfg.patch;
        tokens_ = std::size_t(per_axis_) * per_axis_;
        const std::size_t D = std::size_t(cfg.proj_dim);
        embed_ = Linear<T>(std::size_t(cfg.patch) * cfg.patch, D);
        fill_trunc_normal(embed_.w, 0.02, rng);
        pos_ = TensorT<T>({tokens_, D});
        dpos_ = TensorT<T>({tokens_, D});
        fill_trunc_normal(pos_, 0.02, rng);
        blocks_.resize(cfg.layers);
        for (auto& blk : blocks_) {
            blk.ln1 = LayerNorm<T>(D);
            blk.attn = Mhsa<T>(D, cfg.heads);
            fill_trunc_normal(blk.attn.wq.w, 0.02, rng);
            fill_trunc_normal(blk.attn.wk.w, 0.02, rng);
            fill_trunc_normal(blk.attn.wv.w, 0.02, rng);
            fill_trunc_normal(blk.attn.wo.w, 0.02, rng);
            blk.ln2 = LayerNorm<T>(D);
            blk.mlp1 = Linear<T>(D, 2 * D);
            blk.mlp2 = Linear<T>(2 * D, D);
            fill_trunc_normal(blk.mlp1.w, 0.02, rng);
            fill_trunc_normal(blk.mlp2.w, 0.02, rng);
        }
        ln_f_ = LayerNorm<T>(D);
        std::size_t in_dim = D;
        for (int u : cfg.mlp_head) {
            head_.emplace_back(in_dim, std::size_t(u));
            fill_he_uniform(head_.back().w, in_dim, rng);
            in_dim = std::size_t(u);
        }
        out_ = Linear<T>(in_dim, std::size_t(cfg.n_classes));
        fill_he_uniform(out_.w, in_dim, rng);
        head_gelu_.resize(head_.size());
        head_drop_.resize(head_.size() + 1);
        for (auto& d : head_drop_) d.rate = cfg.dropout;
    }

    std::size_t tokens() const { return tokens_; }

    // x: [B, side*side] in {0,1}
    TensorT<T> forward(const TensorT<T>& x, bool train, std::mt19937_64& rng, bool cache) {
        const std::size_t B = x.dim(0);
        const std::size_t D = std::size_t(cfg_.proj_dim);
        TensorT<T> patches = patchify_batch(x);
        TensorT<T> tok = embed_.forward(patches, cache);  // [B*P, D]
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t p = 0; p < tokens_; ++p)
                for (std::size_t i = 0; i < D; ++i)
                    tok.data[(b * tokens_ + p) * D + i] += pos_.data[p * D + i];
        for (auto& blk : blocks_) {
            TensorT<T> n1 = blk.ln1.forward(tok, cache);
            TensorT<T> att = blk.attn.forward(n1, B, tokens_, cache);
            for (std::size_t i = 0; i < tok.data.size(); ++i) tok.data[i] += att.data[i];
            TensorT<T> n2 = blk.ln2.forward(tok, cache);
            TensorT<T> h = blk.mlp1.forward(n2, cache);
            h = blk.gelu.forward(std::move(h), cache);
            TensorT<T> m = blk.mlp2.forward(h, cache);
            for (std::size_t i = 0; i < tok.data.size(); ++i) tok.data[i] += m.data[i];
        }
        TensorT<T> normed = ln_f_.forward(tok, cache);
        // mean over tokens -> permutation-invariant pooled representation
        TensorT<T> pooled({B, D});
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t p = 0; p < tokens_; ++p)
                for (std::size_t i = 0; i < D; ++i)
                    pooled.data[b * D + i] += normed.data[(b * tokens_ + p) * D + i] / T(tokens_);
        TensorT<T> h = head_drop_[0].forward(std::move(pooled), train, rng);
        for (std::size_t l = 0; l < head_.size(); ++l) {
            h = head_[l].forward(h, cache);
            h = head_gelu_[l].forward(std::move(h), cache);
            h = head_drop_[l + 1].forward(std::move(h), train, rng);
        }
        cached_b_ = B;
        return out_.forward(h, cache);
    }

    TensorT<T> backward(const TensorT<T>& dlogits) {
        const std::size_t B = cached_b_, D = std::size_t(cfg_.proj_dim);
        TensorT<T> dh = out_.backward(dlogits);
        for (int l = int(head_.size()) - 1; l >= 0; --l) {
            dh = head_drop_[l + 1].backward(std::move(dh));
            dh = head_gelu_[l].backward(std::move(dh));
            dh = head_[l].backward(dh);
        }
        dh = head_drop_[0].backward(std::move(dh));
        TensorT<T> dtok({B * tokens_, D});
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t p = 0; p < tokens_; ++p)
                for (std::size_t i = 0; i < D; ++i)
                    dtok.data[(b * tokens_ + p) * D + i] = dh.data[b * D + i] / T(tokens_);
        dtok = ln_f_.backward(dtok);
        for (int l = int(blocks_.size()) - 1; l >= 0; --l) {
            auto& blk = blocks_[l];
            TensorT<T> dm = blk.mlp2.backward(dtok);
            dm = blk.gelu.backward(std::move(dm));
            TensorT<T> dn2 = blk.mlp1.backward(dm);
            TensorT<T> dres = blk.ln2.backward(dn2);
            for (std::size_t i = 0; i < dtok.data.size(); ++i) dtok.data[i] += dres.data[i];
            TensorT<T> datt = blk.attn.backward(dtok);
            TensorT<T> dn1 = blk.ln1.backward(datt);
            for (std::size_t i = 0; i < dtok.data.size(); ++i) dtok.data[i] += dn1.data[i];
        }
        // positional embedding gradient
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t p = 0; p < tokens_; ++p)
                for (std::size_t i = 0; i < D; ++i)
                    dpos_.data[p * D + i] += dtok.data[(b * tokens_ + p) * D + i];
        TensorT<T> dpatches = embed_.backward(dtok);
        return dpatches;  // gradient w.r.t. patch pixels; inputs are data, not parameters
    }

    std::vector<ParamRef<T>> params() {
        std::vector<ParamRef<T>> refs;
        embed_.collect("embed", refs);
        refs.push_back({"pos", &pos_, &dpos_});
        for (std::size_t l = 0; l < blocks_.size(); ++l) {
            const std::string p = "blk" + std::to_string(l);
            blocks_[l].ln1.collect(p + ".ln1", refs);
            blocks_[l].attn.collect(p + ".attn", refs);
            blocks_[l].ln2.collect(p + ".ln2", refs);
            blocks_[l].mlp1.collect(p + ".mlp1", refs);
            blocks_[l].mlp2.collect(p + ".mlp2", refs);
        }
        ln_f_.collect("ln_f", refs);
        for (std::size_t l = 0; l < head_.size(); ++l)
            head_[l].collect("head" + std::to_string(l), refs);
        out_.collect("out", refs);
        return refs;
    }

    // Exposed so tests can permute patch order together with pos rows.
    TensorT<T>& pos() { return pos_; }

private:
    struct Block {
        LayerNorm<T> ln1;
        Mhsa<T> attn;
        LayerNorm<T> ln2;
        Linear<T> mlp1, mlp2;
        GeLU<T> gelu;
    };

    TensorT<T> patchify_batch(const TensorT<T>& x) const {
        const std::size_t B = x.dim(0);
        const int side = cfg_.input_side, patch = cfg_.patch;
        const std::size_t plen = std::size_t(patch) * patch;
        TensorT<T> out({B * tokens_, plen});
        for (std::size_t b = 0; b < B; ++b) {
            const T* src = x.data.data() + b * std::size_t(side) * side;
            for (int pr = 0; pr < per_axis_; ++pr)
                for (int pc = 0; pc < per_axis_; ++pc) {
                    T* dst = out.data.data() +
                             (b * tokens_ + std::size_t(pr) * per_axis_ + pc) * plen;
                    for (int r = 0; r < patch; ++r)
                        for (int c = 0; c < patch; ++c) {
                            const int sr = pr * patch + r, sc = pc * patch + c;
                            dst[r * patch + c] = (sr < side && sc < side)
                                                     ? src[std::size_t(sr) * side + sc]
                                                     : T(0);
                        }
                }
        }
        return out;
    }

    ClassifierConfig cfg_;
    int per_axis_ = 0;
    std::size_t tokens_ = 0;
    Linear<T> embed_;
    TensorT<T> pos_, dpos_;
    std::vector<Block> blocks_;
    LayerNorm<T> ln_f_;
    std::vector<Linear<T>> head_;
    std::vector<GeLU<T>> head_gelu_;
    std::vector<Dropout<T>> head_drop_;
    Linear<T> out_;
    std::size_t cached_b_ = 0;
};

// ---------------------------------------------------------------- wrapper

template <typename T>
class Classifier {
public:
    Classifier() = default;
    explicit Classifier(const ClassifierConfig& cfg) : cfg_(cfg) {
        cfg.validate();
        std::mt19937_64 rng = make_rng(cfg.seed);
        if (cfg.arch == Arch::tiny_cnn)
            net_.template emplace<TinyCnn<T>>(cfg, rng);
        else
            net_.template emplace<MicroVit<T>>(cfg, rng);
    }

    const ClassifierConfig& config() const { return cfg_; }

    TensorT<T> forward(const TensorT<T>& x, bool train, std::mt19937_64& rng, bool cache) {
        if (auto* cnn = std::get_if<TinyCnn<T>>(&net_)) return cnn->forward(x, cache);
        return std::get<MicroVit<T>>(net_).forward(x, train, rng, cache);
    }

    struct BatchResult {
        double loss = 0.0;
        int correct = 0;
    };

    // Forward in training mode, then accumulate parameter gradients.
    BatchResult loss_and_grad(const TensorT<T>& x, const std::vector<int>& labels,
                              std::mt19937_64& rng) {
        if (x.dim(0) == 0) throw data_error("loss_and_grad: empty batch");
        TensorT<T> logits = forward(x, true, rng, true);
        TensorT<T> dlogits;
        BatchResult res;
        res.loss = softmax_xent_batch(logits, labels, dlogits, &res.correct);
        if (!std::isfinite(res.loss))
            throw numeric_error("training aborted: non-finite loss");
        if (auto* cnn = std::get_if<TinyCnn<T>>(&net_))
            cnn->backward(dlogits);
        else
            std::get<MicroVit<T>>(net_).backward(dlogits);
        return res;
    }

    std::vector<ParamRef<T>> params() {
        if (auto* cnn = std::get_if<TinyCnn<T>>(&net_)) return cnn->params();
        return std::get<MicroVit<T>>(net_).params();
    }

    void zero_grads() {
        for (auto& p : params()) p.grad->zero();
    }

    MicroVit<T>* vit() { return std::get_if<MicroVit<T>>(&net_); }

    // 0 for the (everywhere-smooth) ViT; branch pattern hash for the CNN.
    std::uint64_t pattern_signature(const TensorT<T>& x) {
        if (auto* cnn = std::get_if<TinyCnn<T>>(&net_)) return cnn->pattern_signature(x);
        return 0;
    }

    // Inference on one mask; probabilities from a dropout-free forward pass.
    GesturePrediction predict(const BinaryMask& mask, long frame_index = 0, double t_ms = 0.0) {
        if (mask.width != cfg_.input_side || mask.height != cfg_.input_side)
            throw data_error("predict: mask side " + std::to_string(mask.width) +
                             " does not match model side " + std::to_string(cfg_.input_side));
        TensorT<T> x({1, std::size_t(cfg_.input_side) * cfg_.input_side});
        for (std::size_t i = 0; i < mask.data.size(); ++i)
            x.data[i] = mask.data[i] != 0 ? T(1) : T(0);
        std::mt19937_64 rng(0);  // unused: eval mode
        TensorT<T> logits = forward(x, false, rng, false);
        GesturePrediction pred;
        pred.frame_index = frame_index;
        pred.t_ms = t_ms;
        pred.probs.resize(cfg_.n_classes);
        double mx = logits.data[0];
        for (int i = 0; i < cfg_.n_classes; ++i) mx = std::max(mx, double(logits.data[i]));
        double denom = 0.0;
        for (int i = 0; i < cfg_.n_classes; ++i) {
            pred.probs[i] = std::exp(double(logits.data[i]) - mx);
            denom += pred.probs[i];
        }
        int arg = 0;
        for (int i = 0; i < cfg_.n_classes; ++i) {
            pred.probs[i] /= denom;
            if (pred.probs[i] > pred.probs[arg]) arg = i;
        }
        pred.label_index = arg;
        return pred;
    }

private:
    ClassifierConfig cfg_;
    std::variant<TinyCnn<T>, MicroVit<T>> net_;
};

}  // namespace gk
