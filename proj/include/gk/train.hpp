#pragma once

// Seeded, single-threaded training loop: shuffled batches, the two-step
// learning-rate schedule, per-epoch history, best-by-validation checkpoint.

#include <cstdio>

#include "gk/models.hpp"
#include "gk/weights.hpp"

namespace gk {

struct EpochStats {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    Classifier<float> model;       // weights of the best epoch
    NamedTensors best_weights;
    std::vector<EpochStats> history;
    int best_epoch = 0;
    double best_val_acc = 0.0;
};

inline Tensor masks_to_batch(const std::vector<const BinaryMask*>& masks, int side) {
    Tensor x({masks.size(), std::size_t(side) * side});
    for (std::size_t b = 0; b < masks.size(); ++b) {
        const BinaryMask& m = *masks[b];
        if (m.width != side || m.height != side)
            throw data_error("training mask is " + std::to_string(m.width) + "x" +
                             std::to_string(m.height) + ", model wants " + std::to_string(side));
        for (std::size_t i = 0; i < m.data.size(); ++i)
            x.data[b * m.data.size() + i] = m.data[i] != 0 ? 1.0f : 0.0f;
    }
    return x;
}

// Dropout-free loss/accuracy over a whole split.
inline std::pair<double, double> evaluate_split(Classifier<float>& model,
                                                const std::vector<BinaryMask>& masks,
                                                const std::vector<int>& labels) {
    const int side = model.config().input_side;
    const int bs = model.config().batch_size;
    std::mt19937_64 rng(0);
    double loss_sum = 0.0;
    long correct = 0;
    for (std::size_t start = 0; start < masks.size(); start += std::size_t(bs)) {
        const std::size_t end = std::min(masks.size(), start + std::size_t(bs));
        std::vector<const BinaryMask*> ptrs;
        std::vector<int> ls;
        for (std::size_t i = start; i < end; ++i) {
            ptrs.push_back(&masks[i]);
            ls.push_back(labels[i]);
        }
        Tensor x = masks_to_batch(ptrs, side);
        Tensor logits = model.forward(x, false, rng, false);
        Tensor dl;
        int hit = 0;
        const double loss = softmax_xent_batch(logits, ls, dl, &hit);
        loss_sum += loss * double(ls.size());
        correct += hit;
    }
    return {loss_sum / double(masks.size()), double(correct) / double(masks.size())};
}

inline TrainResult train(const std::vector<BinaryMask>& train_masks,
                         const std::vector<int>& train_labels,
                         const std::vector<BinaryMask>& val_masks,
                         const std::vector<int>& val_labels, const ClassifierConfig& cfg,
                         bool verbose = false) {
    if (train_masks.empty() || val_masks.empty())
        throw data_error("train: empty training or validation split");
    if (train_masks.size() != train_labels.size() || val_masks.size() != val_labels.size())
        throw data_error("train: mask/label count mismatch");

    TrainResult result;
    result.model = Classifier<float>(cfg);
    auto params = result.model.params();
    AdamState<float> adam;
    adam.init(params);
    std::mt19937_64 rng = make_rng(cfg.seed, 0xbeef);

    std::vector<std::size_t> order(train_masks.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = cfg.lr_at_epoch(epoch);
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        long correct = 0;
        for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + std::size_t(cfg.batch_size));
            std::vector<const BinaryMask*> ptrs;
            std::vector<int> labels;
            for (std::size_t i = start; i < end; ++i) {
                ptrs.push_back(&train_masks[order[i]]);
                labels.push_back(train_labels[order[i]]);
            }
            Tensor x = masks_to_batch(ptrs, cfg.input_side);
            result.model.zero_grads();
            auto batch = result.model.loss_and_grad(x, labels, rng);
            adam_step(params, adam, lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
            loss_sum += batch.loss * double(labels.size());
            correct += batch.correct;
        }
        auto [val_loss, val_acc] = evaluate_split(result.model, val_masks, val_labels);
        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / double(train_masks.size());
        stats.train_acc = double(correct) / double(train_masks.size());
        stats.val_loss = val_loss;
        stats.val_acc = val_acc;
        stats.lr = lr;
        result.history.push_back(stats);
        if (verbose)
            std::fprintf(stderr,
                         "epoch %2d  lr %.6f  train loss %.4f acc %.4f  val loss %.4f acc %.4f\n",
                         epoch, lr, stats.train_loss, stats.train_acc, val_loss, val_acc);
        if (result.best_weights.empty() || val_acc > result.best_val_acc) {
            result.best_val_acc = val_acc;
            result.best_epoch = epoch;
            result.best_weights = snapshot(result.model);
        }
    }
    load_into(result.model, result.best_weights);
    return result;
}

inline std::string history_csv(const std::vector<EpochStats>& history) {
    std::string out = "epoch,train_loss,train_acc,val_loss,val_acc,lr\n";
    char buf[160];
    for (const auto& e : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", e.epoch, e.train_loss,
                      e.train_acc, e.val_loss, e.val_acc, e.lr);
        out += buf;
    }
    return out;
}

}  // namespace gk
