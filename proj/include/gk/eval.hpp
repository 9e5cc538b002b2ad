#pragma once

// Measurement math: stratified splits and folds, confusion-matrix metrics,
// detection rates, response-time averages, and the one-sample t-test with a
// Student-t CDF built on the regularized incomplete beta function.

#include <cmath>
#include <map>
#include <random>

#include "gk/error.hpp"
#include "gk/rng.hpp"

namespace gk {

// ---------------------------------------------------------------- splits

struct DatasetSplit {
    std::vector<std::size_t> train, val, test;
};

// Stratified 60/20/20 with a seeded shuffle; proportions within one item per
// class.
inline DatasetSplit split_dataset(const std::vector<int>& labels, std::uint64_t seed) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    if (by_class.empty()) throw data_error("split_dataset: empty dataset");
    for (auto& [cls, idxs] : by_class)
        if (idxs.size() < 5)
            throw data_error("split_dataset: class " + std::to_string(cls) + " has only " +
                             std::to_string(idxs.size()) + " items (need >= 5)");
    DatasetSplit split;
    std::mt19937_64 rng = make_rng(seed, 0x517);
    for (auto& [cls, idxs] : by_class) {
        std::shuffle(idxs.begin(), idxs.end(), rng);
        const std::size_t n = idxs.size();
        const auto n_train = std::size_t(std::lround(0.6 * double(n)));
        const auto n_val = std::size_t(std::lround(0.2 * double(n)));
        for (std::size_t i = 0; i < n; ++i) {
            if (i < n_train) split.train.push_back(idxs[i]);
            else if (i < n_train + n_val) split.val.push_back(idxs[i]);
            else split.test.push_back(idxs[i]);
        }
    }
    return split;
}

// Stratified, disjoint, exhaustive fold assignment (index -> fold).
inline std::vector<int> kfold(const std::vector<int>& labels, int folds, std::uint64_t seed) {
    if (folds < 2) throw data_error("kfold: need >= 2 folds");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    for (auto& [cls, idxs] : by_class)
        if (idxs.size() < std::size_t(folds))
            throw data_error("kfold: class " + std::to_string(cls) + " has " +
                             std::to_string(idxs.size()) + " items, fewer than " +
                             std::to_string(folds) + " folds");
    std::vector<int> assignment(labels.size(), -1);
    std::mt19937_64 rng = make_rng(seed, 0xf01d);
    for (auto& [cls, idxs] : by_class) {
        std::shuffle(idxs.begin(), idxs.end(), rng);
        for (std::size_t i = 0; i < idxs.size(); ++i) assignment[idxs[i]] = int(i % folds);
    }
    return assignment;
}

// ---------------------------------------------------------------- metrics

struct ConfusionMatrix {
    int n = 0;
    std::vector<long> counts;  // rows = truth, cols = predicted

    explicit ConfusionMatrix(int classes = 0) : n(classes), counts(std::size_t(classes) * classes) {}

    static ConfusionMatrix from_pairs(const std::vector<int>& truth,
                                      const std::vector<int>& predicted, int classes) {
        if (truth.size() != predicted.size())
            throw data_error("confusion matrix: truth/prediction length mismatch");
        ConfusionMatrix cm(classes);
        for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
        return cm;
    }

    void add(int truth, int predicted, long count = 1) {
        if (truth < 0 || truth >= n || predicted < 0 || predicted >= n)
            throw data_error("confusion matrix: label out of range");
        counts[std::size_t(truth) * n + predicted] += count;
    }

    long at(int truth, int predicted) const { return counts[std::size_t(truth) * n + predicted]; }
    long total() const {
        long t = 0;
        for (long c : counts) t += c;
        return t;
    }
    long tp(int cls) const { return at(cls, cls); }
    long fp(int cls) const {
        long s = 0;
        for (int r = 0; r < n; ++r)
            if (r != cls) s += at(r, cls);
        return s;
    }
    long fn(int cls) const {
        long s = 0;
        for (int c = 0; c < n; ++c)
            if (c != cls) s += at(cls, c);
        return s;
    }
    long tn(int cls) const { return total() - tp(cls) - fp(cls) - fn(cls); }
};

// Harmonic mean of precision and recall.
inline double f_score(double precision, double recall) {
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f = 0.0;
    bool degenerate = false;  // a 0/0 was reported as 0
};

struct MetricsReport {
    double accuracy = 0.0;
    std::vector<ClassMetrics> per_class;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f = 0.0;
};

inline MetricsReport metrics(const ConfusionMatrix& cm) {
    if (cm.total() < 1) throw data_error("metrics: empty confusion matrix");
    MetricsReport rep;
    long diag = 0;
    for (int c = 0; c < cm.n; ++c) diag += cm.tp(c);
    rep.accuracy = double(diag) / double(cm.total());
    for (int c = 0; c < cm.n; ++c) {
        ClassMetrics m;
        const long tp = cm.tp(c), fp = cm.fp(c), fn = cm.fn(c);
        if (tp + fp == 0) {
            m.precision = 0.0;
            m.degenerate = true;
        } else {
            m.precision = double(tp) / double(tp + fp);
        }
        if (tp + fn == 0) {
            m.recall = 0.0;
            m.degenerate = true;
        } else {
            m.recall = double(tp) / double(tp + fn);
        }
        m.f = f_score(m.precision, m.recall);
        rep.per_class.push_back(m);
        rep.macro_precision += m.precision / cm.n;
        rep.macro_recall += m.recall / cm.n;
        rep.macro_f += m.f / cm.n;
    }
    return rep;
}

// ---------------------------------------------------------------- rates

inline double detection_rate(long hits, long misses) {
    if (hits < 0 || misses < 0 || hits + misses < 1)
        throw data_error("detection_rate: need at least one trial");
    return double(hits) / double(hits + misses);
}

// Arithmetic mean response time per (context, action). Works on any range of
// events exposing .context, .action and .response_ms.
template <typename Events>
std::map<std::pair<std::string, std::string>, double> response_stats(const Events& events) {
    std::map<std::pair<std::string, std::string>, std::pair<double, long>> acc;
    for (const auto& e : events) {
        auto& slot = acc[{e.context, e.action}];
        slot.first += e.response_ms;
        slot.second += 1;
    }
    std::map<std::pair<std::string, std::string>, double> out;
    for (const auto& [key, sum_n] : acc) out[key] = sum_n.first / double(sum_n.second);
    return out;
}

// ---------------------------------------------------------------- t-test

namespace detail {

// Regularized incomplete beta I_x(a,b) via the Lentz continued fraction.
inline double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-14, kFpMin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

inline double reg_inc_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                         a * std::log(x) + b * std::log(1.0 - x);
    const double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace detail

inline double student_t_cdf(double t, double df) {
    if (df <= 0.0) throw data_error("student_t_cdf: df must be positive");
    const double x = df / (df + t * t);
    const double p = 0.5 * detail::reg_inc_beta(df / 2.0, 0.5, x);
    return t >= 0.0 ? 1.0 - p : p;
}

// Upper quantile by bisection on the CDF.
inline double student_t_quantile(double p, double df) {
    if (p <= 0.0 || p >= 1.0) throw data_error("student_t_quantile: p in (0,1) required");
    double lo = -1e6, hi = 1e6;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (student_t_cdf(mid, df) < p) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

struct TTestResult {
    std::size_t k = 0;
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation (k-1)
    double mu = 0.0;
    double se = 0.0;
    double t = 0.0;
    double df = 0.0;
    double p_one = 0.0;
    double p_two = 0.0;
    double ci95_lo = 0.0, ci95_hi = 0.0;  // CI of the mean difference
};

// One-sample t-test from summary statistics.
inline TTestResult t_test_summary(double mean, double sd, std::size_t k, double mu) {
    if (k < 2) throw data_error("t_test: need k >= 2 samples");
    if (sd <= 0.0) throw numeric_error("t_test: zero standard deviation (degenerate sample)");
    TTestResult r;
    r.k = k;
    r.mean = mean;
    r.sd = sd;
    r.mu = mu;
    r.df = double(k - 1);
    r.se = sd / std::sqrt(double(k));
    r.t = (mean - mu) / r.se;
    r.p_one = 1.0 - student_t_cdf(std::abs(r.t), r.df);
    r.p_two = 2.0 * r.p_one;
    const double tq = student_t_quantile(0.975, r.df);
    r.ci95_lo = (mean - mu) - tq * r.se;
    r.ci95_hi = (mean - mu) + tq * r.se;
    return r;
}

inline TTestResult t_test(const std::vector<double>& samples, double mu) {
    if (samples.size() < 2) throw data_error("t_test: need k >= 2 samples");
    const double k = double(samples.size());
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= k;
    double ss = 0.0;
    for (double s : samples) ss += (s - mean) * (s - mean);
    const double sd = std::sqrt(ss / (k - 1.0));
    if (sd == 0.0) throw numeric_error("t_test: zero standard deviation (degenerate sample)");
    return t_test_summary(mean, sd, samples.size(), mu);
}

}  // namespace gk
