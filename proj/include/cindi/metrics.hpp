// Evaluation metrics: AUC-ROC (Mann-Whitney with half ties), VUS-ROC over
// a sweep of label-boundary buffers, F1 at the equal-error point of the
// ROC curve, and the self-regressive reconstruction metric.

#pragma once

#include "cindi/flow.hpp"
#include "cindi/series.hpp"

namespace cindi {

struct MetricReport {
    double auc = 0.0;
    double vus = 0.0;
    double f1 = 0.0;
    double f1_threshold = 0.0;
    double reconstruction = 0.0;

    nlohmann::json to_json() const {
        return {{"auc", auc},
                {"vus", vus},
                {"f1", f1},
                {"f1_threshold", f1_threshold},
                {"reconstruction", reconstruction}};
    }

    static MetricReport from_json(const nlohmann::json& j) {
        MetricReport r;
        r.auc = j.at("auc").get<double>();
        r.vus = j.at("vus").get<double>();
        r.f1 = j.at("f1").get<double>();
        r.f1_threshold = j.at("f1_threshold").get<double>();
        r.reconstruction = j.at("reconstruction").get<double>();
        return r;
    }
};

namespace detail {
// Sorted sweep over (positive mass, negative mass) pairs: probability
// mass of positive-above-negative dominance, ties at half. Points may
// carry fractional masses; self-pairs are excluded so binary inputs
// reduce to exact pair counting.
inline double weighted_auc(const std::vector<double>& scores, const std::vector<double>& pos,
                           const std::vector<double>& neg) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double total_pos = 0.0, total_neg = 0.0, self_mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total_pos += pos[i];
        total_neg += neg[i];
        self_mass += pos[i] * neg[i];
    }
    const double denom = total_pos * total_neg - self_mass;
    if (!(denom > 0.0)) throw Error("auc: labels contain a single class");

    double num = 0.0;
    double neg_below = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        double grp_pos = 0.0, grp_neg = 0.0, grp_self = 0.0;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            grp_pos += pos[order[j]];
            grp_neg += neg[order[j]];
            grp_self += pos[order[j]] * neg[order[j]];
            ++j;
        }
        num += grp_pos * neg_below + 0.5 * (grp_pos * grp_neg - grp_self);
        neg_below += grp_neg;
        i = j;
    }
    return num / denom;
}
}  // namespace detail

// Probability that a random positive outscores a random negative,
// ties counted one half.
inline double auc_roc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
    if (scores.size() != labels.size()) throw Error("auc: scores/labels length mismatch");
    std::size_t pos = 0;
    for (auto l : labels) pos += l ? 1 : 0;
    if (pos == 0 || pos == labels.size()) throw Error("auc: labels contain a single class");
    std::vector<double> p(labels.size()), n(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        p[i] = labels[i] ? 1.0 : 0.0;
        n[i] = 1.0 - p[i];
    }
    return detail::weighted_auc(scores, p, n);
}

// Anomaly ranges as maximal label-1 runs.
inline std::vector<std::pair<std::size_t, std::size_t>> label_ranges(
    const std::vector<std::uint8_t>& labels) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t t = 0;
    while (t < labels.size()) {
        if (!labels[t]) { ++t; continue; }
        std::size_t start = t;
        while (t < labels.size() && labels[t]) ++t;
        out.emplace_back(start, t - start);
    }
    return out;
}

// Softened labels for one buffer length: weight 1 inside a range and a
// linear ramp down to 0 at distance ell outside it.
inline std::vector<double> soften_labels(const std::vector<std::uint8_t>& labels, std::size_t ell) {
    std::vector<double> w(labels.size(), 0.0);
    auto ranges = label_ranges(labels);
    for (std::size_t t = 0; t < labels.size(); ++t) {
        if (labels[t]) { w[t] = 1.0; continue; }
        if (ell == 0) continue;
        std::size_t best = std::numeric_limits<std::size_t>::max();
        for (const auto& [a, len] : ranges) {
            const std::size_t b = a + len;
            std::size_t d;
            if (t < a)
                d = a - t;
            else
                d = t - b + 1;
            best = std::min(best, d);
        }
        if (best < ell)
            w[t] = 1.0 - static_cast<double>(best) / static_cast<double>(ell);
    }
    return w;
}

// Mean over buffer lengths 0..max_buffer of a range-aware AUC: positives
// stay the labelled points, while the negative mass of a point within
// the buffer of a range is discounted by the softened label (a high
// score just outside a range is a near miss, not a full false alarm).
// At buffer 0 the labels stay binary and the value equals auc_roc exactly.
inline double vus_roc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels,
                      std::size_t max_buffer = 16) {
    if (scores.size() != labels.size()) throw Error("vus: scores/labels length mismatch");
    std::vector<double> pos(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) pos[i] = labels[i] ? 1.0 : 0.0;
    double acc = 0.0;
    for (std::size_t ell = 0; ell <= max_buffer; ++ell) {
        auto soft = soften_labels(labels, ell);
        std::vector<double> neg(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) neg[i] = 1.0 - soft[i];
        acc += detail::weighted_auc(scores, pos, neg);
    }
    return acc / static_cast<double>(max_buffer + 1);
}

struct F1Result {
    double f1 = 0.0;
    double threshold = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
};

// Sweep ROC operating points (predict positive when score >= threshold)
// and pick the one nearest the descending diagonal TPR = 1 - FPR; ties
// resolve to the lower threshold. Returns the F1 of that prediction.
inline F1Result f1_at_diagonal(const std::vector<double>& scores,
                               const std::vector<std::uint8_t>& labels) {
    if (scores.size() != labels.size()) throw Error("f1: scores/labels length mismatch");
    std::size_t P = 0;
    for (auto l : labels) P += l ? 1 : 0;
    const std::size_t N = labels.size() - P;
    if (P == 0 || N == 0) throw Error("f1: labels contain a single class");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // when the threshold is the i-th distinct score, everything at or
    // above it is predicted positive; track counts below the threshold
    F1Result best;
    double best_gap = std::numeric_limits<double>::infinity();
    std::size_t tp_below = 0, fp_below = 0;

    auto consider = [&](double thr, std::size_t tp, std::size_t fp) {
        const double tpr = static_cast<double>(tp) / static_cast<double>(P);
        const double fpr = static_cast<double>(fp) / static_cast<double>(N);
        const double gap = std::abs(tpr - (1.0 - fpr));
        if (gap < best_gap) {
            best_gap = gap;
            const std::size_t fn = P - tp;
            const double denom = static_cast<double>(2 * tp + fp + fn);
            best.f1 = denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
            best.threshold = thr;
            best.tpr = tpr;
            best.fpr = fpr;
        }
    };

    std::size_t i = 0;
    while (i < scores.size()) {
        const double thr = scores[order[i]];
        consider(thr, P - tp_below, N - fp_below);
        while (i < scores.size() && scores[order[i]] == thr) {
            if (labels[order[i]])
                ++tp_below;
            else
                ++fp_below;
            ++i;
        }
    }
    consider(std::numeric_limits<double>::infinity(), 0, 0);  // all-negative endpoint
    return best;
}

// ---------------------------------------------------------------------------
// Self-regressive reconstruction

// One-step generator: given the absolute timestep and the flattened
// 1 x (k*D) context, produce the next observation.
using StepGenerator =
    std::function<std::vector<double>(std::size_t t, const Matrix& ctx_flat)>;

// Generate `steps` observations from `start`, rolling each prediction
// into the context for the next step.
inline std::vector<std::vector<double>> self_regressive_rollout(
    const std::vector<double>& values, std::size_t D, std::size_t k, std::size_t start,
    std::size_t steps, const StepGenerator& gen) {
    if (start < k) throw Error("rollout: start " + std::to_string(start) + " has no full context");
    if (start * D > values.size()) throw Error("rollout: start beyond end of series");
    // scratch copy of [start-k, start+steps) so predictions can roll forward
    std::vector<double> scratch((k + steps) * D);
    std::copy(values.begin() + static_cast<std::ptrdiff_t>((start - k) * D),
              values.begin() + static_cast<std::ptrdiff_t>(start * D), scratch.begin());
    std::vector<std::vector<double>> out;
    out.reserve(steps);
    for (std::size_t s = 0; s < steps; ++s) {
        Matrix ctx(1, k * D);
        for (std::size_t j = 0; j < k; ++j) {
            const std::size_t src = k + s - 1 - j;  // scratch index of x_{t-1-j}
            for (std::size_t d = 0; d < D; ++d) ctx.data[j * D + d] = scratch[src * D + d];
        }
        auto pred = gen(start + s, ctx);
        if (pred.size() != D) throw Error("rollout: generator returned wrong dimension");
        std::copy(pred.begin(), pred.end(),
                  scratch.begin() + static_cast<std::ptrdiff_t>((k + s) * D));
        out.push_back(std::move(pred));
    }
    return out;
}

inline StepGenerator flow_generator(const FlowModel& model) {
    return [&model](std::size_t, const Matrix& ctx_flat) {
        Matrix z(1, model.hyper().channels, 0.0);
        return model.inverse_batch(z, ctx_flat).data;
    };
}

// Mean squared reconstruction error over fixed subsections: for each
// start m, generate S steps self-regressively and accumulate
// ||x_{m+s} - gen(...)||^2 / (|M| * S).
inline double reconstruction_delta(const StepGenerator& gen, const std::vector<double>& values,
                                   std::size_t D, std::size_t k,
                                   const std::vector<std::size_t>& starts, std::size_t S) {
    if (starts.empty()) throw Error("reconstruction: empty start set");
    if (S == 0) throw Error("reconstruction: S must be positive");
    const std::size_t T = values.size() / D;
    double acc = 0.0;
    for (std::size_t m : starts) {
        if (m < k || m + S > T)
            throw Error("reconstruction: start " + std::to_string(m) +
                        " lacks context or following steps");
        auto preds = self_regressive_rollout(values, D, k, m, S, gen);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t d = 0; d < D; ++d) {
                const double diff = values[(m + s) * D + d] - preds[s][d];
                acc += diff * diff;
            }
    }
    return acc / (static_cast<double>(starts.size()) * static_cast<double>(S));
}

inline double reconstruction_delta(const FlowModel& model, const std::vector<double>& values,
                                   const std::vector<std::size_t>& starts, std::size_t S) {
    return reconstruction_delta(flow_generator(model), values, model.hyper().channels,
                                model.hyper().window, starts, S);
}

// Evenly spaced starts through the clean stretches of a range: every
// chosen m has k clean steps before it and S clean steps from m on.
inline std::vector<std::size_t> choose_recon_starts(const std::vector<std::uint8_t>& labels,
                                                    Range range, std::size_t k, std::size_t S,
                                                    std::size_t count) {
    std::vector<std::size_t> valid;
    for (std::size_t m = std::max(range.begin, k); m + S <= range.end; ++m) {
        bool ok = true;
        for (std::size_t t = m - k; t < m + S && ok; ++t)
            if (labels[t]) ok = false;
        if (ok) valid.push_back(m);
    }
    if (valid.empty())
        throw Error("reconstruction: no clean stretch of length k+S in the range");
    std::vector<std::size_t> out;
    const std::size_t want = std::min(count, valid.size());
    for (std::size_t i = 0; i < want; ++i) {
        const std::size_t pos = (i * (valid.size() - 1)) / std::max<std::size_t>(1, want - 1);
        out.push_back(valid[pos]);
    }
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Per-threshold ROC operating points for curve plots.
inline void write_roc_csv(const std::vector<double>& scores,
                          const std::vector<std::uint8_t>& labels, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("write_roc_csv: cannot open " + path);
    out << "threshold,fpr,tpr\n";
    std::vector<double> uniq = scores;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    std::size_t P = 0;
    for (auto l : labels) P += l ? 1 : 0;
    const std::size_t N = labels.size() - P;
    for (double thr : uniq) {
        std::size_t tp = 0, fp = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] >= thr) {
                if (labels[i]) ++tp;
                else ++fp;
            }
        }
        out << format_value(thr) << "," << format_value(double(fp) / double(N)) << ","
            << format_value(double(tp) / double(P)) << "\n";
    }
}

}  // namespace cindi
