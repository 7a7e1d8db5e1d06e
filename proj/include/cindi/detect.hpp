// Likelihood-threshold anomaly scoring. Scores are per-timestep negative
// log-likelihoods; the threshold is mean + 2 std over known-clean points,
// and flags come from a centered moving average of the scores.

#pragma once

#include "cindi/flow.hpp"
#include "cindi/series.hpp"

namespace cindi {

struct Flagging {
    std::vector<double> scores;      // per timestep, NLL in nats
    double tau = 0.0;
    std::vector<std::uint8_t> mask;  // smoothed score > tau
    std::size_t smoothing = 1;
};

// tau = mean + 2 * sample standard deviation (denominator J-1).
inline double threshold_from_scores(const std::vector<double>& clean_scores) {
    const std::size_t j = clean_scores.size();
    if (j < 2) throw Error("threshold: need at least 2 clean reference points");
    double mean = 0.0;
    for (double v : clean_scores) mean += v;
    mean /= static_cast<double>(j);
    double var = 0.0;
    for (double v : clean_scores) var += (v - mean) * (v - mean);
    var /= static_cast<double>(j - 1);
    return mean + 2.0 * std::sqrt(var);
}

inline double threshold(const FlowModel& model, const WindowedSeries& clean_windows) {
    auto ll = model.log_likelihood_batch(clean_windows.x, clean_windows.ctx);
    for (auto& v : ll) v = -v;
    return threshold_from_scores(ll);
}

// Per-timestep NLL over [0, T). The first k steps have no context and
// carry the score of the earliest scorable step, keeping the mask length T.
inline std::vector<double> score(const FlowModel& model, const std::vector<double>& values,
                                 std::size_t T, std::size_t D) {
    const std::size_t k = model.hyper().window;
    if (T <= k) throw Error("score: series shorter than window");
    const std::size_t n = T - k;
    Matrix x(n, D), ctx(n, k * D);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t t = k + i;
        for (std::size_t d = 0; d < D; ++d) x.at(i, d) = values[t * D + d];
        auto row = context_row(values, D, t, k);
        std::copy(row.begin(), row.end(),
                  ctx.data.begin() + static_cast<std::ptrdiff_t>(i * ctx.cols));
    }
    auto ll = model.log_likelihood_batch(x, ctx);
    std::vector<double> scores(T);
    for (std::size_t i = 0; i < n; ++i) scores[k + i] = -ll[i];
    for (std::size_t t = 0; t < k; ++t) scores[t] = scores[k];
    return scores;
}

inline std::vector<double> score(const FlowModel& model, const MultiSeries& s) {
    return score(model, s.values, s.T, s.D);
}

// Centered moving average; windows are truncated at the series edges.
inline std::vector<double> smooth_scores(const std::vector<double>& scores, std::size_t smoothing) {
    if (smoothing < 1) throw Error("flag: smoothing must be >= 1");
    if (smoothing == 1) return scores;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(scores.size());
    const std::ptrdiff_t left = static_cast<std::ptrdiff_t>(smoothing) / 2;
    const std::ptrdiff_t right = static_cast<std::ptrdiff_t>(smoothing) - left - 1;
    std::vector<double> out(scores.size());
    for (std::ptrdiff_t t = 0; t < n; ++t) {
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, t - left);
        const std::ptrdiff_t hi = std::min(n - 1, t + right);
        double s = 0.0;
        for (std::ptrdiff_t j = lo; j <= hi; ++j) s += scores[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(t)] = s / static_cast<double>(hi - lo + 1);
    }
    return out;
}

inline std::vector<std::uint8_t> flag(const std::vector<double>& scores, double tau,
                                      std::size_t smoothing) {
    auto sm = smooth_scores(scores, smoothing);
    std::vector<std::uint8_t> mask(scores.size(), 0);
    for (std::size_t t = 0; t < sm.size(); ++t) mask[t] = sm[t] > tau ? 1 : 0;
    return mask;
}

// Maximal runs of set flags, as (start, length) sections in time order.
inline std::vector<std::pair<std::size_t, std::size_t>> flagged_sections(
    const std::vector<std::uint8_t>& mask) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t t = 0;
    while (t < mask.size()) {
        if (!mask[t]) { ++t; continue; }
        std::size_t start = t;
        while (t < mask.size() && mask[t]) ++t;
        out.emplace_back(start, t - start);
    }
    return out;
}

inline Flagging detect(const FlowModel& model, const MultiSeries& normalized,
                       const std::vector<double>& clean_scores, std::size_t smoothing = 3) {
    Flagging f;
    f.scores = score(model, normalized);
    f.tau = threshold_from_scores(clean_scores);
    f.smoothing = smoothing;
    f.mask = flag(f.scores, f.tau, smoothing);
    return f;
}

// CSV export for plotting: timestep, score, tau, flag.
inline void write_scores_csv(const Flagging& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("write_scores_csv: cannot open " + path);
    out << "timestep,score,tau,flag\n";
    for (std::size_t t = 0; t < f.scores.size(); ++t)
        out << t << "," << format_value(f.scores[t]) << "," << format_value(f.tau) << ","
            << int(f.mask[t]) << "\n";
}

}  // namespace cindi
