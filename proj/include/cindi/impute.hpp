// Replacement of flagged sections: flow-based self-regressive generation
// plus the classical interpolation baselines, window skipping, and the
// raw passthrough. Values outside flagged sections are never touched.

#pragma once

#include <memory>

#include "cindi/detect.hpp"
#include "cindi/metrics.hpp"

namespace cindi {

enum class ImputeMethod {
    Cindi,
    Linear,
    Nearest,
    Slinear,
    Quadratic,
    Cubic,
    CubicSpline,
    Skip,
    Raw,
};

inline const char* impute_method_name(ImputeMethod m) {
    switch (m) {
        case ImputeMethod::Cindi: return "cindi";
        case ImputeMethod::Linear: return "linear";
        case ImputeMethod::Nearest: return "nearest";
        case ImputeMethod::Slinear: return "slinear";
        case ImputeMethod::Quadratic: return "quadratic";
        case ImputeMethod::Cubic: return "cubic";
        case ImputeMethod::CubicSpline: return "cubicspline";
        case ImputeMethod::Skip: return "skip";
        case ImputeMethod::Raw: return "raw";
    }
    return "?";
}

inline ImputeMethod impute_method_from(const std::string& s) {
    if (s == "cindi") return ImputeMethod::Cindi;
    if (s == "linear") return ImputeMethod::Linear;
    if (s == "nearest") return ImputeMethod::Nearest;
    if (s == "slinear") return ImputeMethod::Slinear;
    if (s == "quadratic") return ImputeMethod::Quadratic;
    if (s == "cubic") return ImputeMethod::Cubic;
    if (s == "cubicspline") return ImputeMethod::CubicSpline;
    if (s == "skip") return ImputeMethod::Skip;
    if (s == "raw") return ImputeMethod::Raw;
    throw Error("unknown imputation method: " + s);
}

struct ChangedSection {
    std::size_t start = 0;
    std::size_t length = 0;
    std::vector<double> old_values;  // row-major length x D
    std::vector<double> new_values;
};

struct ImputeResult {
    MultiSeries series;
    std::vector<ChangedSection> changed;
    std::string method;
    std::vector<std::string> warnings;
};

namespace detail {

struct Anchors {
    std::vector<std::size_t> t;
    std::vector<double> v;
};

inline Anchors collect_anchors(const MultiSeries& s, const std::vector<std::uint8_t>& mask,
                               std::size_t channel) {
    Anchors a;
    for (std::size_t t = 0; t < s.T; ++t)
        if (!mask[t]) {
            a.t.push_back(t);
            a.v.push_back(s.at(t, channel));
        }
    return a;
}

// count anchors strictly before `begin` / at or after `end`
inline std::pair<std::size_t, std::size_t> side_support(const Anchors& a, std::size_t begin,
                                                        std::size_t end) {
    std::size_t before = 0, after = 0;
    for (std::size_t t : a.t) {
        if (t < begin) ++before;
        if (t >= end) ++after;
    }
    return {before, after};
}

// first-order spline through all anchors, evaluated by interval lookup
inline double polyline_eval(const Anchors& a, double x) {
    if (x <= static_cast<double>(a.t.front())) return a.v.front();
    if (x >= static_cast<double>(a.t.back())) return a.v.back();
    std::size_t lo = 0, hi = a.t.size() - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (static_cast<double>(a.t[mid]) <= x)
            lo = mid;
        else
            hi = mid;
    }
    const double x0 = static_cast<double>(a.t[lo]);
    const double x1 = static_cast<double>(a.t[hi]);
    return a.v[lo] + (a.v[hi] - a.v[lo]) * (x - x0) / (x1 - x0);
}

// Lagrange polynomial through the m anchors nearest to x (ties toward
// the earlier anchor).
inline double local_lagrange(const Anchors& a, double x, std::size_t m) {
    std::vector<std::size_t> idx(a.t.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t p, std::size_t q) {
        const double dp = std::abs(static_cast<double>(a.t[p]) - x);
        const double dq = std::abs(static_cast<double>(a.t[q]) - x);
        if (dp != dq) return dp < dq;
        return a.t[p] < a.t[q];
    });
    idx.resize(std::min(m, idx.size()));
    double acc = 0.0;
    for (std::size_t i : idx) {
        double term = a.v[i];
        for (std::size_t j : idx) {
            if (j == i) continue;
            term *= (x - static_cast<double>(a.t[j])) /
                    (static_cast<double>(a.t[i]) - static_cast<double>(a.t[j]));
        }
        acc += term;
    }
    return acc;
}

// Natural cubic spline through all anchors: second derivatives from a
// tridiagonal solve with zero end conditions, per-interval evaluation.
struct NaturalSpline {
    std::vector<double> x, y, m2;  // knots, values, second derivatives

    explicit NaturalSpline(const Anchors& a) {
        const std::size_t n = a.t.size();
        x.resize(n);
        y = a.v;
        for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(a.t[i]);
        m2.assign(n, 0.0);
        if (n < 3) return;  // natural spline with 2 knots is the chord
        std::vector<double> diag(n - 2), rhs(n - 2), upper(n - 2);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = x[i] - x[i - 1];
            const double h1 = x[i + 1] - x[i];
            diag[i - 1] = 2.0 * (h0 + h1);
            upper[i - 1] = h1;
            rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
        }
        // Thomas algorithm; sub-diagonal equals the previous row's upper
        for (std::size_t i = 1; i < diag.size(); ++i) {
            const double w = upper[i - 1] / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        for (std::size_t i = diag.size(); i-- > 0;) {
            const double up = (i + 1 < diag.size()) ? upper[i] * m2[i + 2] : 0.0;
            m2[i + 1] = (rhs[i] - up) / diag[i];
        }
    }

    double eval(double xq) const {
        std::size_t lo = 0;
        if (xq <= x.front())
            lo = 0;
        else if (xq >= x.back())
            lo = x.size() - 2;
        else {
            std::size_t hi = x.size() - 1;
            while (hi - lo > 1) {
                const std::size_t mid = (lo + hi) / 2;
                if (x[mid] <= xq)
                    lo = mid;
                else
                    hi = mid;
            }
        }
        const double h = x[lo + 1] - x[lo];
        const double a = (x[lo + 1] - xq) / h;
        const double b = (xq - x[lo]) / h;
        return a * y[lo] + b * y[lo + 1] +
               ((a * a * a - a) * m2[lo] + (b * b * b - b) * m2[lo + 1]) * h * h / 6.0;
    }
};

inline std::size_t required_support(ImputeMethod m) {
    switch (m) {
        case ImputeMethod::Linear:
        case ImputeMethod::Nearest:
        case ImputeMethod::Slinear: return 1;
        case ImputeMethod::Quadratic: return 2;
        case ImputeMethod::Cubic: return 3;
        default: return 0;
    }
}

}  // namespace detail

// Per-channel 1-D interpolation over timestep index through unflagged
// anchor points.
inline ImputeResult interpolate(const MultiSeries& s, const std::vector<std::uint8_t>& mask,
                                ImputeMethod kind) {
    if (mask.size() != s.T) throw Error("interpolate: mask length mismatch");
    ImputeResult res;
    res.series = s;
    res.method = impute_method_name(kind);
    auto sections = flagged_sections(mask);
    if (sections.empty()) return res;

    const std::size_t need = detail::required_support(kind);
    std::vector<detail::Anchors> anchors;
    for (std::size_t d = 0; d < s.D; ++d) anchors.push_back(detail::collect_anchors(s, mask, d));
    if (anchors[0].t.size() < 2) throw Error("interpolate: fewer than 2 anchor points");

    std::vector<std::unique_ptr<detail::NaturalSpline>> splines;
    if (kind == ImputeMethod::CubicSpline)
        for (std::size_t d = 0; d < s.D; ++d)
            splines.push_back(std::make_unique<detail::NaturalSpline>(anchors[d]));

    for (const auto& [start, len] : sections) {
        if (need > 0) {
            auto [before, after] = detail::side_support(anchors[0], start, start + len);
            if (before < need || after < need)
                throw Error("interpolate(" + res.method + "): section [" + std::to_string(start) +
                            "," + std::to_string(start + len) + ") lacks " + std::to_string(need) +
                            " anchors on both sides");
        }
        ChangedSection ch;
        ch.start = start;
        ch.length = len;
        for (std::size_t t = start; t < start + len; ++t)
            for (std::size_t d = 0; d < s.D; ++d) ch.old_values.push_back(s.at(t, d));

        for (std::size_t t = start; t < start + len; ++t) {
            const double x = static_cast<double>(t);
            for (std::size_t d = 0; d < s.D; ++d) {
                const detail::Anchors& a = anchors[d];
                double v = 0.0;
                switch (kind) {
                    case ImputeMethod::Linear: {
                        // flanking anchors of the section
                        std::size_t lo = 0, hi = a.t.size() - 1;
                        for (std::size_t i = 0; i < a.t.size(); ++i) {
                            if (a.t[i] < start) lo = i;
                            if (a.t[i] >= start + len) { hi = i; break; }
                        }
                        const double x0 = static_cast<double>(a.t[lo]);
                        const double x1 = static_cast<double>(a.t[hi]);
                        v = a.v[lo] + (a.v[hi] - a.v[lo]) * (x - x0) / (x1 - x0);
                        break;
                    }
                    case ImputeMethod::Slinear:
                        v = detail::polyline_eval(a, x);
                        break;
                    case ImputeMethod::Nearest: {
                        std::size_t best = 0;
                        double best_d = std::numeric_limits<double>::infinity();
                        for (std::size_t i = 0; i < a.t.size(); ++i) {
                            const double dd = std::abs(static_cast<double>(a.t[i]) - x);
                            if (dd < best_d) { best_d = dd; best = i; }
                        }
                        v = a.v[best];
                        break;
                    }
                    case ImputeMethod::Quadratic:
                        v = detail::local_lagrange(a, x, 3);
                        break;
                    case ImputeMethod::Cubic:
                        v = detail::local_lagrange(a, x, 4);
                        break;
                    case ImputeMethod::CubicSpline:
                        v = splines[d]->eval(x);
                        break;
                    default:
                        throw Error("interpolate: not an interpolation method");
                }
                res.series.at(t, d) = v;
                ch.new_values.push_back(v);
            }
        }
        res.changed.push_back(std::move(ch));
    }
    return res;
}

// Flow-based imputation: for each flagged section, generate replacements
// from the base-distribution center z = 0, rolling each generated step
// into the context of the next (self-regressive chain). Works in the
// model's normalized space; replacements are written back in original
// units. Sections starting before step k fall back to linear
// interpolation with a warning unless `fallback_near_start` is false.
inline ImputeResult flow_impute(const FlowModel& model, const MultiSeries& s,
                                const std::vector<std::uint8_t>& mask, const Normalizer& norm,
                                bool fallback_near_start = true) {
    if (mask.size() != s.T) throw Error("flow_impute: mask length mismatch");
    const std::size_t k = model.hyper().window;
    const std::size_t D = s.D;
    if (model.hyper().channels != D) throw Error("flow_impute: channel count mismatch");

    ImputeResult res;
    res.series = s;
    res.method = "cindi";
    auto sections = flagged_sections(mask);
    if (sections.empty()) return res;

    std::vector<double> xn = norm.apply_values(s.values, D);
    auto gen = flow_generator(model);

    for (const auto& [start, len] : sections) {
        if (start < k) {
            if (!fallback_near_start)
                throw Error("flow_impute: section at " + std::to_string(start) +
                            " starts before step k=" + std::to_string(k));
            // not enough clean history for a context; clean initial
            // context required, fall back to linear for this section
            std::vector<std::uint8_t> one(mask.size(), 0);
            std::fill(one.begin() + static_cast<std::ptrdiff_t>(start),
                      one.begin() + static_cast<std::ptrdiff_t>(start + len), 1);
            auto lin = interpolate(res.series, one, ImputeMethod::Linear);
            res.warnings.push_back("section at " + std::to_string(start) +
                                   " starts before step k; used linear fallback");
            ChangedSection ch;
            ch.start = start;
            ch.length = len;
            for (std::size_t t = start; t < start + len; ++t)
                for (std::size_t d = 0; d < D; ++d) {
                    ch.old_values.push_back(res.series.at(t, d));
                    ch.new_values.push_back(lin.series.at(t, d));
                }
            res.series = lin.series;
            for (std::size_t t = start; t < start + len; ++t)
                for (std::size_t d = 0; d < D; ++d)
                    xn[t * D + d] = norm.apply_one(res.series.at(t, d), d);
            res.changed.push_back(std::move(ch));
            continue;
        }
        auto preds = self_regressive_rollout(xn, D, k, start, len, gen);
        ChangedSection ch;
        ch.start = start;
        ch.length = len;
        for (std::size_t j = 0; j < len; ++j) {
            const std::size_t t = start + j;
            for (std::size_t d = 0; d < D; ++d) {
                ch.old_values.push_back(res.series.at(t, d));
                xn[t * D + d] = preds[j][d];  // later sections see this context
                const double orig_units = norm.invert_one(preds[j][d], d);
                res.series.at(t, d) = orig_units;
                ch.new_values.push_back(orig_units);
            }
        }
        res.changed.push_back(std::move(ch));
    }
    for (const auto& v : res.series.values)
        if (!std::isfinite(v)) throw Error("flow_impute: produced non-finite value");
    return res;
}

// Windows that overlap no flagged step; values untouched.
inline WindowedSeries skip(const MultiSeries& s, const std::vector<std::uint8_t>& mask,
                           std::size_t k) {
    if (mask.size() != s.T) throw Error("skip: mask length mismatch");
    auto all = make_windows(s, k);
    auto kept = filter_windows(all, [&](std::size_t t) {
        for (std::size_t j = t - k; j <= t; ++j)
            if (mask[j]) return false;
        return true;
    });
    if (kept.count() == 0) throw Error("skip: no windows survive the mask");
    return kept;
}

// Train on the data exactly as it is.
inline MultiSeries raw(const MultiSeries& s) { return s; }

// Ledger export, one row per changed scalar: the section start/length,
// the channel, and the old/new values.
inline void write_changed_csv(const std::vector<std::pair<std::size_t, ImputeResult>>& by_iteration,
                              const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("write_changed_csv: cannot open " + path);
    out << "iteration,start,length,channel,old,new\n";
    for (const auto& [iter, res] : by_iteration) {
        for (const auto& ch : res.changed) {
            const std::size_t D = ch.length ? ch.old_values.size() / ch.length : 0;
            for (std::size_t j = 0; j < ch.length; ++j)
                for (std::size_t d = 0; d < D; ++d)
                    out << iter << "," << ch.start + j << "," << ch.length << "," << d << ","
                        << format_value(ch.old_values[j * D + d]) << ","
                        << format_value(ch.new_values[j * D + d]) << "\n";
        }
    }
}

}  // namespace cindi
