// Multivariate series data model: CSV ingestion, z-score normalization,
// windowing into (observation, temporal context) tuples, train/validation
// splitting, and a synthetic sequence generator with planted anomalies.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "cindi/ndcore.hpp"

namespace cindi {

// T x D values with per-step binary error labels (1 = possible error).
struct MultiSeries {
    std::size_t T = 0;
    std::size_t D = 0;
    std::vector<double> values;       // row-major T x D
    std::vector<std::uint8_t> labels; // length T
    std::vector<std::string> timestamps;  // optional, empty or length T
    std::vector<std::string> channel_names;

    double& at(std::size_t t, std::size_t d) { return values[t * D + d]; }
    double at(std::size_t t, std::size_t d) const { return values[t * D + d]; }

    std::vector<double> step(std::size_t t) const {
        return std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(t * D),
                                   values.begin() + static_cast<std::ptrdiff_t>((t + 1) * D));
    }
};

// Windowed view: tuple t pairs x_t with its k preceding observations,
// most recent first. Stored as dense matrices ready for batching.
struct WindowedSeries {
    std::size_t k = 0;
    std::size_t D = 0;
    std::size_t first_t = 0;            // absolute index of the first tuple
    std::vector<std::size_t> indices;   // absolute t per tuple
    Matrix x;    // n x D
    Matrix ctx;  // n x (k*D), row layout [x_{t-1}, x_{t-2}, ..., x_{t-k}]

    std::size_t count() const { return indices.size(); }
};

inline std::vector<double> context_row(const std::vector<double>& values, std::size_t D,
                                       std::size_t t, std::size_t k) {
    std::vector<double> row(k * D);
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t src = t - 1 - j;
        for (std::size_t d = 0; d < D; ++d) row[j * D + d] = values[src * D + d];
    }
    return row;
}

inline WindowedSeries make_windows(const MultiSeries& s, std::size_t k) {
    if (k < 1) throw Error("make_windows: k must be >= 1");
    if (s.T <= k)
        throw Error("make_windows: series length " + std::to_string(s.T) +
                    " too short for window " + std::to_string(k));
    WindowedSeries w;
    w.k = k;
    w.D = s.D;
    w.first_t = k;
    const std::size_t n = s.T - k;
    w.indices.resize(n);
    w.x = Matrix(n, s.D);
    w.ctx = Matrix(n, k * s.D);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t t = k + i;
        w.indices[i] = t;
        for (std::size_t d = 0; d < s.D; ++d) w.x.at(i, d) = s.at(t, d);
        auto row = context_row(s.values, s.D, t, k);
        std::copy(row.begin(), row.end(),
                  w.ctx.data.begin() + static_cast<std::ptrdiff_t>(i * w.ctx.cols));
    }
    return w;
}

// Keep only tuples whose indices pass the filter.
inline WindowedSeries filter_windows(const WindowedSeries& w,
                                     const std::function<bool(std::size_t)>& keep) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < w.count(); ++i)
        if (keep(w.indices[i])) rows.push_back(i);
    WindowedSeries out;
    out.k = w.k;
    out.D = w.D;
    out.first_t = rows.empty() ? w.first_t : w.indices[rows.front()];
    out.indices.reserve(rows.size());
    out.x = Matrix(rows.size(), w.x.cols);
    out.ctx = Matrix(rows.size(), w.ctx.cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.indices.push_back(w.indices[rows[r]]);
        for (std::size_t j = 0; j < w.x.cols; ++j) out.x.at(r, j) = w.x.at(rows[r], j);
        for (std::size_t j = 0; j < w.ctx.cols; ++j) out.ctx.at(r, j) = w.ctx.at(rows[r], j);
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV

struct CsvSchema {
    bool has_timestamp = true;   // column 0 is a timestamp string
    bool has_label = true;       // last column named "label" holds {0,1}
    bool autodetect = true;      // infer the two flags from the header
};

namespace detail {
inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}
}  // namespace detail

// Missing numeric cells are flagged (label 1) and carried forward from the
// previous valid value so the first pipeline pass sees finite inputs.
inline MultiSeries load_csv(const std::string& path, CsvSchema schema = {}) {
    std::ifstream in(path);
    if (!in) throw Error("load_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw Error("load_csv: empty file " + path);
    auto header = detail::split_line(line);

    if (schema.autodetect) {
        std::string first = header.empty() ? "" : header.front();
        std::transform(first.begin(), first.end(), first.begin(), ::tolower);
        schema.has_timestamp = (first == "timestamp" || first == "time" || first == "date");
        std::string last = header.back();
        std::transform(last.begin(), last.end(), last.begin(), ::tolower);
        schema.has_label = (last == "label");
    }

    const std::size_t first_chan = schema.has_timestamp ? 1 : 0;
    const std::size_t last_chan_end = header.size() - (schema.has_label ? 1 : 0);
    if (last_chan_end < first_chan + 2)
        throw Error("load_csv: need at least 2 numeric channels, header has " +
                    std::to_string(last_chan_end - first_chan));

    MultiSeries s;
    s.D = last_chan_end - first_chan;
    for (std::size_t c = first_chan; c < last_chan_end; ++c) s.channel_names.push_back(header[c]);

    std::vector<std::size_t> bad_rows;
    std::size_t row_no = 1;
    std::vector<double> prev_valid(s.D, 0.0);
    bool have_prev = false;
    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty()) continue;
        auto cells = detail::split_line(line);
        if (cells.size() != header.size()) {
            bad_rows.push_back(row_no);
            continue;
        }
        if (schema.has_timestamp) s.timestamps.push_back(cells[0]);
        bool row_flag = false;
        std::vector<double> row(s.D);
        for (std::size_t d = 0; d < s.D; ++d) {
            double v;
            const std::string& cell = cells[first_chan + d];
            if (detail::parse_double(cell, v) && std::isfinite(v)) {
                row[d] = v;
            } else if (cell.empty() || !have_prev) {
                // missing cell: carry forward and flag for the imputer
                row[d] = have_prev ? prev_valid[d] : 0.0;
                row_flag = true;
            } else {
                bad_rows.push_back(row_no);
                row_flag = true;
                row[d] = prev_valid[d];
            }
        }
        std::uint8_t label = row_flag ? 1 : 0;
        if (schema.has_label) {
            double lv;
            if (detail::parse_double(cells.back(), lv) && (lv == 0.0 || lv == 1.0)) {
                label = static_cast<std::uint8_t>(lv) | label;
            } else {
                bad_rows.push_back(row_no);
            }
        }
        s.values.insert(s.values.end(), row.begin(), row.end());
        s.labels.push_back(label);
        prev_valid = row;
        have_prev = true;
        ++s.T;
    }
    if (!bad_rows.empty()) {
        std::string msg = "load_csv: unparseable rows in " + path + ":";
        for (std::size_t r : bad_rows) msg += " " + std::to_string(r);
        throw Error(msg);
    }
    if (s.T == 0) throw Error("load_csv: no data rows in " + path);
    return s;
}

inline std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_csv(const MultiSeries& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("write_csv: cannot open " + path);
    const bool ts = !s.timestamps.empty();
    if (ts) out << "timestamp,";
    for (std::size_t d = 0; d < s.D; ++d) {
        out << (d < s.channel_names.size() ? s.channel_names[d] : "ch" + std::to_string(d));
        out << ",";
    }
    out << "label\n";
    for (std::size_t t = 0; t < s.T; ++t) {
        if (ts) out << s.timestamps[t] << ",";
        for (std::size_t d = 0; d < s.D; ++d) out << format_value(s.at(t, d)) << ",";
        out << int(s.labels[t]) << "\n";
    }
}

// ---------------------------------------------------------------------------
// Normalization

struct Range {
    std::size_t begin = 0;
    std::size_t end = 0;  // half-open
    std::size_t size() const { return end - begin; }
    bool contains(std::size_t t) const { return t >= begin && t < end; }
};

// Per-channel z-score with statistics from the training range only.
struct Normalizer {
    std::vector<double> mean;
    std::vector<double> stddev;

    std::size_t channels() const { return mean.size(); }

    std::vector<double> apply_values(const std::vector<double>& values, std::size_t D) const {
        std::vector<double> out(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            const std::size_t d = i % D;
            out[i] = (values[i] - mean[d]) / stddev[d];
        }
        return out;
    }

    MultiSeries apply(const MultiSeries& s) const {
        MultiSeries out = s;
        out.values = apply_values(s.values, s.D);
        return out;
    }

    double apply_one(double v, std::size_t d) const { return (v - mean[d]) / stddev[d]; }
    double invert_one(double v, std::size_t d) const { return v * stddev[d] + mean[d]; }

    MultiSeries invert(const MultiSeries& s) const {
        MultiSeries out = s;
        for (std::size_t t = 0; t < s.T; ++t)
            for (std::size_t d = 0; d < s.D; ++d) out.at(t, d) = invert_one(s.at(t, d), d);
        return out;
    }
};

inline Normalizer fit_normalizer(const MultiSeries& s, Range train) {
    if (train.size() == 0) throw Error("fit_normalizer: empty training range");
    if (train.end > s.T) throw Error("fit_normalizer: range exceeds series");
    Normalizer n;
    n.mean.resize(s.D, 0.0);
    n.stddev.resize(s.D, 0.0);
    const double cnt = static_cast<double>(train.size());
    for (std::size_t t = train.begin; t < train.end; ++t)
        for (std::size_t d = 0; d < s.D; ++d) n.mean[d] += s.at(t, d);
    for (std::size_t d = 0; d < s.D; ++d) n.mean[d] /= cnt;
    for (std::size_t t = train.begin; t < train.end; ++t)
        for (std::size_t d = 0; d < s.D; ++d) {
            const double dv = s.at(t, d) - n.mean[d];
            n.stddev[d] += dv * dv;
        }
    for (std::size_t d = 0; d < s.D; ++d) {
        n.stddev[d] = std::sqrt(n.stddev[d] / cnt);
        if (!(n.stddev[d] > 0.0))
            throw Error("fit_normalizer: channel " + std::to_string(d) + " has zero variance");
    }
    return n;
}

// ---------------------------------------------------------------------------
// Splits

struct SplitSpec {
    Range train;
    Range evaluation;
    Range test;
    std::vector<Range> validation;  // blocks inside the train range

    bool in_validation(std::size_t t) const {
        for (const auto& r : validation)
            if (r.contains(t)) return true;
        return false;
    }
};

// Pick `sections` random disjoint contiguous blocks inside `train` whose
// total covers ceil(fraction * |train|) steps. Deterministic under seed.
// `min_train_run` guards that a contiguous stretch of training data at
// least that long survives (window building needs k+1 consecutive steps).
inline std::vector<Range> validation_split(Range train, double fraction, std::size_t sections,
                                           std::uint64_t seed, std::size_t min_train_run = 1) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw Error("validation_split: fraction must be in (0,1)");
    if (sections < 1) throw Error("validation_split: sections must be >= 1");
    const std::size_t n = train.size();
    const std::size_t target = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(n)));
    const std::size_t block = (target + sections - 1) / sections;
    if (block == 0 || block * sections >= n)
        throw Error("validation_split: fraction too large for the training range");

    auto rng = make_rng(seed, 17);
    std::vector<Range> blocks;
    const std::size_t max_tries = 10000;
    std::size_t tries = 0;
    while (blocks.size() < sections) {
        if (++tries > max_tries)
            throw Error("validation_split: could not place disjoint validation blocks");
        std::uniform_int_distribution<std::size_t> dist(0, n - block);
        const std::size_t start = train.begin + dist(rng);
        Range cand{start, start + block};
        bool ok = true;
        for (const auto& b : blocks)
            if (cand.begin < b.end && b.begin < cand.end) { ok = false; break; }
        if (ok) blocks.push_back(cand);
    }
    std::sort(blocks.begin(), blocks.end(),
              [](const Range& a, const Range& b) { return a.begin < b.begin; });

    // longest surviving contiguous train run
    std::size_t longest = 0, cursor = train.begin;
    for (const auto& b : blocks) {
        longest = std::max(longest, b.begin - cursor);
        cursor = b.end;
    }
    longest = std::max(longest, train.end - cursor);
    if (longest < min_train_run)
        throw Error("validation_split: fraction too large to leave " +
                    std::to_string(min_train_run) + " contiguous train steps");
    return blocks;
}

// ---------------------------------------------------------------------------
// Synthetic generator

enum class AnomalyKind { Spike, LevelShift, FrequencyChange };

inline const char* anomaly_kind_name(AnomalyKind k) {
    switch (k) {
        case AnomalyKind::Spike: return "spike";
        case AnomalyKind::LevelShift: return "level_shift";
        case AnomalyKind::FrequencyChange: return "frequency_change";
    }
    return "?";
}

inline AnomalyKind anomaly_kind_from(const std::string& s) {
    if (s == "spike") return AnomalyKind::Spike;
    if (s == "level_shift") return AnomalyKind::LevelShift;
    if (s == "frequency_change") return AnomalyKind::FrequencyChange;
    throw Error("unknown anomaly kind: " + s);
}

struct AnomalyGroup {
    AnomalyKind kind = AnomalyKind::Spike;
    std::size_t count = 1;
    std::size_t min_len = 5;
    std::size_t max_len = 20;
    double region_lo = 0.0;  // placement window as fractions of T
    double region_hi = 1.0;
    bool one_channel = false;  // corrupt a single random channel instead of all
    double magnitude = 1.0;    // in units of the channel's peak amplitude
};

struct ExplicitAnomaly {
    AnomalyKind kind = AnomalyKind::Spike;
    std::size_t start = 0;
    std::size_t length = 0;
    bool one_channel = false;
    double magnitude = 1.0;
};

struct SynthSpec {
    std::size_t T = 1000;
    std::size_t channels = 2;
    std::size_t n_sines = 2;        // sine components per channel
    double base_period = 96.0;      // fundamental period in steps
    double noise_pct = 0.0;         // Gaussian noise sigma = noise_pct * peak amplitude
    std::vector<AnomalyGroup> groups;
    std::vector<ExplicitAnomaly> explicit_anomalies;
    std::uint64_t seed = 0;
};

namespace detail {
inline double peak_amplitude(std::size_t n_sines) {
    double a = 0.0;
    for (std::size_t j = 0; j < n_sines; ++j) a += 1.0 / static_cast<double>(j + 1);
    return a;
}
}  // namespace detail

// Sum-of-sines base per channel plus injected anomalies (labelled) and
// optional Gaussian noise. Base parameters, anomaly placement, and noise
// come from independent streams of the seed, so a noise-free, anomaly-free
// regeneration with the same seed reproduces the clean base exactly.
inline MultiSeries synth_generate(const SynthSpec& spec) {
    if (spec.T == 0) throw Error("synth_generate: T must be positive");
    if (spec.noise_pct < 0.0 || spec.noise_pct > 1.0)
        throw Error("synth_generate: noise_pct must be in [0,1]");
    if (spec.channels < 2) throw Error("synth_generate: need at least 2 channels");

    auto base_rng = make_rng(spec.seed, 0);
    auto noise_rng = make_rng(spec.seed, 1);
    auto anom_rng = make_rng(spec.seed, 2);

    MultiSeries s;
    s.T = spec.T;
    s.D = spec.channels;
    s.values.assign(spec.T * spec.channels, 0.0);
    s.labels.assign(spec.T, 0);
    for (std::size_t d = 0; d < s.D; ++d) s.channel_names.push_back("ch" + std::to_string(d));

    // per-channel phases; shared component periods across channels
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    std::vector<std::vector<double>> phases(s.D, std::vector<double>(spec.n_sines));
    for (std::size_t d = 0; d < s.D; ++d)
        for (std::size_t j = 0; j < spec.n_sines; ++j) phases[d][j] = phase(base_rng);

    auto base_value = [&](std::size_t d, double t, double freq_mult) {
        double v = 0.0;
        for (std::size_t j = 0; j < spec.n_sines; ++j) {
            const double amp = 1.0 / static_cast<double>(j + 1);
            const double period = spec.base_period / static_cast<double>(j + 1);
            v += amp * std::sin(2.0 * M_PI * freq_mult * t / period + phases[d][j]);
        }
        return v;
    };

    for (std::size_t t = 0; t < s.T; ++t)
        for (std::size_t d = 0; d < s.D; ++d)
            s.at(t, d) = base_value(d, static_cast<double>(t), 1.0);

    const double amp = detail::peak_amplitude(spec.n_sines);

    // resolve anomaly sections: explicit ones first, then placed groups
    struct Section {
        AnomalyKind kind;
        std::size_t start, len;
        bool one_channel;
        double magnitude;
    };
    std::vector<Section> sections;
    auto overlaps = [&](std::size_t a, std::size_t b) {
        for (const auto& sec : sections)
            if (a < sec.start + sec.len && sec.start < b) return true;
        return false;
    };
    for (const auto& e : spec.explicit_anomalies) {
        if (e.start + e.length > spec.T)
            throw Error("synth_generate: anomaly range [" + std::to_string(e.start) + "," +
                        std::to_string(e.start + e.length) + ") exceeds T=" + std::to_string(spec.T));
        sections.push_back({e.kind, e.start, e.length, e.one_channel, e.magnitude});
    }
    for (const auto& g : spec.groups) {
        const auto lo = static_cast<std::size_t>(g.region_lo * static_cast<double>(spec.T));
        const auto hi = static_cast<std::size_t>(g.region_hi * static_cast<double>(spec.T));
        for (std::size_t c = 0; c < g.count; ++c) {
            std::uniform_int_distribution<std::size_t> len_dist(g.min_len, g.max_len);
            const std::size_t len = len_dist(anom_rng);
            if (len > spec.T || hi < lo + len)
                throw Error("synth_generate: anomaly of length " + std::to_string(len) +
                            " does not fit region");
            bool placed = false;
            for (int tries = 0; tries < 1000 && !placed; ++tries) {
                std::uniform_int_distribution<std::size_t> start_dist(lo, hi - len);
                const std::size_t start = start_dist(anom_rng);
                if (!overlaps(start, start + len)) {
                    sections.push_back({g.kind, start, len, g.one_channel, g.magnitude});
                    placed = true;
                }
            }
            if (!placed) throw Error("synth_generate: could not place disjoint anomaly sections");
        }
    }

    std::uniform_int_distribution<std::size_t> chan_dist(0, s.D - 1);
    std::uniform_int_distribution<int> sign_dist(0, 1);
    std::uniform_real_distribution<double> jitter(0.7, 1.3);
    for (const auto& sec : sections) {
        const std::size_t chan = sec.one_channel ? chan_dist(anom_rng) : s.D;
        const double sign = sign_dist(anom_rng) ? 1.0 : -1.0;
        for (std::size_t t = sec.start; t < sec.start + sec.len; ++t) {
            s.labels[t] = 1;
            for (std::size_t d = 0; d < s.D; ++d) {
                if (sec.one_channel && d != chan) continue;
                switch (sec.kind) {
                    case AnomalyKind::Spike:
                        s.at(t, d) += sign * sec.magnitude * amp * jitter(anom_rng);
                        break;
                    case AnomalyKind::LevelShift:
                        s.at(t, d) += sign * sec.magnitude * amp;
                        break;
                    case AnomalyKind::FrequencyChange:
                        s.at(t, d) = sec.magnitude * base_value(d, static_cast<double>(t), 2.0);
                        break;
                }
            }
        }
    }

    if (spec.noise_pct > 0.0) {
        std::normal_distribution<double> noise(0.0, spec.noise_pct * amp);
        for (auto& v : s.values) v += noise(noise_rng);
    }
    return s;
}

}  // namespace cindi
