// End-to-end loop: train a flow on the current data, flag low-likelihood
// sections, impute them, and repeat until the flag set settles. Also the
// single-pass baselines, the downstream evaluation protocol, run-directory
// output, and the configuration format (flat key=value sections or JSON).

#pragma once

#include <filesystem>
#include <map>
#include <optional>

#include "cindi/select.hpp"

namespace cindi {

struct PipelineConfig {
    // data
    std::string csv_path;
    bool use_synth = false;
    SynthSpec synth;

    // splits (fractions of T; test takes the remainder)
    double train_frac = 0.7;
    double eval_frac = 0.15;
    double val_fraction = 0.2;
    std::size_t val_sections = 5;

    // fixed model used by the loop (unless selection picks one)
    HyperParams hyper;
    std::size_t epochs_max = 120;
    std::size_t patience = 8;

    // detection
    std::size_t smoothing = 3;
    std::size_t vus_buffer = 16;

    // imputation
    ImputeMethod method = ImputeMethod::Cindi;

    // model selection
    ObjectiveKind objective = ObjectiveKind::Phi;
    std::size_t budget = 40;
    std::size_t population = 8;
    bool include_recon = true;
    std::size_t recon_sections = 7;
    std::size_t recon_len = 48;
    std::size_t sel_epochs_max = 60;
    std::size_t sel_patience = 6;

    // loop
    std::size_t max_iterations = 8;
    double convergence_epsilon = 0.005;
    std::uint64_t seed = 1;
    bool exclude_flagged_first_iter = true;
    bool select_upfront = false;
    bool reselect_each_iteration = false;
    std::size_t workers = 1;

    void validate() const {
        if (max_iterations < 1) throw Error("config: max_iterations must be >= 1");
        if (!(convergence_epsilon >= 0.0 && convergence_epsilon < 1.0))
            throw Error("config: convergence_epsilon must be in [0,1)");
        if (!(train_frac > 0.0 && eval_frac >= 0.0 && train_frac + eval_frac < 1.0))
            throw Error("config: split fractions must leave room for a test range");
    }
};

// ---------------------------------------------------------------------------
// Config parsing: flat `key = value` with [section] headers, or the JSON
// equivalent (nested objects; arrays become indexed keys).

using ConfigMap = std::map<std::string, std::string>;

inline ConfigMap parse_ini(std::istream& in) {
    ConfigMap map;
    std::string line, section;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            const auto b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error("config: bad line: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        map[section.empty() ? key : section + "." + key] = val;
    }
    return map;
}

namespace detail {
inline void flatten_json(const nlohmann::json& j, const std::string& prefix, ConfigMap& out) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            flatten_json(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i)
            flatten_json(j[i], prefix + "." + std::to_string(i), out);
    } else if (j.is_string()) {
        out[prefix] = j.get<std::string>();
    } else {
        out[prefix] = j.dump();
    }
}
}  // namespace detail

inline ConfigMap load_config_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("config: cannot open " + path);
    if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
        nlohmann::json j;
        in >> j;
        ConfigMap map;
        detail::flatten_json(j, "", map);
        return map;
    }
    return parse_ini(in);
}

namespace detail {
inline bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error("config: bad boolean: " + v);
}

struct ConfigReader {
    const ConfigMap& map;
    void str(const std::string& key, std::string& out) const {
        auto it = map.find(key);
        if (it != map.end()) out = it->second;
    }
    void num(const std::string& key, double& out) const {
        auto it = map.find(key);
        if (it != map.end()) out = std::stod(it->second);
    }
    void count(const std::string& key, std::size_t& out) const {
        auto it = map.find(key);
        if (it != map.end()) out = static_cast<std::size_t>(std::stoull(it->second));
    }
    void u64(const std::string& key, std::uint64_t& out) const {
        auto it = map.find(key);
        if (it != map.end()) out = std::stoull(it->second);
    }
    void boolean(const std::string& key, bool& out) const {
        auto it = map.find(key);
        if (it != map.end()) out = parse_bool(it->second);
    }
    bool has_prefix(const std::string& p) const {
        auto it = map.lower_bound(p);
        return it != map.end() && it->first.compare(0, p.size(), p) == 0;
    }
};
}  // namespace detail

inline PipelineConfig config_from_map(const ConfigMap& map) {
    detail::ConfigReader r{map};
    PipelineConfig c;
    r.str("data.csv", c.csv_path);
    r.boolean("synth.enabled", c.use_synth);
    if (c.csv_path.empty() && r.has_prefix("synth.")) c.use_synth = true;

    r.count("synth.T", c.synth.T);
    r.count("synth.channels", c.synth.channels);
    r.count("synth.n_sines", c.synth.n_sines);
    r.num("synth.base_period", c.synth.base_period);
    r.num("synth.noise_pct", c.synth.noise_pct);
    r.u64("synth.seed", c.synth.seed);
    for (std::size_t i = 0;; ++i) {
        const std::string p = "synth.anomaly." + std::to_string(i) + ".";
        if (!r.has_prefix(p)) break;
        AnomalyGroup g;
        std::string kind = "spike";
        r.str(p + "kind", kind);
        g.kind = anomaly_kind_from(kind);
        r.count(p + "count", g.count);
        r.count(p + "min_len", g.min_len);
        r.count(p + "max_len", g.max_len);
        r.num(p + "region_lo", g.region_lo);
        r.num(p + "region_hi", g.region_hi);
        r.boolean(p + "one_channel", g.one_channel);
        r.num(p + "magnitude", g.magnitude);
        c.synth.groups.push_back(g);
    }

    r.num("split.train", c.train_frac);
    r.num("split.eval", c.eval_frac);
    r.num("split.val_fraction", c.val_fraction);
    r.count("split.val_sections", c.val_sections);

    std::string enc = "base";
    r.str("model.encoder", enc);
    c.hyper.encoder = encoder_from(enc);
    r.count("model.k", c.hyper.k);
    r.count("model.layers", c.hyper.n_layers);
    r.count("model.hidden", c.hyper.hidden);
    r.count("model.embedding", c.hyper.embedding);
    r.count("model.batch", c.hyper.batch);
    r.num("model.lr", c.hyper.learning_rate);

    r.count("train.epochs_max", c.epochs_max);
    r.count("train.patience", c.patience);

    r.count("detect.smoothing", c.smoothing);
    r.count("detect.vus_buffer", c.vus_buffer);

    std::string method = "cindi";
    r.str("impute.method", method);
    c.method = impute_method_from(method);

    std::string obj = "phi";
    r.str("select.objective", obj);
    c.objective = objective_from(obj);
    r.count("select.budget", c.budget);
    r.count("select.population", c.population);
    r.boolean("select.include_recon", c.include_recon);
    r.count("select.epochs_max", c.sel_epochs_max);
    r.count("select.patience", c.sel_patience);
    r.count("select.recon_sections", c.recon_sections);
    r.count("select.recon_len", c.recon_len);

    r.count("pipeline.max_iterations", c.max_iterations);
    r.num("pipeline.epsilon", c.convergence_epsilon);
    r.u64("pipeline.seed", c.seed);
    r.boolean("pipeline.exclude_flagged_first_iter", c.exclude_flagged_first_iter);
    r.boolean("pipeline.select_upfront", c.select_upfront);
    r.boolean("pipeline.reselect_each_iteration", c.reselect_each_iteration);
    r.count("pipeline.workers", c.workers);

    c.validate();
    return c;
}

inline PipelineConfig load_config(const std::string& path) {
    return config_from_map(load_config_map(path));
}

inline nlohmann::json config_to_json(const PipelineConfig& c) {
    nlohmann::json j;
    j["data"]["csv"] = c.csv_path;
    j["synth"] = {{"enabled", c.use_synth}, {"T", c.synth.T}, {"channels", c.synth.channels},
                  {"n_sines", c.synth.n_sines}, {"base_period", c.synth.base_period},
                  {"noise_pct", c.synth.noise_pct}, {"seed", c.synth.seed}};
    for (const auto& g : c.synth.groups)
        j["synth"]["anomaly"].push_back({{"kind", anomaly_kind_name(g.kind)},
                                         {"count", g.count},
                                         {"min_len", g.min_len},
                                         {"max_len", g.max_len},
                                         {"region_lo", g.region_lo},
                                         {"region_hi", g.region_hi},
                                         {"one_channel", g.one_channel},
                                         {"magnitude", g.magnitude}});
    j["split"] = {{"train", c.train_frac}, {"eval", c.eval_frac},
                  {"val_fraction", c.val_fraction}, {"val_sections", c.val_sections}};
    j["model"] = c.hyper.to_json();
    j["train"] = {{"epochs_max", c.epochs_max}, {"patience", c.patience}};
    j["detect"] = {{"smoothing", c.smoothing}, {"vus_buffer", c.vus_buffer}};
    j["impute"] = {{"method", impute_method_name(c.method)}};
    j["select"] = {{"objective", objective_name(c.objective)}, {"budget", c.budget},
                   {"population", c.population}, {"include_recon", c.include_recon},
                   {"epochs_max", c.sel_epochs_max}, {"patience", c.sel_patience},
                   {"recon_sections", c.recon_sections}, {"recon_len", c.recon_len}};
    j["pipeline"] = {{"max_iterations", c.max_iterations},
                     {"epsilon", c.convergence_epsilon},
                     {"seed", c.seed},
                     {"exclude_flagged_first_iter", c.exclude_flagged_first_iter},
                     {"select_upfront", c.select_upfront},
                     {"reselect_each_iteration", c.reselect_each_iteration},
                     {"workers", c.workers}};
    return j;
}

// ---------------------------------------------------------------------------
// Data resolution and splits

inline MultiSeries resolve_series(const PipelineConfig& c) {
    if (c.use_synth) return synth_generate(c.synth);
    if (c.csv_path.empty()) throw Error("config: neither data.csv nor synth given");
    return load_csv(c.csv_path);
}

inline SplitSpec make_splits(std::size_t T, const PipelineConfig& c) {
    SplitSpec sp;
    const auto train_end = static_cast<std::size_t>(c.train_frac * static_cast<double>(T));
    const auto eval_end =
        train_end + static_cast<std::size_t>(c.eval_frac * static_cast<double>(T));
    sp.train = {0, train_end};
    sp.evaluation = {train_end, eval_end};
    sp.test = {eval_end, T};
    sp.validation = validation_split(sp.train, c.val_fraction, c.val_sections, c.seed,
                                     c.hyper.k + 1);
    return sp;
}

// ---------------------------------------------------------------------------
// The iterative loop

struct IterationRecord {
    std::size_t iteration = 0;
    std::size_t flagged_count = 0;
    std::size_t symm_diff = 0;
    double tau = 0.0;
    bool converged = false;
    std::string checkpoint_id;
    std::vector<ChangedSection> changed;
    std::optional<MetricReport> downstream;

    nlohmann::json to_json() const {
        nlohmann::json j = {{"iteration", iteration},   {"flagged_count", flagged_count},
                            {"symm_diff", symm_diff},   {"tau", tau},
                            {"converged", converged},   {"checkpoint", checkpoint_id}};
        nlohmann::json sections = nlohmann::json::array();
        for (const auto& ch : changed)
            sections.push_back({{"start", ch.start}, {"length", ch.length}});
        j["sections"] = sections;
        if (downstream) j["downstream"] = downstream->to_json();
        return j;
    }
};

struct CindiRunResult {
    MultiSeries improved;  // original units
    std::vector<IterationRecord> records;
    FlowModel final_model;
    SplitSpec splits;
    Normalizer normalizer;
    HyperParams hyper;  // the hyperparameters the loop actually used
    bool converged = false;
    std::string error;
    std::vector<std::pair<std::size_t, ImputeResult>> impute_trail;  // per-iteration ledgers
};

namespace detail {

inline std::vector<double> clean_train_scores(const std::vector<double>& scores,
                                              const std::vector<std::uint8_t>& labels,
                                              std::size_t k, Range train) {
    std::vector<double> out;
    for (std::size_t t = std::max(k, train.begin); t < train.end; ++t)
        if (!labels[t]) out.push_back(scores[t]);
    return out;
}

// test-split metrics for one model (used for the per-iteration records)
inline std::optional<MetricReport> test_metrics(const FlowModel& model,
                                                const MultiSeries& normalized, SplitSpec splits,
                                                std::size_t vus_buffer) {
    const Range test = splits.test;
    if (test.size() == 0) return std::nullopt;
    std::size_t pos = 0;
    for (std::size_t t = test.begin; t < test.end; ++t) pos += normalized.labels[t] ? 1 : 0;
    if (pos == 0 || pos == test.size()) return std::nullopt;  // needs a labeled test split
    auto scores_all = score(model, normalized);
    std::vector<double> s(scores_all.begin() + static_cast<std::ptrdiff_t>(test.begin),
                          scores_all.begin() + static_cast<std::ptrdiff_t>(test.end));
    std::vector<std::uint8_t> l(normalized.labels.begin() + static_cast<std::ptrdiff_t>(test.begin),
                                normalized.labels.begin() + static_cast<std::ptrdiff_t>(test.end));
    MetricReport m;
    m.auc = auc_roc(s, l);
    m.vus = vus_roc(s, l, vus_buffer);
    auto f1 = f1_at_diagonal(s, l);
    m.f1 = f1.f1;
    m.f1_threshold = f1.threshold;
    return m;
}

}  // namespace detail

// Alternate between fitting the flow on the current training data and
// replacing flagged sections with generated ones, until the flag set
// changes by less than epsilon * T (or not at all) or the iteration cap
// is hit. Returns the improved series, all records, and the last model.
inline CindiRunResult run_cindi(const PipelineConfig& cfg, MultiSeries series) {
    cfg.validate();
    CindiRunResult out;
    out.hyper = cfg.hyper;
    out.splits = make_splits(series.T, cfg);
    out.normalizer = fit_normalizer(series, out.splits.train);
    out.improved = std::move(series);

    if (cfg.select_upfront) {
        SelectionData sd;
        sd.normalized = out.normalizer.apply(out.improved);
        sd.splits = out.splits;
        sd.recon_len = cfg.recon_len;
        sd.recon_starts = choose_recon_starts(out.improved.labels, out.splits.evaluation,
                                              cfg.hyper.k, cfg.recon_len, cfg.recon_sections);
        sd.vus_buffer = cfg.vus_buffer;
        sd.smoothing = cfg.smoothing;
        SelectionConfig sc;
        sc.encoder = cfg.hyper.encoder;
        sc.objective = cfg.objective;
        sc.include_recon = cfg.include_recon;
        sc.budget = cfg.budget;
        sc.population = cfg.population;
        sc.seed = cfg.seed;
        sc.workers = cfg.workers;
        sc.epochs_max = cfg.sel_epochs_max;
        sc.patience = cfg.sel_patience;
        out.hyper = model_select(sd, sc).best.hyper;
    }

    const std::size_t T = out.improved.T;
    const std::size_t k = out.hyper.k;
    const Range train = out.splits.train;
    std::vector<std::uint8_t> prev_mask(T, 0);
    bool have_labels = false;
    for (std::size_t t = train.begin; t < train.end; ++t)
        if (out.improved.labels[t]) have_labels = true;

    for (std::size_t iter = 0; iter < cfg.max_iterations; ++iter) {
        IterationRecord rec;
        rec.iteration = iter;
        MultiSeries normalized = out.normalizer.apply(out.improved);

        // (a) fit on current training data; the first pass drops windows
        // whose observation is labelled, later passes train on the
        // imputed data in full
        auto windows = make_windows(normalized, k);
        const bool exclude = iter == 0 && cfg.exclude_flagged_first_iter && have_labels;
        auto train_w = filter_windows(windows, [&](std::size_t t) {
            if (!train.contains(t) || out.splits.in_validation(t)) return false;
            if (exclude && out.improved.labels[t]) return false;
            return true;
        });
        auto val_w = filter_windows(windows, [&](std::size_t t) {
            return train.contains(t) && out.splits.in_validation(t);
        });
        TrainConfig tc;
        tc.epochs_max = cfg.epochs_max;
        tc.patience = cfg.patience;
        tc.batch_size = out.hyper.batch;
        tc.learning_rate = out.hyper.learning_rate;
        tc.seed = cfg.seed * 0x2545f4914f6cdd1dULL + iter;
        FlowModel model(out.hyper.to_flow_hyper(out.improved.D), tc.seed);
        TrainReport trep;
        try {
            std::tie(model, trep) = fit(model, train_w, val_w, tc);
            if (trep.aborted) throw Error("training aborted: " + trep.diagnostic);
        } catch (const Error& e) {
            out.error = "iteration " + std::to_string(iter) + ": " + e.what();
            break;  // keep the state of the last completed iteration
        }

        // (b) threshold from clean points, flag the training region
        auto scores = score(model, normalized);
        auto clean = detail::clean_train_scores(scores, out.improved.labels, k, train);
        rec.tau = threshold_from_scores(clean);
        auto full_mask = flag(scores, rec.tau, cfg.smoothing);
        std::vector<std::uint8_t> mask(T, 0);
        for (std::size_t t = train.begin; t < train.end; ++t) mask[t] = full_mask[t];

        rec.flagged_count = 0;
        rec.symm_diff = 0;
        for (std::size_t t = 0; t < T; ++t) {
            rec.flagged_count += mask[t] ? 1 : 0;
            rec.symm_diff += mask[t] != prev_mask[t] ? 1 : 0;
        }

        // (c) impute the flagged sections
        ImputeResult ir;
        try {
            ir = flow_impute(model, out.improved, mask, out.normalizer);
        } catch (const Error& e) {
            out.error = "iteration " + std::to_string(iter) + " imputation: " + e.what();
            break;
        }
        out.improved = ir.series;
        rec.changed = ir.changed;
        out.impute_trail.emplace_back(iter, ir);

        // (d) record, then decide termination
        rec.downstream =
            detail::test_metrics(model, normalized, out.splits, cfg.vus_buffer);
        rec.checkpoint_id = "iter_" + std::to_string(iter);
        const double eps_steps = cfg.convergence_epsilon * static_cast<double>(T);
        rec.converged =
            rec.symm_diff == 0 || static_cast<double>(rec.symm_diff) < eps_steps;
        out.records.push_back(rec);
        out.final_model = std::move(model);
        prev_mask = mask;
        if (rec.converged) {
            out.converged = true;
            break;
        }
    }
    return out;
}

inline CindiRunResult run_cindi(const PipelineConfig& cfg) {
    return run_cindi(cfg, resolve_series(cfg));
}

// ---------------------------------------------------------------------------
// Baselines

struct BaselineResult {
    MultiSeries improved;
    std::vector<std::uint8_t> exclude_mask;  // nonempty only for skip
    ImputeResult impute;
};

// Single-pass imputation (or passthrough) driven by the labeled mask.
inline BaselineResult run_baseline(const PipelineConfig& cfg, MultiSeries series) {
    if (cfg.method == ImputeMethod::Cindi)
        throw Error("run_baseline: method cindi runs through run_cindi");
    BaselineResult out;
    SplitSpec splits = make_splits(series.T, cfg);
    std::vector<std::uint8_t> mask(series.T, 0);
    for (std::size_t t = splits.train.begin; t < splits.train.end; ++t)
        mask[t] = series.labels[t];

    switch (cfg.method) {
        case ImputeMethod::Raw:
            out.improved = raw(series);
            out.impute.series = out.improved;
            out.impute.method = "raw";
            break;
        case ImputeMethod::Skip:
            skip(series, mask, cfg.hyper.k);  // validates that windows survive
            out.improved = series;
            out.exclude_mask = mask;
            out.impute.series = out.improved;
            out.impute.method = "skip";
            break;
        default:
            out.impute = interpolate(series, mask, cfg.method);
            out.improved = out.impute.series;
            break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Downstream protocol: select a model on the improved training data
// (objective without the reconstruction term), then score the test split.

struct DownstreamResult {
    MetricReport metrics;
    SelectionResult selection;
    std::vector<double> test_scores;
    std::vector<std::uint8_t> test_labels;
};

inline DownstreamResult run_downstream(const MultiSeries& improved,
                                       const std::vector<std::uint8_t>& exclude_mask,
                                       const PipelineConfig& cfg) {
    PipelineConfig c = cfg;
    DownstreamResult out;
    SplitSpec splits = make_splits(improved.T, c);
    Normalizer norm = fit_normalizer(improved, splits.train);

    SelectionData sd;
    sd.normalized = norm.apply(improved);
    sd.splits = splits;
    sd.exclude_mask = exclude_mask;
    sd.recon_len = c.recon_len;
    sd.recon_starts = choose_recon_starts(improved.labels, splits.evaluation,
                                          c.hyper.k, c.recon_len, c.recon_sections);
    sd.vus_buffer = c.vus_buffer;
    sd.smoothing = c.smoothing;

    SelectionConfig sc;
    sc.encoder = c.hyper.encoder;
    sc.objective = c.objective;
    sc.include_recon = false;  // downstream selection targets detection alone
    sc.budget = c.budget;
    sc.population = c.population;
    sc.seed = c.seed;
    sc.workers = c.workers;
    sc.epochs_max = c.sel_epochs_max;
    sc.patience = c.sel_patience;

    out.selection = model_select(sd, sc);
    const FlowModel& model = out.selection.best_model;

    auto scores_all = score(model, sd.normalized);
    const Range test = splits.test;
    out.test_scores.assign(scores_all.begin() + static_cast<std::ptrdiff_t>(test.begin),
                           scores_all.begin() + static_cast<std::ptrdiff_t>(test.end));
    out.test_labels.assign(improved.labels.begin() + static_cast<std::ptrdiff_t>(test.begin),
                           improved.labels.begin() + static_cast<std::ptrdiff_t>(test.end));
    out.metrics.auc = auc_roc(out.test_scores, out.test_labels);
    out.metrics.vus = vus_roc(out.test_scores, out.test_labels, c.vus_buffer);
    auto f1 = f1_at_diagonal(out.test_scores, out.test_labels);
    out.metrics.f1 = f1.f1;
    out.metrics.f1_threshold = f1.threshold;
    out.metrics.reconstruction = out.selection.best.delta;
    return out;
}

// ---------------------------------------------------------------------------
// Run-directory output (atomic write-temp-rename)

inline void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

inline void write_test_scores_csv(const DownstreamResult& d, std::size_t test_begin,
                                  const std::filesystem::path& path) {
    std::ostringstream out;
    out << "timestep,score,label\n";
    for (std::size_t i = 0; i < d.test_scores.size(); ++i)
        out << test_begin + i << "," << format_value(d.test_scores[i]) << ","
            << int(d.test_labels[i]) << "\n";
    write_text_atomic(path, out.str());
}

// Recompute the downstream metrics from an emitted test-scores file.
inline MetricReport eval_scores_csv(const std::string& path, std::size_t vus_buffer) {
    std::ifstream in(path);
    if (!in) throw Error("eval: cannot open " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = detail::split_line(line);
        if (cells.size() != 3) throw Error("eval: bad row in " + path);
        scores.push_back(std::stod(cells[1]));
        labels.push_back(static_cast<std::uint8_t>(std::stoi(cells[2])));
    }
    MetricReport m;
    m.auc = auc_roc(scores, labels);
    m.vus = vus_roc(scores, labels, vus_buffer);
    auto f1 = f1_at_diagonal(scores, labels);
    m.f1 = f1.f1;
    m.f1_threshold = f1.threshold;
    return m;
}

}  // namespace cindi
