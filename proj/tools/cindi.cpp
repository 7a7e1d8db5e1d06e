// Command-line front end: synthetic data generation, single-model training,
// detection, imputation, the full iterative pipeline, model selection, and
// metric re-evaluation over an existing run directory.

#include <CLI11.hpp>

#include "cindi/pipeline.hpp"

namespace fs = std::filesystem;
using namespace cindi;

namespace {

struct CommonOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

PipelineConfig load_cfg(const CommonOpts& c) {
    PipelineConfig cfg = c.config_path.empty() ? PipelineConfig{} : load_config(c.config_path);
    if (c.seed_set) {
        cfg.seed = c.seed;
        cfg.synth.seed = c.seed;
    }
    return cfg;
}

void dump_json(const nlohmann::json& j, const fs::path& path) {
    write_text_atomic(path, j.dump(2) + "\n");
}

void write_series(const MultiSeries& s, const fs::path& path) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    write_csv(s, tmp.string());
    fs::rename(tmp, path);
}

// Training scaffolding shared by `train` and `detect`/`impute` re-derivation.
struct Prepared {
    MultiSeries series;
    SplitSpec splits;
    Normalizer norm;
    MultiSeries normalized;
};

Prepared prepare(const PipelineConfig& cfg, const std::string& in_path) {
    Prepared p;
    if (!in_path.empty())
        p.series = load_csv(in_path);
    else
        p.series = resolve_series(cfg);
    p.splits = make_splits(p.series.T, cfg);
    p.norm = fit_normalizer(p.series, p.splits.train);
    p.normalized = p.norm.apply(p.series);
    return p;
}

nlohmann::json normalizer_json(const Normalizer& n) {
    return {{"mean", n.mean}, {"stddev", n.stddev}};
}

Normalizer normalizer_from_json(const nlohmann::json& j) {
    Normalizer n;
    n.mean = j.at("mean").get<std::vector<double>>();
    n.stddev = j.at("stddev").get<std::vector<double>>();
    return n;
}

int cmd_synth(const CommonOpts& common, const std::string& out_path) {
    PipelineConfig cfg = load_cfg(common);
    if (!cfg.use_synth && cfg.csv_path.empty()) cfg.use_synth = true;
    MultiSeries s = synth_generate(cfg.synth);
    write_series(s, out_path);
    std::cout << "wrote " << out_path << " (T=" << s.T << ", D=" << s.D << ")\n";
    return 0;
}

int cmd_train(const CommonOpts& common, const std::string& in_path, const std::string& out_dir) {
    PipelineConfig cfg = load_cfg(common);
    Prepared p = prepare(cfg, in_path);
    auto windows = make_windows(p.normalized, cfg.hyper.k);
    auto train_w = filter_windows(windows, [&](std::size_t t) {
        return p.splits.train.contains(t) && !p.splits.in_validation(t);
    });
    auto val_w = filter_windows(windows, [&](std::size_t t) {
        return p.splits.train.contains(t) && p.splits.in_validation(t);
    });
    TrainConfig tc;
    tc.epochs_max = cfg.epochs_max;
    tc.patience = cfg.patience;
    tc.batch_size = cfg.hyper.batch;
    tc.learning_rate = cfg.hyper.learning_rate;
    tc.seed = cfg.seed;
    FlowModel model(cfg.hyper.to_flow_hyper(p.series.D), cfg.seed);
    auto [fitted, rep] = fit(model, train_w, val_w, tc);
    const fs::path dir = out_dir;
    fs::create_directories(dir);
    write_text_atomic(dir / "checkpoint.json", fitted.to_json().dump());
    dump_json(rep.to_json(), dir / "train_report.json");
    dump_json(normalizer_json(p.norm), dir / "normalizer.json");
    dump_json(config_to_json(cfg), dir / "config.json");
    std::cout << "best validation NLL " << rep.best_val_loss << " (epoch " << rep.best_epoch
              << "); wrote " << (dir / "checkpoint.json").string() << "\n";
    return rep.aborted ? 3 : 0;
}

Normalizer resolve_normalizer(const std::string& norm_path, const Prepared& p) {
    if (norm_path.empty()) return p.norm;
    std::ifstream in(norm_path);
    if (!in) throw Error("cannot open normalizer file " + norm_path);
    nlohmann::json j;
    in >> j;
    return normalizer_from_json(j);
}

int cmd_detect(const CommonOpts& common, const std::string& in_path,
               const std::string& ckpt_path, const std::string& norm_path,
               const std::string& out_path) {
    PipelineConfig cfg = load_cfg(common);
    Prepared p = prepare(cfg, in_path);
    FlowModel model = FlowModel::load(ckpt_path);
    Normalizer norm = resolve_normalizer(norm_path, p);
    MultiSeries normalized = norm.apply(p.series);
    auto scores = score(model, normalized);
    auto clean = detail::clean_train_scores(scores, p.series.labels, model.hyper().window,
                                            p.splits.train);
    Flagging f;
    f.scores = scores;
    f.tau = threshold_from_scores(clean);
    f.smoothing = cfg.smoothing;
    f.mask = flag(scores, f.tau, cfg.smoothing);
    const fs::path tmp = out_path + ".tmp";
    write_scores_csv(f, tmp.string());
    fs::rename(tmp, out_path);
    std::size_t flagged = 0;
    for (auto m : f.mask) flagged += m;
    std::cout << "tau=" << f.tau << ", flagged " << flagged << " of " << f.mask.size()
              << " steps; wrote " << out_path << "\n";
    return 0;
}

int cmd_impute(const CommonOpts& common, const std::string& in_path,
               const std::string& ckpt_path, const std::string& norm_path,
               const std::string& method_name, const std::string& out_path,
               const std::string& changed_path) {
    PipelineConfig cfg = load_cfg(common);
    if (!method_name.empty()) cfg.method = impute_method_from(method_name);
    Prepared p = prepare(cfg, in_path);
    std::vector<std::uint8_t> mask = p.series.labels;

    ImputeResult res;
    if (cfg.method == ImputeMethod::Cindi) {
        if (ckpt_path.empty()) throw Error("impute: method cindi needs --checkpoint");
        FlowModel model = FlowModel::load(ckpt_path);
        Normalizer norm = resolve_normalizer(norm_path, p);
        res = flow_impute(model, p.series, mask, norm);
    } else if (cfg.method == ImputeMethod::Raw) {
        res.series = raw(p.series);
        res.method = "raw";
    } else if (cfg.method == ImputeMethod::Skip) {
        auto kept = skip(p.series, mask, cfg.hyper.k);
        res.series = p.series;
        res.method = "skip";
        std::cout << "skip keeps " << kept.count() << " windows\n";
    } else {
        res = interpolate(p.series, mask, cfg.method);
    }
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
    write_series(res.series, out_path);
    if (!changed_path.empty())
        write_changed_csv({{0, res}}, changed_path);
    std::cout << "method " << res.method << ": changed " << res.changed.size()
              << " sections; wrote " << out_path << "\n";
    return 0;
}

int cmd_select(const CommonOpts& common, const std::string& in_path, const std::string& out_dir) {
    PipelineConfig cfg = load_cfg(common);
    Prepared p = prepare(cfg, in_path);
    SelectionData sd;
    sd.normalized = p.normalized;
    sd.splits = p.splits;
    sd.recon_len = cfg.recon_len;
    sd.recon_starts = choose_recon_starts(p.series.labels, p.splits.evaluation, cfg.hyper.k,
                                          cfg.recon_len, cfg.recon_sections);
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
    SelectionResult res = model_select(sd, sc);

    const fs::path dir = out_dir;
    fs::create_directories(dir / "checkpoints");
    write_text_atomic(dir / "checkpoints" / "selected.json", res.best_model.to_json().dump());
    dump_json(normalizer_json(p.norm), dir / "normalizer.json");
    {
        const fs::path tmp = dir / "candidates.csv.tmp";
        write_candidates_csv(res.reports, tmp.string());
        fs::rename(tmp, dir / "candidates.csv");
    }
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& r : res.reports) cands.push_back(r.to_json());
    dump_json({{"best", res.best.to_json()},
               {"candidates", cands},
               {"recon_starts", res.recon_starts}},
              dir / "candidates.json");
    dump_json(config_to_json(cfg), dir / "config.json");
    std::cout << "evaluated " << res.reports.size() << " candidates; best objective "
              << res.best.objective << "\n";
    return 0;
}

int cmd_run(const CommonOpts& common, const std::string& out_dir) {
    PipelineConfig cfg = load_cfg(common);
    const fs::path dir = out_dir;
    fs::create_directories(dir / "checkpoints");
    dump_json(config_to_json(cfg), dir / "config.json");

    MultiSeries series = resolve_series(cfg);
    write_series(series, dir / "input.csv");

    MultiSeries improved;
    std::vector<std::uint8_t> exclude_mask;
    if (cfg.method == ImputeMethod::Cindi) {
        CindiRunResult run = run_cindi(cfg, series);
        if (!run.error.empty()) std::cerr << "warning: " << run.error << "\n";
        improved = run.improved;
        nlohmann::json recs = nlohmann::json::array();
        for (const auto& r : run.records) recs.push_back(r.to_json());
        dump_json({{"records", recs}, {"converged", run.converged}, {"error", run.error}},
                  dir / "records.json");
        {
            const fs::path tmp = dir / "changed.csv.tmp";
            write_changed_csv(run.impute_trail, tmp.string());
            fs::rename(tmp, dir / "changed.csv");
        }
        if (!run.records.empty()) {
            write_text_atomic(dir / "checkpoints" / "final.json",
                              run.final_model.to_json().dump());
            MultiSeries normalized = run.normalizer.apply(run.improved);
            auto scores = score(run.final_model, normalized);
            Flagging f;
            f.scores = scores;
            f.tau = run.records.back().tau;
            f.smoothing = cfg.smoothing;
            f.mask = flag(scores, f.tau, cfg.smoothing);
            const fs::path tmp = dir / "scores.csv.tmp";
            write_scores_csv(f, tmp.string());
            fs::rename(tmp, dir / "scores.csv");
        }
        std::cout << "loop finished after " << run.records.size() << " iterations"
                  << (run.converged ? " (converged)" : "") << "\n";
    } else {
        BaselineResult base = run_baseline(cfg, series);
        improved = base.improved;
        exclude_mask = base.exclude_mask;
        dump_json({{"records", nlohmann::json::array()},
                   {"converged", true},
                   {"method", impute_method_name(cfg.method)}},
                  dir / "records.json");
        {
            const fs::path tmp = dir / "changed.csv.tmp";
            write_changed_csv({{0, base.impute}}, tmp.string());
            fs::rename(tmp, dir / "changed.csv");
        }
    }
    write_series(improved, dir / "improved.csv");

    // downstream anomaly-detection protocol needs a labeled test split
    SplitSpec splits = make_splits(improved.T, cfg);
    std::size_t pos = 0;
    for (std::size_t t = splits.test.begin; t < splits.test.end; ++t)
        pos += improved.labels[t] ? 1 : 0;
    if (pos > 0 && pos < splits.test.size()) {
        DownstreamResult d = run_downstream(improved, exclude_mask, cfg);
        write_text_atomic(dir / "checkpoints" / "downstream.json",
                          d.selection.best_model.to_json().dump());
        {
            const fs::path tmp = dir / "candidates.csv.tmp";
            write_candidates_csv(d.selection.reports, tmp.string());
            fs::rename(tmp, dir / "candidates.csv");
        }
        write_test_scores_csv(d, splits.test.begin, dir / "test_scores.csv");
        dump_json(d.metrics.to_json(), dir / "metrics.json");
        std::cout << "downstream: AUC " << d.metrics.auc << ", VUS " << d.metrics.vus << ", F1 "
                  << d.metrics.f1 << "\n";
    } else {
        std::cout << "test split has a single class; skipping downstream metrics\n";
    }
    return 0;
}

int cmd_eval(const std::string& run_dir, const std::string& out_path) {
    const fs::path dir = run_dir;
    std::ifstream cin_(dir / "config.json");
    if (!cin_) throw Error("eval: missing config.json in " + run_dir);
    nlohmann::json cj;
    cin_ >> cj;
    ConfigMap map;
    detail::flatten_json(cj, "", map);
    PipelineConfig cfg = config_from_map(map);

    MetricReport m = eval_scores_csv((dir / "test_scores.csv").string(), cfg.vus_buffer);
    // the reconstruction component comes from selection, not the scores
    std::ifstream min_(dir / "metrics.json");
    bool matches = true;
    if (min_) {
        nlohmann::json mj;
        min_ >> mj;
        MetricReport stored = MetricReport::from_json(mj);
        m.reconstruction = stored.reconstruction;
        matches = stored.auc == m.auc && stored.vus == m.vus && stored.f1 == m.f1 &&
                  stored.f1_threshold == m.f1_threshold;
    }
    dump_json(m.to_json(), out_path.empty() ? dir / "metrics_eval.json" : fs::path(out_path));
    std::cout << "AUC " << m.auc << ", VUS " << m.vus << ", F1 " << m.f1
              << (matches ? " (matches stored metrics)" : " (DIFFERS from stored metrics)")
              << "\n";
    return matches ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conditional-flow anomaly detection and imputation pipeline"};
    app.require_subcommand(1);

    CommonOpts common;
    std::string in_path, out_path, out_dir = "runs/latest", ckpt_path, norm_path;
    std::string method_name, changed_path, run_dir;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "config file (sections or JSON)");
        sub->add_option("--seed", common.seed, "override the config seed")
            ->each([&](const std::string&) { common.seed_set = true; });
    };

    auto* synth = app.add_subcommand("synth", "generate a synthetic series");
    add_common(synth);
    synth->add_option("--out", out_path, "output CSV")->required();

    auto* train = app.add_subcommand("train", "fit one flow on the training split");
    add_common(train);
    train->add_option("--in", in_path, "input CSV (else the config data source)");
    train->add_option("--out-dir", out_dir, "output directory");

    auto* detect_cmd = app.add_subcommand("detect", "score a series and flag anomalies");
    add_common(detect_cmd);
    detect_cmd->add_option("--in", in_path, "input CSV");
    detect_cmd->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
    detect_cmd->add_option("--normalizer", norm_path, "normalizer JSON (else refit on input)");
    detect_cmd->add_option("--out", out_path, "scores CSV")->required();

    auto* impute_cmd = app.add_subcommand("impute", "replace labelled sections");
    add_common(impute_cmd);
    impute_cmd->add_option("--in", in_path, "input CSV");
    impute_cmd->add_option("--method", method_name, "imputation method");
    impute_cmd->add_option("--checkpoint", ckpt_path, "model checkpoint (cindi)");
    impute_cmd->add_option("--normalizer", norm_path, "normalizer JSON");
    impute_cmd->add_option("--out", out_path, "imputed CSV")->required();
    impute_cmd->add_option("--changed", changed_path, "changed-section ledger CSV");

    auto* run = app.add_subcommand("run", "full pipeline per the config");
    add_common(run);
    run->add_option("--out-dir", out_dir, "run directory");

    auto* select = app.add_subcommand("select", "hyperparameter search");
    add_common(select);
    select->add_option("--in", in_path, "input CSV (else the config data source)");
    select->add_option("--out-dir", out_dir, "output directory");

    auto* eval_cmd = app.add_subcommand("eval", "recompute metrics from an existing run");
    eval_cmd->add_option("--run-dir", run_dir, "run directory")->required();
    eval_cmd->add_option("--out", out_path, "metrics output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(common, out_path);
        if (train->parsed()) return cmd_train(common, in_path, out_dir);
        if (detect_cmd->parsed())
            return cmd_detect(common, in_path, ckpt_path, norm_path, out_path);
        if (impute_cmd->parsed())
            return cmd_impute(common, in_path, ckpt_path, norm_path, method_name, out_path,
                              changed_path);
        if (run->parsed()) return cmd_run(common, out_dir);
        if (select->parsed()) return cmd_select(common, in_path, out_dir);
        if (eval_cmd->parsed()) return cmd_eval(run_dir, out_path);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
