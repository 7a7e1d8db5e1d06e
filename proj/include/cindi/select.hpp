// Hyperparameter search: restart CMA-ES over flow configurations, ranking
// candidates by a labeled objective (AUC/VUS/reconstruction balance) or an
// unlabeled one (validation and evaluation NLL plus reconstruction).

#pragma once

#include <future>
#include <mutex>

#include "cindi/impute.hpp"
#include "cindi/train.hpp"

namespace cindi {

// ---------------------------------------------------------------------------
// CMA-ES

struct CmaesOptions {
    std::size_t population = 0;  // 0 -> 4 + floor(3 ln n)
    std::size_t budget = 1000;   // total objective evaluations
    std::uint64_t seed = 0;
    std::size_t workers = 1;     // parallel evaluations within a generation
    double sigma0 = 0.3;         // initial step size in unit-box space
};

struct CmaesResult {
    std::vector<double> best_x;
    double best_f = std::numeric_limits<double>::infinity();
    std::vector<double> history;  // best-so-far after every evaluation
    std::size_t evaluations = 0;
    std::size_t restarts = 0;
};

namespace detail {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
// eigenvalues and an orthonormal matrix of column eigenvectors.
inline void jacobi_eigen(const Matrix& a_in, std::vector<double>& eigvals, Matrix& eigvecs) {
    const std::size_t n = a_in.rows;
    Matrix a = a_in;
    eigvecs = Matrix::zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) eigvecs.at(i, i) = 1.0;
    for (std::size_t sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a.at(i, j) * a.at(i, j);
        if (off < 1e-28) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a.at(p, q)) < 1e-300) continue;
                const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * a.at(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a.at(i, p), aiq = a.at(i, q);
                    a.at(i, p) = c * aip - s * aiq;
                    a.at(i, q) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a.at(p, i), aqi = a.at(q, i);
                    a.at(p, i) = c * api - s * aqi;
                    a.at(q, i) = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = eigvecs.at(i, p), viq = eigvecs.at(i, q);
                    eigvecs.at(i, p) = c * vip - s * viq;
                    eigvecs.at(i, q) = s * vip + c * viq;
                }
            }
    }
    eigvals.resize(n);
    for (std::size_t i = 0; i < n; ++i) eigvals[i] = a.at(i, i);
}

}  // namespace detail

// Minimize f over a box. Standard (mu/mu_w, lambda)-CMA-ES in the unit
// box: weighted recombination, rank-one plus rank-mu covariance update,
// cumulative step-size adaptation; restarts with doubled population on
// stagnation until the budget is exhausted. Out-of-box samples are
// clipped for evaluation with a squared-distance penalty. The objective
// receives the evaluation index so callers can seed per-candidate work.
inline CmaesResult cmaes_minimize(
    const std::function<double(const std::vector<double>&, std::size_t)>& f, std::size_t dim,
    const std::vector<double>& lo, const std::vector<double>& hi, const CmaesOptions& opt) {
    if (dim == 0 || lo.size() != dim || hi.size() != dim) throw Error("cmaes: bad bounds");
    for (std::size_t i = 0; i < dim; ++i)
        if (!(hi[i] > lo[i])) throw Error("cmaes: empty box");
    std::size_t lambda = opt.population;
    if (lambda == 0)
        lambda = 4 + static_cast<std::size_t>(std::floor(3.0 * std::log(double(dim))));
    if (lambda < 4) throw Error("cmaes: population must be >= 4");
    if (opt.budget < lambda) throw Error("cmaes: budget smaller than one generation");

    auto rng = make_rng(opt.seed, 23);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    auto to_real = [&](const std::vector<double>& u) {
        std::vector<double> x(dim);
        for (std::size_t i = 0; i < dim; ++i) x[i] = lo[i] + u[i] * (hi[i] - lo[i]);
        return x;
    };

    CmaesResult result;
    const double n = static_cast<double>(dim);
    const double chi_n = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

    while (result.evaluations + lambda <= opt.budget) {
        // (re)initialize one run
        const std::size_t mu = lambda / 2;
        std::vector<double> weights(mu);
        double wsum = 0.0;
        for (std::size_t i = 0; i < mu; ++i) {
            weights[i] = std::log(double(mu) + 0.5) - std::log(double(i + 1));
            wsum += weights[i];
        }
        for (auto& w : weights) w /= wsum;
        double mueff = 0.0;
        for (double w : weights) mueff += w * w;
        mueff = 1.0 / mueff;

        const double cs = (mueff + 2.0) / (n + mueff + 5.0);
        const double ds =
            1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (n + 1.0)) - 1.0) + cs;
        const double cc = (4.0 + mueff / n) / (n + 4.0 + 2.0 * mueff / n);
        const double c1 = 2.0 / ((n + 1.3) * (n + 1.3) + mueff);
        const double cmu = std::min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) /
                                                  ((n + 2.0) * (n + 2.0) + mueff));

        std::vector<double> mean(dim);
        for (auto& m : mean) m = unif(rng);
        double sigma = opt.sigma0;
        Matrix C = Matrix::zeros(dim, dim);
        for (std::size_t i = 0; i < dim; ++i) C.at(i, i) = 1.0;
        std::vector<double> ps(dim, 0.0), pc(dim, 0.0);
        std::vector<double> run_best_hist;
        std::size_t gen = 0;
        bool stagnated = false;

        while (!stagnated && result.evaluations + lambda <= opt.budget) {
            std::vector<double> eigvals;
            Matrix B;
            detail::jacobi_eigen(C, eigvals, B);
            double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
            for (auto& ev : eigvals) {
                ev = std::sqrt(std::max(ev, 1e-30));
                dmax = std::max(dmax, ev);
                dmin = std::min(dmin, ev);
            }

            struct Sample {
                std::vector<double> u;  // unclipped unit-box coordinates
                std::vector<double> y;  // step C^{1/2} n
                double fit = 0.0;
            };
            std::vector<Sample> pop(lambda);
            for (std::size_t s = 0; s < lambda; ++s) {
                std::vector<double> z(dim);
                for (auto& v : z) v = gauss(rng);
                pop[s].y.assign(dim, 0.0);
                for (std::size_t i = 0; i < dim; ++i)
                    for (std::size_t j = 0; j < dim; ++j)
                        pop[s].y[i] += B.at(i, j) * eigvals[j] * z[j];
                pop[s].u.resize(dim);
                for (std::size_t i = 0; i < dim; ++i)
                    pop[s].u[i] = mean[i] + sigma * pop[s].y[i];
            }

            auto eval_one = [&](Sample& smp, std::size_t eval_idx) {
                std::vector<double> clipped = smp.u;
                double penalty = 0.0;
                for (std::size_t i = 0; i < dim; ++i) {
                    const double c = std::clamp(clipped[i], 0.0, 1.0);
                    penalty += (clipped[i] - c) * (clipped[i] - c);
                    clipped[i] = c;
                }
                double v;
                try {
                    v = f(to_real(clipped), eval_idx);
                } catch (...) {
                    v = std::numeric_limits<double>::infinity();
                }
                if (std::isnan(v)) v = std::numeric_limits<double>::infinity();
                smp.fit = v + penalty;
            };

            const std::size_t base_idx = result.evaluations;
            if (opt.workers > 1) {
                std::vector<std::future<void>> futs;
                std::size_t next = 0;
                std::mutex mx;
                for (std::size_t w = 0; w < std::min<std::size_t>(opt.workers, lambda); ++w)
                    futs.push_back(std::async(std::launch::async, [&]() {
                        for (;;) {
                            std::size_t mine;
                            {
                                std::lock_guard<std::mutex> g(mx);
                                if (next >= lambda) return;
                                mine = next++;
                            }
                            eval_one(pop[mine], base_idx + mine);
                        }
                    }));
                for (auto& fu : futs) fu.get();
            } else {
                for (std::size_t s = 0; s < lambda; ++s) eval_one(pop[s], base_idx + s);
            }
            result.evaluations += lambda;

            std::vector<std::size_t> order(lambda);
            for (std::size_t i = 0; i < lambda; ++i) order[i] = i;
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return pop[a].fit < pop[b].fit; });

            for (std::size_t s = 0; s < lambda; ++s) {
                const Sample& smp = pop[order[s]];
                if (smp.fit < result.best_f) {
                    result.best_f = smp.fit;
                    std::vector<double> clipped = smp.u;
                    for (auto& c : clipped) c = std::clamp(c, 0.0, 1.0);
                    result.best_x = to_real(clipped);
                }
            }
            for (std::size_t s = 0; s < lambda; ++s) result.history.push_back(result.best_f);

            // recombination
            std::vector<double> new_mean(dim, 0.0), yw(dim, 0.0);
            for (std::size_t i = 0; i < mu; ++i) {
                const Sample& smp = pop[order[i]];
                for (std::size_t d = 0; d < dim; ++d) {
                    new_mean[d] += weights[i] * smp.u[d];
                    yw[d] += weights[i] * smp.y[d];
                }
            }

            // step-size path (uses C^{-1/2} yw)
            std::vector<double> cinv_yw(dim, 0.0);
            for (std::size_t i = 0; i < dim; ++i) {
                double proj = 0.0;
                for (std::size_t r = 0; r < dim; ++r) proj += B.at(r, i) * yw[r];
                proj /= eigvals[i];
                for (std::size_t r = 0; r < dim; ++r) cinv_yw[r] += B.at(r, i) * proj;
            }
            double ps_norm2 = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                ps[d] = (1.0 - cs) * ps[d] +
                        std::sqrt(cs * (2.0 - cs) * mueff) * cinv_yw[d];
                ps_norm2 += ps[d] * ps[d];
            }
            const double ps_norm = std::sqrt(ps_norm2);
            const double hsig_thresh =
                (1.4 + 2.0 / (n + 1.0)) * chi_n *
                std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * double(gen + 1)));
            const double hsig = ps_norm < hsig_thresh ? 1.0 : 0.0;

            for (std::size_t d = 0; d < dim; ++d)
                pc[d] = (1.0 - cc) * pc[d] + hsig * std::sqrt(cc * (2.0 - cc) * mueff) * yw[d];

            // covariance update: rank-one + rank-mu
            const double c1a = c1 * (1.0 - (1.0 - hsig * hsig) * cc * (2.0 - cc));
            for (std::size_t i = 0; i < dim; ++i)
                for (std::size_t j = 0; j < dim; ++j) {
                    double rank_mu = 0.0;
                    for (std::size_t s = 0; s < mu; ++s)
                        rank_mu += weights[s] * pop[order[s]].y[i] * pop[order[s]].y[j];
                    C.at(i, j) = (1.0 - c1a - cmu) * C.at(i, j) + c1 * pc[i] * pc[j] +
                                 cmu * rank_mu;
                }

            sigma *= std::exp((cs / ds) * (ps_norm / chi_n - 1.0));
            mean = new_mean;
            ++gen;

            // stagnation (no recent improvement, collapsed step size, or
            // ill-conditioned covariance) triggers the next restart
            run_best_hist.push_back(pop[order[0]].fit);
            const std::size_t horizon = 10 + 30 * dim / lambda;
            if (run_best_hist.size() >= 2 * horizon) {
                const auto split = run_best_hist.end() - static_cast<std::ptrdiff_t>(horizon);
                const double earlier = *std::min_element(run_best_hist.begin(), split);
                const double recent = *std::min_element(split, run_best_hist.end());
                if (recent > earlier - 1e-12 * std::max(1.0, std::abs(earlier)))
                    stagnated = true;
            }
            if (sigma * dmax < 1e-12) stagnated = true;
            if (dmax / dmin > 1e7) stagnated = true;
        }
        if (!stagnated) break;  // budget exhausted inside the run
        lambda *= 2;            // restart with doubled population
        ++result.restarts;
    }
    return result;
}

// convenience overload without the evaluation index
inline CmaesResult cmaes_minimize(const std::function<double(const std::vector<double>&)>& f,
                                  std::size_t dim, const std::vector<double>& lo,
                                  const std::vector<double>& hi, const CmaesOptions& opt) {
    return cmaes_minimize([&f](const std::vector<double>& x, std::size_t) { return f(x); }, dim,
                          lo, hi, opt);
}

// ---------------------------------------------------------------------------
// Objectives

enum class ObjectiveKind { Phi, Psi };

inline const char* objective_name(ObjectiveKind k) {
    return k == ObjectiveKind::Phi ? "phi" : "psi";
}

inline ObjectiveKind objective_from(const std::string& s) {
    if (s == "phi") return ObjectiveKind::Phi;
    if (s == "psi") return ObjectiveKind::Psi;
    throw Error("unknown objective: " + s);
}

// Labeled objective: balance of detection quality on the evaluation set
// and reconstruction of expected behavior. Zero means perfect detection
// and reconstruction.
inline double objective_phi(double auc, double vus, double delta, bool include_recon = true) {
    return 0.3 * (1.0 - auc) + 0.7 * (1.0 - vus) + (include_recon ? delta : 0.0);
}

// Weights for the unlabeled objective; fixed for up to 10 channels and
// scaled down heuristically above that.
inline std::pair<double, double> psi_weights(std::size_t channels) {
    if (channels <= 10) return {0.1, 0.5};
    const double scale = 10.0 / static_cast<double>(channels);
    return {0.1 * scale, 0.5 * scale};
}

// Unlabeled objective: weighted mean NLL on the validation and evaluation
// sets plus the reconstruction metric.
inline double objective_psi(double val_nll, double eval_nll, double delta, std::size_t channels,
                            bool include_recon = true) {
    auto [lambda, beta] = psi_weights(channels);
    return lambda * val_nll + beta * eval_nll + (include_recon ? delta : 0.0);
}

// ---------------------------------------------------------------------------
// Hyperparameter space

struct HyperParams {
    std::size_t k = 24;
    std::size_t n_layers = 4;
    std::size_t hidden = 64;
    std::size_t embedding = 32;
    std::size_t batch = 128;
    double learning_rate = 1e-3;
    EncoderKind encoder = EncoderKind::Base;

    FlowHyper to_flow_hyper(std::size_t channels) const {
        FlowHyper h;
        h.channels = channels;
        h.window = k;
        h.layers = n_layers;
        h.hidden = hidden;
        h.embedding = embedding;
        h.encoder = encoder;
        return h;
    }

    nlohmann::json to_json() const {
        return {{"k", k},          {"n_layers", n_layers},
                {"hidden", hidden}, {"embedding", embedding},
                {"batch", batch},   {"learning_rate", learning_rate},
                {"encoder", encoder_name(encoder)}};
    }
};

struct HyperBounds {
    std::size_t k_lo = 8, k_hi = 96;
    std::size_t layers_lo = 2, layers_hi = 8;
    std::size_t hidden_lo = 16, hidden_hi = 128;
    std::size_t embedding_lo = 8, embedding_hi = 64;
    std::size_t batch_lo = 32, batch_hi = 256;
    double log10_lr_lo = -4.0, log10_lr_hi = -2.0;  // 1e-4 .. 1e-2

    static constexpr std::size_t dim = 6;

    std::vector<double> lower() const {
        return {double(k_lo), double(layers_lo), double(hidden_lo), double(embedding_lo),
                double(batch_lo), log10_lr_lo};
    }
    std::vector<double> upper() const {
        return {double(k_hi), double(layers_hi), double(hidden_hi), double(embedding_hi),
                double(batch_hi), log10_lr_hi};
    }

    HyperParams decode(const std::vector<double>& x, EncoderKind enc) const {
        auto round_clip = [](double v, std::size_t lo, std::size_t hi) {
            const long r = std::lround(v);
            return std::min(hi, std::max(lo, static_cast<std::size_t>(std::max(0L, r))));
        };
        HyperParams h;
        h.k = round_clip(x[0], k_lo, k_hi);
        h.n_layers = round_clip(x[1], layers_lo, layers_hi);
        h.hidden = round_clip(x[2], hidden_lo, hidden_hi);
        h.embedding = round_clip(x[3], embedding_lo, embedding_hi);
        h.batch = round_clip(x[4], batch_lo, batch_hi);
        h.learning_rate = std::pow(10.0, std::clamp(x[5], log10_lr_lo, log10_lr_hi));
        h.encoder = enc;
        return h;
    }
};

// ---------------------------------------------------------------------------
// Model selection

struct CandidateReport {
    HyperParams hyper;
    double objective = std::numeric_limits<double>::infinity();
    double auc = std::numeric_limits<double>::quiet_NaN();
    double vus = std::numeric_limits<double>::quiet_NaN();
    double delta = std::numeric_limits<double>::quiet_NaN();
    double val_nll = std::numeric_limits<double>::quiet_NaN();
    double eval_nll = std::numeric_limits<double>::quiet_NaN();
    std::size_t eval_index = 0;
    bool failed = false;
    std::string message;

    nlohmann::json to_json() const {
        return {{"hyper", hyper.to_json()}, {"objective", objective}, {"auc", auc},
                {"vus", vus},               {"delta", delta},         {"val_nll", val_nll},
                {"eval_nll", eval_nll},     {"eval_index", eval_index}, {"failed", failed},
                {"message", message}};
    }
};

// Everything a selection run needs: the normalized series, fixed splits,
// labels, and the fixed reconstruction starts shared by all candidates.
struct SelectionData {
    MultiSeries normalized;                   // full series in normalized units
    SplitSpec splits;                         // train/eval/test + validation blocks
    std::vector<std::uint8_t> exclude_mask;   // steps no training window may touch (may be empty)
    std::vector<std::size_t> recon_starts;    // fixed M
    std::size_t recon_len = 48;               // S
    std::size_t vus_buffer = 16;
    std::size_t smoothing = 3;
};

struct SelectionConfig {
    EncoderKind encoder = EncoderKind::Base;
    ObjectiveKind objective = ObjectiveKind::Phi;
    bool include_recon = true;
    std::size_t budget = 40;
    std::size_t population = 8;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    HyperBounds bounds;
    std::size_t epochs_max = 60;
    std::size_t patience = 6;
};

struct SelectionResult {
    FlowModel best_model;
    CandidateReport best;
    std::vector<CandidateReport> reports;
    CmaesResult search;
    std::vector<std::size_t> recon_starts;  // fingerprint of the fixed M set
};

namespace detail {

inline std::pair<WindowedSeries, WindowedSeries> train_val_windows(
    const SelectionData& data, std::size_t k, const std::vector<std::uint8_t>& exclude) {
    auto windows = make_windows(data.normalized, k);
    const Range train = data.splits.train;
    auto overlaps_excluded = [&](std::size_t t) {
        if (exclude.empty()) return false;
        for (std::size_t j = t - k; j <= t; ++j)
            if (exclude[j]) return true;
        return false;
    };
    auto train_w = filter_windows(windows, [&](std::size_t t) {
        return train.contains(t) && !data.splits.in_validation(t) && !overlaps_excluded(t);
    });
    auto val_w = filter_windows(windows, [&](std::size_t t) {
        return train.contains(t) && data.splits.in_validation(t) && !overlaps_excluded(t);
    });
    return {std::move(train_w), std::move(val_w)};
}

}  // namespace detail

// Train one candidate and score it under the configured objective.
inline CandidateReport evaluate_candidate(const SelectionData& data, const SelectionConfig& cfg,
                                          const HyperParams& hp, std::uint64_t cand_seed,
                                          FlowModel* fitted_out = nullptr) {
    CandidateReport rep;
    rep.hyper = hp;
    const std::size_t D = data.normalized.D;

    auto [train_w, val_w] = detail::train_val_windows(data, hp.k, data.exclude_mask);
    if (train_w.count() == 0 || val_w.count() == 0)
        throw Error("selection: no training or validation windows at k=" + std::to_string(hp.k));

    FlowModel model(hp.to_flow_hyper(D), cand_seed);
    TrainConfig tc;
    tc.epochs_max = cfg.epochs_max;
    tc.patience = cfg.patience;
    tc.batch_size = hp.batch;
    tc.learning_rate = hp.learning_rate;
    tc.seed = cand_seed;
    auto [fitted, trep] = fit(model, train_w, val_w, tc);
    if (trep.aborted) {
        rep.failed = true;
        rep.message = trep.diagnostic;
        return rep;
    }

    const Range eval_r = data.splits.evaluation;
    rep.delta = reconstruction_delta(fitted, data.normalized.values, data.recon_starts,
                                     data.recon_len);

    if (cfg.objective == ObjectiveKind::Phi) {
        auto scores_all = score(fitted, data.normalized);
        std::vector<double> eval_scores(scores_all.begin() + static_cast<std::ptrdiff_t>(eval_r.begin),
                                        scores_all.begin() + static_cast<std::ptrdiff_t>(eval_r.end));
        std::vector<std::uint8_t> eval_labels(
            data.normalized.labels.begin() + static_cast<std::ptrdiff_t>(eval_r.begin),
            data.normalized.labels.begin() + static_cast<std::ptrdiff_t>(eval_r.end));
        rep.auc = auc_roc(eval_scores, eval_labels);
        rep.vus = vus_roc(eval_scores, eval_labels, data.vus_buffer);
        rep.objective = objective_phi(rep.auc, rep.vus, rep.delta, cfg.include_recon);
    } else {
        rep.val_nll = nll_loss(fitted, val_w);
        auto eval_w = filter_windows(make_windows(data.normalized, hp.k),
                                     [&](std::size_t t) { return eval_r.contains(t); });
        if (eval_w.count() == 0) throw Error("selection: evaluation range has no windows");
        rep.eval_nll = nll_loss(fitted, eval_w);
        rep.objective = objective_psi(rep.val_nll, rep.eval_nll, rep.delta, D, cfg.include_recon);
    }
    if (fitted_out) *fitted_out = std::move(fitted);
    return rep;
}

// CMA-ES over the hyperparameter box. Every candidate trains with early
// stopping, is scored by the objective, and lands in the report list;
// failures score +inf. The reconstruction start set stays fixed across
// candidates.
inline SelectionResult model_select(const SelectionData& data, const SelectionConfig& cfg) {
    SelectionResult out;
    out.recon_starts = data.recon_starts;
    std::mutex mx;
    bool have_best = false;

    auto objective = [&](const std::vector<double>& x, std::size_t eval_idx) {
        const HyperParams hp = cfg.bounds.decode(x, cfg.encoder);
        const std::uint64_t cand_seed = cfg.seed * 0x9e3779b97f4a7c15ULL + eval_idx;
        CandidateReport rep;
        FlowModel fitted;
        try {
            rep = evaluate_candidate(data, cfg, hp, cand_seed, &fitted);
        } catch (const Error& e) {
            rep.hyper = hp;
            rep.failed = true;
            rep.message = e.what();
        }
        rep.eval_index = eval_idx;
        const double obj = rep.failed ? std::numeric_limits<double>::infinity() : rep.objective;
        {
            std::lock_guard<std::mutex> g(mx);
            out.reports.push_back(rep);
            // deterministic winner regardless of worker completion order
            const bool better = !rep.failed &&
                                (!have_best || rep.objective < out.best.objective ||
                                 (rep.objective == out.best.objective &&
                                  rep.eval_index < out.best.eval_index));
            if (better) {
                out.best = rep;
                out.best_model = std::move(fitted);
                have_best = true;
            }
        }
        return obj;
    };

    CmaesOptions copt;
    copt.population = cfg.population;
    copt.budget = cfg.budget;
    copt.seed = cfg.seed;
    copt.workers = cfg.workers;
    out.search = cmaes_minimize(objective, HyperBounds::dim, cfg.bounds.lower(),
                                cfg.bounds.upper(), copt);

    std::sort(out.reports.begin(), out.reports.end(),
              [](const CandidateReport& a, const CandidateReport& b) {
                  return a.eval_index < b.eval_index;
              });
    if (!have_best) throw Error("selection: every candidate failed");
    return out;
}

inline void write_candidates_csv(const std::vector<CandidateReport>& reports,
                                 const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("write_candidates_csv: cannot open " + path);
    out << "eval_index,objective,auc,vus,delta,val_nll,eval_nll,k,n_layers,hidden,embedding,"
           "batch,learning_rate,encoder,failed\n";
    for (const auto& r : reports) {
        out << r.eval_index << "," << format_value(r.objective) << "," << format_value(r.auc)
            << "," << format_value(r.vus) << "," << format_value(r.delta) << ","
            << format_value(r.val_nll) << "," << format_value(r.eval_nll) << "," << r.hyper.k
            << "," << r.hyper.n_layers << "," << r.hyper.hidden << "," << r.hyper.embedding << ","
            << r.hyper.batch << "," << format_value(r.hyper.learning_rate) << ","
            << encoder_name(r.hyper.encoder) << "," << (r.failed ? 1 : 0) << "\n";
    }
}

}  // namespace cindi
