// Unsupervised negative log-likelihood training with seeded shuffling,
// Adam updates, and early stopping on a validation hold-out.

#pragma once

#include "cindi/flow.hpp"
#include "cindi/series.hpp"

namespace cindi {

struct TrainConfig {
    std::size_t epochs_max = 300;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    std::size_t patience = 10;
    std::uint64_t seed = 0;

    void validate() const {
        if (epochs_max == 0 || batch_size == 0 || patience == 0)
            throw Error("train config: counts must be positive");
        if (!(learning_rate > 0.0)) throw Error("train config: learning rate must be positive");
        if (patience > epochs_max) throw Error("train config: patience exceeds epochs_max");
    }
};

struct TrainReport {
    std::vector<double> train_loss;  // per epoch
    std::vector<double> val_loss;    // per epoch, after the epoch's updates
    double initial_val_loss = 0.0;   // before any update
    // best epoch index, or -1 when no epoch improved on the initial state
    std::ptrdiff_t best_epoch = -1;
    double best_val_loss = 0.0;
    bool aborted = false;
    std::string diagnostic;

    nlohmann::json to_json() const {
        return {{"train_loss", train_loss},   {"val_loss", val_loss},
                {"initial_val_loss", initial_val_loss}, {"best_epoch", best_epoch},
                {"best_val_loss", best_val_loss}, {"aborted", aborted},
                {"diagnostic", diagnostic}};
    }
};

// Mean negative log-likelihood of a window batch under the model.
inline double nll_loss(const FlowModel& model, const Matrix& x, const Matrix& ctx) {
    if (x.rows == 0) throw Error("nll_loss: empty batch");
    auto ll = model.log_likelihood_batch(x, ctx);
    double s = 0.0;
    for (double v : ll) s += v;
    return -s / static_cast<double>(ll.size());
}

inline double nll_loss(const FlowModel& model, const WindowedSeries& w) {
    return nll_loss(model, w.x, w.ctx);
}

namespace detail {
inline Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows, std::size_t lo,
                        std::size_t hi) {
    Matrix out(hi - lo, m.cols);
    for (std::size_t r = lo; r < hi; ++r)
        std::copy(m.data.begin() + static_cast<std::ptrdiff_t>(rows[r] * m.cols),
                  m.data.begin() + static_cast<std::ptrdiff_t>((rows[r] + 1) * m.cols),
                  out.data.begin() + static_cast<std::ptrdiff_t>((r - lo) * m.cols));
    return out;
}
}  // namespace detail

// Fit a copy of the model on training windows, tracking validation NLL
// each epoch. Returns parameters of the best-validation epoch; stops
// after `patience` epochs without improvement. A non-finite loss aborts
// with the last good snapshot.
inline std::pair<FlowModel, TrainReport> fit(const FlowModel& init, const WindowedSeries& train,
                                             const WindowedSeries& val, const TrainConfig& cfg) {
    cfg.validate();
    if (train.count() == 0) throw Error("fit: no training windows");
    if (val.count() == 0) throw Error("fit: no validation windows");

    FlowModel model = init;
    TrainReport rep;
    AdamState adam(model.params().values.size());
    auto rng = make_rng(cfg.seed, 11);

    rep.initial_val_loss = nll_loss(model, val);
    std::vector<double> best_params = model.params().values;
    double best_val = rep.initial_val_loss;
    std::ptrdiff_t best_epoch = -1;
    std::size_t epochs_since_best = 0;

    std::vector<std::size_t> order(train.count());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs_max; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        bool bad = false;
        for (std::size_t lo = 0; lo < order.size() && !bad; lo += cfg.batch_size) {
            const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
            Matrix bx = detail::take_rows(train.x, order, lo, hi);
            Matrix bc = detail::take_rows(train.ctx, order, lo, hi);
            try {
                Tape tape(&model.params());
                FlowGraph g = model.build_forward(tape, bx, bc);
                Tape::Id loss = tape.scale(tape.sum(g.loglik),
                                           -1.0 / static_cast<double>(hi - lo));
                const double lv = tape.value(loss).data[0];
                if (!std::isfinite(lv)) {
                    rep.diagnostic = "non-finite loss in epoch " + std::to_string(epoch);
                    bad = true;
                    break;
                }
                model.params().zero_grads();
                tape.backward(loss);
                adam_step(model.params(), adam, cfg.learning_rate);
                epoch_loss += lv * static_cast<double>(hi - lo);
                seen += hi - lo;
            } catch (const Error& e) {
                rep.diagnostic = std::string("epoch ") + std::to_string(epoch) + ": " + e.what();
                bad = true;
            }
        }
        if (bad) {
            rep.aborted = true;
            break;
        }
        rep.train_loss.push_back(epoch_loss / static_cast<double>(seen));

        double vl;
        try {
            vl = nll_loss(model, val);
        } catch (const Error& e) {
            rep.diagnostic = std::string("validation epoch ") + std::to_string(epoch) + ": " + e.what();
            rep.aborted = true;
            break;
        }
        if (!std::isfinite(vl)) {
            rep.diagnostic = "non-finite validation loss in epoch " + std::to_string(epoch);
            rep.aborted = true;
            break;
        }
        rep.val_loss.push_back(vl);
        if (vl < best_val) {
            best_val = vl;
            best_epoch = static_cast<std::ptrdiff_t>(epoch);
            best_params = model.params().values;
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
            if (epochs_since_best >= cfg.patience) break;  // early stop
        }
    }

    model.params().values = best_params;
    rep.best_epoch = best_epoch;
    rep.best_val_loss = best_val;
    return {std::move(model), std::move(rep)};
}

}  // namespace cindi
